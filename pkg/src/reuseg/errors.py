"""Exception hierarchy shared across the engine."""


class ReusegError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ReusegError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(ReusegError):
    """A configuration value violates a structural constraint."""


class InputError(ReusegError):
    """Caller-supplied data (images, prompts, token ids, paths) is invalid."""


class OutputError(ReusegError):
    """Writing an output file failed."""


class WeightFormatError(ReusegError):
    """Base class for weight-container load failures."""


class BadMagicError(WeightFormatError):
    """The file does not start with the container magic bytes."""


class TruncatedContainerError(WeightFormatError):
    """The file ended before the declared payload, names the offending tensor."""


class MissingParameterError(WeightFormatError):
    """The container lacks parameters the config requires, names them."""


class DuplicateParameterError(WeightFormatError):
    """A parameter name appears more than once in the container."""


class ShapeMismatchError(WeightFormatError):
    """A stored tensor's shape disagrees with the config, names the tensor."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from reuseg import Engine, random_init, tiny_config


@pytest.fixture(scope="session")
def tiny_cfg():
    return tiny_config()


@pytest.fixture(scope="session")
def tiny_store(tiny_cfg):
    return random_init(tiny_cfg, 42)


@pytest.fixture()
def engine(tiny_store):
    return Engine(tiny_store)


@pytest.fixture(scope="session")
def frames():
    """A handful of deterministic uint8 test frames at the tiny image size."""
    rng = np.random.default_rng(7)
    return [rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8) for _ in range(4)]


PROMPTS = ("grass", "lawn", "flat", "park")


@pytest.fixture(scope="session")
def prompts():
    return PROMPTS

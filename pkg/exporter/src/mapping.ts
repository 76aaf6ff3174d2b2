// Source-checkpoint parameter names -> container parameter names.
//
// The source layout is the familiar HuggingFace-style CLIP segmentation
// checkpoint: a frozen dual encoder under "clip." plus a FiLM-conditioned
// decoder under "decoder.". The engine's container uses its own flat naming,
// gamma/beta for norm parameters, and per-block q/k/v/out attention linears,
// which the source conveniently also keeps separate. All weights are stored
// (out, in, ...) on both sides, so mapping is renaming, never transposition.
//
// Two deliberate asymmetries:
//  - The source patch embedding is a bias-free convolution; the container
//    requires a bias vector, so the exporter synthesizes zeros for it.
//  - The source carries parameters the engine has no slot for (the
//    contrastive logit scale, the vision pre/post layer norms, the visual
//    projection, position-id index buffers). Those are skipped and listed in
//    the manifest rather than treated as errors.

import { ModelConfig, parameterShapes } from "./config.js";

// The engine consumes hidden states exactly as each transformer block emits
// them: after the block's residual add, before any following normalization.
// The decoder weights only make sense for activations taken that way.
export const TAP_CONVENTION =
  "post-block residual stream (hidden state after each block's residual add, no final layer norm applied)";

/** Container parameters that legitimately have no source tensor. */
export const SYNTHESIZED_ZEROS = new Set(["vision.patch_embed.bias"]);

const BLOCK_SUFFIX: Record<string, string> = {
  "ln1.gamma": "layer_norm1.weight",
  "ln1.beta": "layer_norm1.bias",
  "attn.q.weight": "self_attn.q_proj.weight",
  "attn.q.bias": "self_attn.q_proj.bias",
  "attn.k.weight": "self_attn.k_proj.weight",
  "attn.k.bias": "self_attn.k_proj.bias",
  "attn.v.weight": "self_attn.v_proj.weight",
  "attn.v.bias": "self_attn.v_proj.bias",
  "attn.out.weight": "self_attn.out_proj.weight",
  "attn.out.bias": "self_attn.out_proj.bias",
  "ln2.gamma": "layer_norm2.weight",
  "ln2.beta": "layer_norm2.bias",
  "mlp.fc1.weight": "mlp.fc1.weight",
  "mlp.fc1.bias": "mlp.fc1.bias",
  "mlp.fc2.weight": "mlp.fc2.weight",
  "mlp.fc2.bias": "mlp.fc2.bias",
};

const SINGLES: Record<string, string> = {
  "vision.patch_embed.weight": "clip.vision_model.embeddings.patch_embedding.weight",
  "vision.cls_embed": "clip.vision_model.embeddings.class_embedding",
  "vision.pos_embed": "clip.vision_model.embeddings.position_embedding.weight",
  "text.token_embed": "clip.text_model.embeddings.token_embedding.weight",
  "text.pos_embed": "clip.text_model.embeddings.position_embedding.weight",
  "text.ln_final.gamma": "clip.text_model.final_layer_norm.weight",
  "text.ln_final.beta": "clip.text_model.final_layer_norm.bias",
  "text.proj.weight": "clip.text_projection.weight",
  "decoder.film_mul.weight": "decoder.film_mul.weight",
  "decoder.film_mul.bias": "decoder.film_mul.bias",
  "decoder.film_add.weight": "decoder.film_add.weight",
  "decoder.film_add.bias": "decoder.film_add.bias",
  // The upsampling head is stored as a Sequential(deconv, relu, deconv).
  "decoder.head.deconv1.weight": "decoder.transposed_convolution.0.weight",
  "decoder.head.deconv1.bias": "decoder.transposed_convolution.0.bias",
  "decoder.head.deconv2.weight": "decoder.transposed_convolution.2.weight",
  "decoder.head.deconv2.bias": "decoder.transposed_convolution.2.bias",
};

const BLOCK_PREFIX: Array<[RegExp, string]> = [
  [/^vision\.blocks\.(\d+)\./, "clip.vision_model.encoder.layers.$1."],
  [/^text\.blocks\.(\d+)\./, "clip.text_model.encoder.layers.$1."],
  [/^decoder\.blocks\.(\d+)\./, "decoder.layers.$1."],
];

/**
 * Source tensor name for one container parameter, or null when the parameter
 * is synthesized instead of copied.
 */
export function sourceNameFor(containerName: string): string | null {
  if (SYNTHESIZED_ZEROS.has(containerName)) return null;
  const single = SINGLES[containerName];
  if (single) return single;
  const reduce = containerName.match(/^decoder\.reduce\.(\d+)\.(weight|bias)$/);
  if (reduce) return `decoder.reduces.${reduce[1]}.${reduce[2]}`;
  for (const [re, repl] of BLOCK_PREFIX) {
    const m = containerName.match(re);
    if (m) {
      const suffix = containerName.slice(m[0].length);
      const mapped = BLOCK_SUFFIX[suffix];
      if (!mapped) throw new Error(`no block-suffix rule for ${containerName}`);
      return containerName.replace(re, repl).slice(0, -suffix.length) + mapped;
    }
  }
  throw new Error(`no mapping rule for container parameter ${containerName}`);
}

/** Full container -> source table for a config; throws if any rule is missing. */
export function buildMapping(cfg: ModelConfig): Map<string, string | null> {
  const table = new Map<string, string | null>();
  for (const name of parameterShapes(cfg).keys()) {
    table.set(name, sourceNameFor(name));
  }
  return table;
}

const IGNORABLE = [
  /^clip\.logit_scale$/,
  /\.position_ids$/,
  /^clip\.vision_model\.pre_layrnorm\./, // sic, the upstream field name
  /^clip\.vision_model\.post_layernorm\./,
  /^clip\.visual_projection\./,
];

/** Source tensors the engine has no use for; skipped, but named in the manifest. */
export function isIgnorableSourceName(name: string): boolean {
  return IGNORABLE.some((re) => re.test(name));
}

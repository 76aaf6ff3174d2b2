// Target architecture constants. These mirror the engine's base preset; the
// container is rejected by the engine loader if any of them drift.

export interface ModelConfig {
  image_size: number;
  patch: number;
  vision_layers: number;
  vision_dim: number;
  vision_heads: number;
  extract_layers: number[];
  text_layers: number;
  text_dim: number;
  text_heads: number;
  context_length: number;
  vocab_size: number;
  embed_dim: number;
  reduce_dim: number;
  decoder_blocks: number;
  decoder_heads: number;
}

export const BASE_CONFIG: ModelConfig = {
  image_size: 352,
  patch: 16,
  vision_layers: 12,
  vision_dim: 768,
  vision_heads: 12,
  extract_layers: [3, 7, 9],
  text_layers: 12,
  text_dim: 512,
  text_heads: 8,
  context_length: 77,
  vocab_size: 49408,
  embed_dim: 512,
  reduce_dim: 64,
  decoder_blocks: 3,
  decoder_heads: 4,
};

/** Canonical config serialization: sorted keys, no whitespace. */
export function configJson(cfg: ModelConfig): string {
  const keys = Object.keys(cfg).sort();
  const parts = keys.map((k) => `${JSON.stringify(k)}:${JSON.stringify((cfg as any)[k])}`);
  return `{${parts.join(",")}}`;
}

function blockShapes(prefix: string, dim: number): Array<[string, number[]]> {
  const hidden = 4 * dim;
  return [
    [`${prefix}.ln1.gamma`, [dim]],
    [`${prefix}.ln1.beta`, [dim]],
    [`${prefix}.attn.q.weight`, [dim, dim]],
    [`${prefix}.attn.q.bias`, [dim]],
    [`${prefix}.attn.k.weight`, [dim, dim]],
    [`${prefix}.attn.k.bias`, [dim]],
    [`${prefix}.attn.v.weight`, [dim, dim]],
    [`${prefix}.attn.v.bias`, [dim]],
    [`${prefix}.attn.out.weight`, [dim, dim]],
    [`${prefix}.attn.out.bias`, [dim]],
    [`${prefix}.ln2.gamma`, [dim]],
    [`${prefix}.ln2.beta`, [dim]],
    [`${prefix}.mlp.fc1.weight`, [hidden, dim]],
    [`${prefix}.mlp.fc1.bias`, [hidden]],
    [`${prefix}.mlp.fc2.weight`, [dim, hidden]],
    [`${prefix}.mlp.fc2.bias`, [dim]],
  ];
}

/**
 * Every parameter name the engine requires, with its expected shape.
 *
 * vision.pos_embed is listed at the config grid but the engine relaxes its
 * row count to any 1 + n^2, so a checkpoint trained at a different native
 * resolution passes through unchanged and gets interpolated at load time.
 */
export function parameterShapes(cfg: ModelConfig): Map<string, number[]> {
  const grid = cfg.image_size / cfg.patch;
  const out = new Map<string, number[]>();
  const put = (entries: Array<[string, number[]]>) => {
    for (const [name, shape] of entries) out.set(name, shape);
  };
  put([
    ["vision.patch_embed.weight", [cfg.vision_dim, 3, cfg.patch, cfg.patch]],
    ["vision.patch_embed.bias", [cfg.vision_dim]],
    ["vision.cls_embed", [cfg.vision_dim]],
    ["vision.pos_embed", [1 + grid * grid, cfg.vision_dim]],
    ["text.token_embed", [cfg.vocab_size, cfg.text_dim]],
    ["text.pos_embed", [cfg.context_length, cfg.text_dim]],
    ["text.ln_final.gamma", [cfg.text_dim]],
    ["text.ln_final.beta", [cfg.text_dim]],
    ["text.proj.weight", [cfg.embed_dim, cfg.text_dim]],
    ["decoder.film_mul.weight", [cfg.reduce_dim, cfg.embed_dim]],
    ["decoder.film_mul.bias", [cfg.reduce_dim]],
    ["decoder.film_add.weight", [cfg.reduce_dim, cfg.embed_dim]],
    ["decoder.film_add.bias", [cfg.reduce_dim]],
    ["decoder.head.deconv1.weight", [cfg.reduce_dim, cfg.reduce_dim / 2, 4, 4]],
    ["decoder.head.deconv1.bias", [cfg.reduce_dim / 2]],
    ["decoder.head.deconv2.weight", [cfg.reduce_dim / 2, 1, 4, 4]],
    ["decoder.head.deconv2.bias", [1]],
  ]);
  for (let i = 0; i < cfg.vision_layers; i++) put(blockShapes(`vision.blocks.${i}`, cfg.vision_dim));
  for (let i = 0; i < cfg.text_layers; i++) put(blockShapes(`text.blocks.${i}`, cfg.text_dim));
  for (let i = 0; i < cfg.decoder_blocks; i++) {
    out.set(`decoder.reduce.${i}.weight`, [cfg.reduce_dim, cfg.vision_dim]);
    out.set(`decoder.reduce.${i}.bias`, [cfg.reduce_dim]);
    put(blockShapes(`decoder.blocks.${i}`, cfg.reduce_dim));
  }
  return out;
}

export function posEmbedRowsOk(rows: number): boolean {
  const n = Math.round(Math.sqrt(rows - 1));
  return rows >= 2 && n * n === rows - 1;
}

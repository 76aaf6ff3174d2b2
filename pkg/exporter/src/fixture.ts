// Deterministic stand-in for a real pretrained checkpoint.
//
// Full-scale downloads are not available (or welcome) in CI, so tests and the
// acceptance gate run the exporter against this: a safetensors file with the
// exact parameter inventory, names, shapes, and dtypes the converter expects
// from a published dual-encoder segmentation checkpoint, filled with cheap
// seeded noise. It includes the awkward parts on purpose: no patch-embedding
// bias, a 197-row positional table from 224px pretraining, position-id
// buffers, the contrastive logit scale, and the vision pre/post layer norms.

import { BASE_CONFIG } from "./config.js";
import { parameterShapes } from "./config.js";
import { sourceNameFor, SYNTHESIZED_ZEROS } from "./mapping.js";
import { TensorSpec, writeSafetensors, numElements } from "./safetensors.js";

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h || 1; // xorshift must not start at 0
}

function noiseFill(name: string, n: number): Buffer {
  let x = fnv1a(name);
  const arr = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    x ^= (x << 13) >>> 0;
    x ^= x >>> 17;
    x = (x ^ ((x << 5) >>> 0)) >>> 0;
    arr[i] = (x / 0xffffffff - 0.5) * 0.04;
  }
  return Buffer.from(arr.buffer, 0, arr.byteLength);
}

function indexFill(n: number): Buffer {
  const buf = Buffer.alloc(8 * n);
  for (let i = 0; i < n; i++) buf.writeBigInt64LE(BigInt(i), 8 * i);
  return buf;
}

export const FIXTURE_POS_ROWS = 197; // 224px pretraining: 1 + (224/16)^2

export function fixtureSpecs(): TensorSpec[] {
  const cfg = BASE_CONFIG;
  const specs: TensorSpec[] = [];
  const f32 = (name: string, shape: number[]) =>
    specs.push({ name, dtype: "F32", shape, data: () => noiseFill(name, numElements(shape)) });

  for (const [containerName, shape] of parameterShapes(cfg)) {
    if (SYNTHESIZED_ZEROS.has(containerName)) continue;
    const src = sourceNameFor(containerName);
    if (!src) throw new Error(`fixture: ${containerName} has no source name`);
    const srcShape =
      containerName === "vision.pos_embed" ? [FIXTURE_POS_ROWS, cfg.vision_dim] : shape;
    f32(src, srcShape);
  }

  // Parameters a real checkpoint carries but the engine does not consume.
  f32("clip.vision_model.pre_layrnorm.weight", [cfg.vision_dim]);
  f32("clip.vision_model.pre_layrnorm.bias", [cfg.vision_dim]);
  f32("clip.vision_model.post_layernorm.weight", [cfg.vision_dim]);
  f32("clip.vision_model.post_layernorm.bias", [cfg.vision_dim]);
  f32("clip.visual_projection.weight", [cfg.embed_dim, cfg.vision_dim]);
  f32("clip.logit_scale", []);
  specs.push({
    name: "clip.text_model.embeddings.position_ids",
    dtype: "I64",
    shape: [1, cfg.context_length],
    data: () => indexFill(cfg.context_length),
  });
  specs.push({
    name: "clip.vision_model.embeddings.position_ids",
    dtype: "I64",
    shape: [1, FIXTURE_POS_ROWS],
    data: () => indexFill(FIXTURE_POS_ROWS),
  });

  specs.sort((a, b) => (a.name < b.name ? -1 : 1));
  return specs;
}

export function writeFixture(path: string): void {
  writeSafetensors(path, fixtureSpecs(), { format: "pt" });
}

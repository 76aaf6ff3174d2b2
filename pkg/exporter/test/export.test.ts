import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { BASE_CONFIG, parameterShapes } from "../src/config.js";
import { ExportError, exportCheckpoint, ExportManifest } from "../src/export.js";
import { FIXTURE_POS_ROWS, writeFixture } from "../src/fixture.js";
import { SYNTHESIZED_ZEROS } from "../src/mapping.js";
import { SafetensorsReader, TensorSpec, writeSafetensors } from "../src/safetensors.js";
import { ParsedContainer, readContainer } from "./readContainer.js";

let dir: string;
let srcPath: string;
let outPath: string;
let manifest: ExportManifest;
let parsed: ParsedContainer;

function sha256(p: string): string {
  return crypto.createHash("sha256").update(fs.readFileSync(p)).digest("hex");
}

// The fixture is full scale (~600 MB), so generate and export once for the suite.
beforeAll(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "export-"));
  srcPath = path.join(dir, "source.safetensors");
  outPath = path.join(dir, "exported.bsegw");
  writeFixture(srcPath);
  manifest = exportCheckpoint(srcPath, outPath);
  parsed = readContainer(outPath);
}, 120_000);

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("exportCheckpoint on the fixture", () => {
  it("writes every required parameter, F32, in sorted order", () => {
    const shapes = parameterShapes(BASE_CONFIG);
    expect(parsed.version).toBe(1);
    expect(parsed.tensors).toHaveLength(shapes.size);
    const names = parsed.tensors.map((t) => t.name);
    expect(names).toEqual([...names].sort());
    expect(new Set(names)).toEqual(new Set(shapes.keys()));
    for (const t of parsed.tensors) {
      expect(t.dtype, t.name).toBe(0);
      const expected =
        t.name === "vision.pos_embed"
          ? [FIXTURE_POS_ROWS, BASE_CONFIG.vision_dim]
          : shapes.get(t.name)!;
      expect(t.shape, t.name).toEqual(expected);
    }
  });

  it("stamps the base config with image size 352", () => {
    expect(parsed.config.image_size).toBe(352);
    expect(parsed.config.vision_layers).toBe(12);
    expect(parsed.config.extract_layers).toEqual([3, 7, 9]);
    expect(parsed.config.reduce_dim).toBe(64);
    expect(parsed.config.patch).toBe(16);
    expect(parsed.config.vocab_size).toBe(49408);
  });

  it("copies tensor bytes verbatim from the source", () => {
    const reader = new SafetensorsReader(srcPath);
    const byName = new Map(parsed.tensors.map((t) => [t.name, t]));
    const checks: Array<[string, string]> = [
      ["vision.cls_embed", "clip.vision_model.embeddings.class_embedding"],
      ["decoder.film_mul.weight", "decoder.film_mul.weight"],
      ["text.blocks.11.mlp.fc2.bias", "clip.text_model.encoder.layers.11.mlp.fc2.bias"],
      ["vision.pos_embed", "clip.vision_model.embeddings.position_embedding.weight"],
    ];
    for (const [container, source] of checks) {
      expect(byName.get(container)!.data.equals(reader.readBytes(source)), container).toBe(true);
    }
    reader.close();
  });

  it("fills the synthesized patch bias with zeros", () => {
    const t = parsed.tensors.find((t) => t.name === "vision.patch_embed.bias")!;
    expect(t.shape).toEqual([BASE_CONFIG.vision_dim]);
    expect(t.data.every((b) => b === 0)).toBe(true);
  });

  it("re-exports byte-identically", () => {
    const again = path.join(dir, "again.bsegw");
    exportCheckpoint(srcPath, again);
    expect(sha256(again)).toBe(sha256(outPath));
    fs.rmSync(again);
  });

  it("accounts for every tensor in the manifest", () => {
    const shapes = parameterShapes(BASE_CONFIG);
    const mapped = Object.values(manifest.mapping).sort();
    const required = [...shapes.keys()].filter((n) => !SYNTHESIZED_ZEROS.has(n)).sort();
    expect(mapped).toEqual(required);
    expect(Object.keys(manifest.synthesized)).toEqual(["vision.patch_embed.bias"]);
    expect(manifest.unused_source).toEqual([]);
    expect(manifest.ignored_source.length).toBeGreaterThanOrEqual(8);
    expect(manifest.tap_convention).toMatch(/post-block/);
    expect(manifest.source.tensor_count).toBe(
      Object.keys(manifest.mapping).length + manifest.ignored_source.length
    );
  });
});

describe("exportCheckpoint failure modes", () => {
  function writeSmall(name: string, specs: TensorSpec[]): string {
    const p = path.join(dir, name);
    writeSafetensors(p, specs);
    return p;
  }

  const f32 = (n: number) => () => Buffer.alloc(4 * n);

  it("lists missing parameters by name", () => {
    const p = writeSmall("missing.safetensors", [
      {
        name: "clip.vision_model.embeddings.patch_embedding.weight",
        dtype: "F32",
        shape: [768, 3, 16, 16],
        data: f32(768 * 3 * 16 * 16),
      },
    ]);
    let err: Error | null = null;
    try {
      exportCheckpoint(p, path.join(dir, "never.bsegw"));
    } catch (e) {
      err = e as Error;
    }
    expect(err).toBeInstanceOf(ExportError);
    expect(err!.message).toMatch(/missing 453 required parameter/);
    expect(err!.message).toContain(
      "vision.cls_embed (source: clip.vision_model.embeddings.class_embedding)"
    );
    expect(fs.existsSync(path.join(dir, "never.bsegw"))).toBe(false);
  });

  it("rejects a wrongly shaped tensor, naming it", () => {
    const p = writeSmall("shape.safetensors", [
      {
        name: "clip.vision_model.embeddings.patch_embedding.weight",
        dtype: "F32",
        shape: [768, 3, 14, 14],
        data: f32(768 * 3 * 14 * 14),
      },
    ]);
    expect(() => exportCheckpoint(p, path.join(dir, "never2.bsegw"))).toThrow(
      /patch_embedding\.weight has shape \[768,3,14,14\]/
    );
  });

  it("rejects a positional table without a square grid", () => {
    const specs: TensorSpec[] = [
      {
        name: "clip.vision_model.embeddings.patch_embedding.weight",
        dtype: "F32",
        shape: [768, 3, 16, 16],
        data: f32(768 * 3 * 16 * 16),
      },
      {
        name: "clip.vision_model.embeddings.class_embedding",
        dtype: "F32",
        shape: [768],
        data: f32(768),
      },
      {
        name: "clip.vision_model.embeddings.position_embedding.weight",
        dtype: "F32",
        shape: [198, 768],
        data: f32(198 * 768),
      },
    ];
    const p = writeSmall("posrows.safetensors", specs);
    expect(() => exportCheckpoint(p, path.join(dir, "never3.bsegw"))).toThrow(/1 \+ n\^2/);
  });

  it("rejects non-F32 source tensors", () => {
    const p = writeSmall("f16.safetensors", [
      {
        name: "clip.vision_model.embeddings.patch_embedding.weight",
        dtype: "F16",
        shape: [768, 3, 16, 16],
        data: () => Buffer.alloc(2 * 768 * 3 * 16 * 16),
      },
    ]);
    expect(() => exportCheckpoint(p, path.join(dir, "never4.bsegw"))).toThrow(/only F32/);
  });
});

// Conversion pipeline: source checkpoint in, engine container out.
//
// The container holds every parameter the engine validates at load time, so
// a conversion either produces a file that loads cleanly or fails here with
// the full list of what could not be filled. Tensor bytes are copied
// verbatim (both formats store little-endian F32), which keeps the export a
// deterministic function of its input.

import * as fs from "node:fs";

import { BASE_CONFIG, configJson, parameterShapes, posEmbedRowsOk } from "./config.js";
import { ContainerRecord, DTYPE_F32, writeContainer } from "./container.js";
import { buildMapping, isIgnorableSourceName, TAP_CONVENTION } from "./mapping.js";
import { numElements, SafetensorsReader } from "./safetensors.js";

export class ExportError extends Error {}

export interface ExportManifest {
  source: { path: string; format: string; tensor_count: number };
  container: { path: string; format: string; tensor_count: number; config: typeof BASE_CONFIG };
  tap_convention: string;
  /** source parameter name -> container parameter name */
  mapping: Record<string, string>;
  /** container parameters filled without a source tensor */
  synthesized: Record<string, string>;
  /** source tensors the engine has no slot for (expected leftovers) */
  ignored_source: string[];
  /** source tensors this converter does not recognize at all */
  unused_source: string[];
  prompts?: Record<string, { ids: number[]; eot_index: number }>;
}

function sameShape(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}

export function exportCheckpoint(sourcePath: string, outPath: string): ExportManifest {
  const cfg = BASE_CONFIG;
  const reader = new SafetensorsReader(sourcePath);
  try {
    const shapes = parameterShapes(cfg);
    const table = buildMapping(cfg);
    const records: ContainerRecord[] = [];
    const mapping: Record<string, string> = {};
    const synthesized: Record<string, string> = {};
    const missing: string[] = [];
    const used = new Set<string>();

    for (const [containerName, expect] of shapes) {
      const srcName = table.get(containerName) ?? null;
      if (srcName === null) {
        synthesized[containerName] = "zeros";
        records.push({
          name: containerName,
          dtype: DTYPE_F32,
          shape: expect,
          data: () => Buffer.alloc(4 * numElements(expect)),
        });
        continue;
      }
      if (!reader.has(srcName)) {
        missing.push(`${containerName} (source: ${srcName})`);
        continue;
      }
      used.add(srcName);
      const info = reader.info(srcName);
      if (info.dtype !== "F32") {
        throw new ExportError(
          `source tensor ${srcName} is ${info.dtype}; only F32 checkpoints are supported`
        );
      }
      let shape = expect;
      if (containerName === "vision.pos_embed") {
        // Accept any square-grid positional table; the engine interpolates.
        const [rows, cols] = info.shape;
        if (info.shape.length !== 2 || cols !== cfg.vision_dim || !posEmbedRowsOk(rows)) {
          throw new ExportError(
            `source tensor ${srcName} has shape [${info.shape}], expected [1 + n^2, ${cfg.vision_dim}]`
          );
        }
        shape = info.shape;
      } else if (!sameShape(info.shape, expect)) {
        throw new ExportError(
          `source tensor ${srcName} has shape [${info.shape}], expected [${expect}] for ${containerName}`
        );
      }
      mapping[srcName] = containerName;
      records.push({ name: containerName, dtype: DTYPE_F32, shape, data: () => reader.readBytes(srcName) });
    }

    if (missing.length > 0) {
      throw new ExportError(
        `source is missing ${missing.length} required parameter(s):\n  ${missing.join("\n  ")}`
      );
    }

    const ignored: string[] = [];
    const unused: string[] = [];
    for (const name of reader.tensors.keys()) {
      if (used.has(name)) continue;
      (isIgnorableSourceName(name) ? ignored : unused).push(name);
    }
    ignored.sort();
    unused.sort();

    writeContainer(outPath, configJson(cfg), records);

    return {
      source: { path: sourcePath, format: "safetensors", tensor_count: reader.tensors.size },
      container: { path: outPath, format: "bsegw1", tensor_count: records.length, config: cfg },
      tap_convention: TAP_CONVENTION,
      mapping,
      synthesized,
      ignored_source: ignored,
      unused_source: unused,
    };
  } finally {
    reader.close();
  }
}

export function writeManifest(manifest: ExportManifest, path: string): void {
  fs.writeFileSync(path, JSON.stringify(manifest, null, 2) + "\n");
}

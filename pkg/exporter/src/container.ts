// Writer for the engine's weight container.
//
// Layout (little-endian, no padding):
//
//     magic   8 bytes  "BSEGW1\0\0"
//     version u32
//     config  u32 length + UTF-8 JSON
//     count   u32
//     per tensor, in sorted-name order:
//         name  u32 length + UTF-8 bytes
//         dtype u8 (0 = F32, 1 = F16)
//         rank  u8
//         dims  u64 x rank
//         data  raw little-endian elements
//
// Sorted-name order plus a fixed config serialization makes the output a
// pure function of the input tensors: exporting twice yields identical bytes.

import * as fs from "node:fs";

export const MAGIC = Buffer.from("BSEGW1\0\0", "latin1");
export const VERSION = 1;
export const DTYPE_F32 = 0;

export interface ContainerRecord {
  name: string;
  dtype: number;
  shape: number[];
  /** Raw little-endian element bytes; called once, in write order. */
  data: () => Buffer;
}

function u32(n: number): Buffer {
  const b = Buffer.alloc(4);
  b.writeUInt32LE(n, 0);
  return b;
}

export function writeContainer(path: string, configJson: string, records: ContainerRecord[]): void {
  const ordered = [...records].sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0));
  const fd = fs.openSync(path, "w");
  try {
    fs.writeSync(fd, MAGIC);
    fs.writeSync(fd, u32(VERSION));
    const cfg = Buffer.from(configJson, "utf-8");
    fs.writeSync(fd, u32(cfg.length));
    fs.writeSync(fd, cfg);
    fs.writeSync(fd, u32(ordered.length));
    for (const rec of ordered) {
      const name = Buffer.from(rec.name, "utf-8");
      fs.writeSync(fd, u32(name.length));
      fs.writeSync(fd, name);
      fs.writeSync(fd, Buffer.from([rec.dtype, rec.shape.length]));
      const dims = Buffer.alloc(8 * rec.shape.length);
      rec.shape.forEach((d, i) => dims.writeBigUInt64LE(BigInt(d), 8 * i));
      fs.writeSync(fd, dims);
      fs.writeSync(fd, rec.data());
    }
  } finally {
    fs.closeSync(fd);
  }
}

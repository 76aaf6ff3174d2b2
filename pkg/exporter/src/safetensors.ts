// Minimal safetensors I/O.
//
// Layout: u64 little-endian header length, UTF-8 JSON header, raw data.
// The header maps tensor name -> { dtype, shape, data_offsets: [start, end] }
// with offsets relative to the start of the data section. An optional
// "__metadata__" entry carries free-form strings.
//
// The reader never loads the data section wholesale; tensors are pulled one
// at a time with positioned reads so peak memory stays at the largest tensor.

import * as fs from "node:fs";

export interface TensorInfo {
  dtype: string;
  shape: number[];
  start: number; // absolute file offset
  end: number;
}

export const DTYPE_SIZES: Record<string, number> = {
  F64: 8, F32: 4, F16: 2, BF16: 2, I64: 8, I32: 4, I16: 2, I8: 1, U8: 1, BOOL: 1,
};

export function numElements(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export class SafetensorsReader {
  private fd: number;
  readonly tensors: Map<string, TensorInfo>;
  readonly metadata: Record<string, string>;
  readonly byteLength: number;

  constructor(path: string) {
    this.fd = fs.openSync(path, "r");
    const stat = fs.fstatSync(this.fd);
    this.byteLength = stat.size;
    if (stat.size < 8) throw new Error(`${path}: too short to be a safetensors file`);
    const lenBuf = Buffer.alloc(8);
    fs.readSync(this.fd, lenBuf, 0, 8, 0);
    const headerLen = Number(lenBuf.readBigUInt64LE(0));
    if (8 + headerLen > stat.size) {
      throw new Error(`${path}: header length ${headerLen} exceeds file size`);
    }
    const headerBuf = Buffer.alloc(headerLen);
    fs.readSync(this.fd, headerBuf, 0, headerLen, 8);
    let header: Record<string, any>;
    try {
      header = JSON.parse(headerBuf.toString("utf-8"));
    } catch (e) {
      throw new Error(`${path}: header is not valid JSON`);
    }
    const dataStart = 8 + headerLen;
    this.tensors = new Map();
    this.metadata = header["__metadata__"] ?? {};
    for (const [name, entry] of Object.entries(header)) {
      if (name === "__metadata__") continue;
      const { dtype, shape, data_offsets } = entry as {
        dtype: string;
        shape: number[];
        data_offsets: [number, number];
      };
      const size = DTYPE_SIZES[dtype];
      if (size === undefined) throw new Error(`${path}: tensor ${name} has unknown dtype ${dtype}`);
      const [s, e] = data_offsets;
      if (e - s !== numElements(shape) * size) {
        throw new Error(`${path}: tensor ${name} offsets disagree with its shape`);
      }
      if (dataStart + e > stat.size) {
        throw new Error(`${path}: tensor ${name} extends past end of file`);
      }
      this.tensors.set(name, { dtype, shape, start: dataStart + s, end: dataStart + e });
    }
  }

  has(name: string): boolean {
    return this.tensors.has(name);
  }

  info(name: string): TensorInfo {
    const t = this.tensors.get(name);
    if (!t) throw new Error(`tensor ${name} not present in source`);
    return t;
  }

  readBytes(name: string): Buffer {
    const t = this.info(name);
    const buf = Buffer.alloc(t.end - t.start);
    let off = 0;
    while (off < buf.length) {
      const n = fs.readSync(this.fd, buf, off, buf.length - off, t.start + off);
      if (n === 0) throw new Error(`tensor ${name}: unexpected EOF`);
      off += n;
    }
    return buf;
  }

  close(): void {
    fs.closeSync(this.fd);
  }
}

export interface TensorSpec {
  name: string;
  dtype: string;
  shape: number[];
  /** Produces the raw little-endian bytes; called once, during the data pass. */
  data: () => Buffer;
}

/** Write a safetensors file. Data-section order follows the given list. */
export function writeSafetensors(path: string, specs: TensorSpec[], metadata?: Record<string, string>): void {
  const header: Record<string, any> = {};
  if (metadata) header["__metadata__"] = metadata;
  let offset = 0;
  for (const s of specs) {
    if (header[s.name]) throw new Error(`duplicate tensor ${s.name}`);
    const nbytes = numElements(s.shape) * DTYPE_SIZES[s.dtype];
    header[s.name] = { dtype: s.dtype, shape: s.shape, data_offsets: [offset, offset + nbytes] };
    offset += nbytes;
  }
  const headerBytes = Buffer.from(JSON.stringify(header), "utf-8");
  const fd = fs.openSync(path, "w");
  try {
    const lenBuf = Buffer.alloc(8);
    lenBuf.writeBigUInt64LE(BigInt(headerBytes.length), 0);
    fs.writeSync(fd, lenBuf);
    fs.writeSync(fd, headerBytes);
    for (const s of specs) {
      const buf = s.data();
      const expect = numElements(s.shape) * DTYPE_SIZES[s.dtype];
      if (buf.length !== expect) {
        throw new Error(`tensor ${s.name}: fill produced ${buf.length} bytes, expected ${expect}`);
      }
      fs.writeSync(fd, buf);
    }
  } finally {
    fs.closeSync(fd);
  }
}

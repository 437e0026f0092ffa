/**
 * CAFP tensor files: magic "CAFP", u16 version, u8 dtype code
 * (1=f32 2=f64 3=c64 4=c128), u8 rank, u32 dims, little-endian payload.
 * The reconstructor only moves real rasters, so complex payloads are
 * rejected here.
 */
import fs from 'node:fs';

export interface Cafp {
  dims: number[];
  data: Float64Array;
}

const MAGIC = 0x50464143; // "CAFP" little-endian

export function readCafp(filePath: string): Cafp {
  const buf = fs.readFileSync(filePath);
  if (buf.length < 8 || buf.readUInt32LE(0) !== MAGIC) {
    throw new Error(`${filePath}: not a CAFP file`);
  }
  const version = buf.readUInt16LE(4);
  if (version !== 1) throw new Error(`${filePath}: unsupported CAFP version ${version}`);
  const code = buf.readUInt8(6);
  const rank = buf.readUInt8(7);
  const dims: number[] = [];
  let off = 8;
  for (let i = 0; i < rank; i++) {
    dims.push(buf.readUInt32LE(off));
    off += 4;
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const itemSize = code === 1 ? 4 : code === 2 ? 8 : 0;
  if (itemSize === 0) throw new Error(`${filePath}: complex CAFP dtypes not supported here`);
  if (buf.length - off !== count * itemSize) {
    throw new Error(`${filePath}: payload is ${buf.length - off} bytes, expected ${count * itemSize}`);
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = itemSize === 4 ? buf.readFloatLE(off + 4 * i) : buf.readDoubleLE(off + 8 * i);
  }
  return { dims, data };
}

export function writeCafpF32(filePath: string, dims: number[], data: ArrayLike<number>): void {
  const count = dims.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new Error(`data length ${data.length} does not match dims ${dims}`);
  }
  const buf = Buffer.alloc(8 + 4 * dims.length + 4 * count);
  buf.writeUInt32LE(MAGIC, 0);
  buf.writeUInt16LE(1, 4);
  buf.writeUInt8(1, 6); // f32
  buf.writeUInt8(dims.length, 7);
  let off = 8;
  for (const d of dims) {
    buf.writeUInt32LE(d, off);
    off += 4;
  }
  for (let i = 0; i < count; i++) buf.writeFloatLE(Math.fround(data[i]), off + 4 * i);
  fs.writeFileSync(filePath, buf);
}

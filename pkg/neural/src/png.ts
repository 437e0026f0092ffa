/**
 * Minimal PNG codec for the rasters this pipeline exchanges: non-interlaced
 * grayscale at bit depth 8 or 16 (all five scanline filters on read; RGB(A)
 * inputs are collapsed with the 0.299/0.587/0.114 luma weights). Values map
 * to [0, 1].
 */
import fs from 'node:fs';
import zlib from 'node:zlib';

export interface GrayImage {
  width: number;
  height: number;
  data: Float64Array; // row-major, [0, 1]
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const t = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    t[n] = c >>> 0;
  }
  return t;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

function unfilter(raw: Buffer, height: number, rowBytes: number, bpp: number): Buffer {
  const out = Buffer.alloc(height * rowBytes);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (rowBytes + 1)];
    const src = raw.subarray(y * (rowBytes + 1) + 1, (y + 1) * (rowBytes + 1));
    const dst = out.subarray(y * rowBytes, (y + 1) * rowBytes);
    const prev = y > 0 ? out.subarray((y - 1) * rowBytes, y * rowBytes) : null;
    for (let x = 0; x < rowBytes; x++) {
      const a = x >= bpp ? dst[x - bpp] : 0;
      const b = prev ? prev[x] : 0;
      const c = prev && x >= bpp ? prev[x - bpp] : 0;
      let v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v = (v + a) & 0xff; break;
        case 2: v = (v + b) & 0xff; break;
        case 3: v = (v + ((a + b) >> 1)) & 0xff; break;
        case 4: v = (v + paeth(a, b, c)) & 0xff; break;
        default: throw new Error(`unsupported PNG filter ${filter}`);
      }
      dst[x] = v;
    }
  }
  return out;
}

export function readPng(filePath: string): GrayImage {
  const buf = fs.readFileSync(filePath);
  if (!buf.subarray(0, 8).equals(SIGNATURE)) throw new Error(`${filePath}: not a PNG`);
  let off = 8;
  let width = 0, height = 0, bitDepth = 0, colorType = 0, interlace = 0;
  const idat: Buffer[] = [];
  while (off + 12 <= buf.length) {
    const len = buf.readUInt32BE(off);
    const type = buf.toString('ascii', off + 4, off + 8);
    const data = buf.subarray(off + 8, off + 8 + len);
    if (type === 'IHDR') {
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      bitDepth = data.readUInt8(8);
      colorType = data.readUInt8(9);
      interlace = data.readUInt8(12);
    } else if (type === 'IDAT') {
      idat.push(Buffer.from(data));
    } else if (type === 'IEND') {
      break;
    }
    off += 12 + len;
  }
  if (interlace !== 0) throw new Error(`${filePath}: interlaced PNG not supported`);
  const channels = { 0: 1, 2: 3, 4: 2, 6: 4 }[colorType as 0 | 2 | 4 | 6];
  if (!channels) throw new Error(`${filePath}: unsupported color type ${colorType}`);
  if (bitDepth !== 8 && bitDepth !== 16) {
    throw new Error(`${filePath}: unsupported bit depth ${bitDepth}`);
  }
  const bytesPerSample = bitDepth / 8;
  const bpp = channels * bytesPerSample;
  const rowBytes = width * bpp;
  const raw = zlib.inflateSync(Buffer.concat(idat));
  if (raw.length !== height * (rowBytes + 1)) {
    throw new Error(`${filePath}: corrupt PNG payload`);
  }
  const pix = unfilter(raw, height, rowBytes, bpp);
  const max = bitDepth === 8 ? 255 : 65535;
  const data = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const base = y * rowBytes + x * bpp;
      const sample = (c: number) =>
        bitDepth === 8 ? pix[base + c] : pix.readUInt16BE(base + 2 * c);
      let v: number;
      if (channels === 1 || channels === 2) {
        v = sample(0) / max;
      } else {
        v = (0.299 * sample(0) + 0.587 * sample(1) + 0.114 * sample(2)) / max;
      }
      data[y * width + x] = v;
    }
  }
  return { width, height, data };
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, 'ascii');
  const crcBuf = Buffer.alloc(4);
  crcBuf.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), data])), 0);
  return Buffer.concat([head, data, crcBuf]);
}

export function writePng(filePath: string, img: GrayImage, bitDepth: 8 | 16 = 8): void {
  const { width, height, data } = img;
  const max = bitDepth === 8 ? 255 : 65535;
  const bytes = bitDepth / 8;
  const raw = Buffer.alloc(height * (width * bytes + 1));
  for (let y = 0; y < height; y++) {
    const row = y * (width * bytes + 1);
    raw[row] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      const v = Math.round(Math.min(1, Math.max(0, data[y * width + x])) * max);
      if (bitDepth === 8) raw[row + 1 + x] = v;
      else raw.writeUInt16BE(v, row + 1 + 2 * x);
    }
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(bitDepth, 8);
  ihdr.writeUInt8(0, 9); // grayscale
  const png = Buffer.concat([
    SIGNATURE,
    chunk('IHDR', ihdr),
    chunk('IDAT', zlib.deflateSync(raw, { level: 9 })),
    chunk('IEND', Buffer.alloc(0)),
  ]);
  fs.writeFileSync(filePath, png);
}

import { execFileSync } from 'node:child_process';
import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';
import { readCafp, writeCafpF32 } from '../src/cafp.js';
import { readPng, writePng } from '../src/png.js';
import { upsampleBicubic } from '../src/resample.js';

const here = path.dirname(fileURLToPath(import.meta.url));
const cross = path.join(here, 'fixtures', 'cross');
const manifest = JSON.parse(fs.readFileSync(path.join(cross, 'manifest.json'), 'utf-8'));

describe('cafp interchange', () => {
  it('reads f32 tensors written by the toolkit', () => {
    const t = readCafp(path.join(cross, 't32.cafp'));
    const [shape, values] = manifest.t32;
    expect(t.dims).toEqual(shape);
    for (let i = 0; i < values.length; i++) {
      expect(t.data[i]).toBe(Math.fround(values[i]));
    }
  });

  it('reads f64 tensors written by the toolkit', () => {
    const t = readCafp(path.join(cross, 't64.cafp'));
    const [shape, values] = manifest.t64;
    expect(t.dims).toEqual(shape);
    for (let i = 0; i < values.length; i++) expect(t.data[i]).toBe(values[i]);
  });

  it('round-trips f32 through this writer and the toolkit reader', () => {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'cafp-'));
    const file = path.join(tmp, 'x.cafp');
    const data = [0.5, -1.25, 3.75, 0, 42.125, -0.875];
    writeCafpF32(file, [2, 3], data);
    const back = readCafp(file);
    expect(Array.from(back.data)).toEqual(data);
    const viaPython = execFileSync('python3', ['-c', `
from apsynth.io import read_tensor
import json
t = read_tensor(${JSON.stringify(file)})
print(json.dumps([list(t.shape), [float(v) for v in t.ravel()]]))
`], { encoding: 'utf-8' });
    const [shape, values] = JSON.parse(viaPython);
    expect(shape).toEqual([2, 3]);
    expect(values).toEqual(data);
  });

  it('rejects malformed files', () => {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'cafp-'));
    const bad = path.join(tmp, 'bad.cafp');
    fs.writeFileSync(bad, Buffer.from('NOPE0000'));
    expect(() => readCafp(bad)).toThrow(/not a CAFP/);
  });
});

describe('png interchange', () => {
  it('reads 8- and 16-bit grayscale written by the toolkit', () => {
    const [shape, values] = manifest.gray;
    const img16 = readPng(path.join(cross, 'gray16.png'));
    expect([img16.height, img16.width]).toEqual(shape);
    for (let i = 0; i < values.length; i++) {
      expect(Math.abs(img16.data[i] - values[i])).toBeLessThan(1 / 65535);
    }
    const img8 = readPng(path.join(cross, 'gray8.png'));
    for (let i = 0; i < values.length; i++) {
      expect(Math.abs(img8.data[i] - values[i])).toBeLessThan(1 / 255);
    }
  });

  it('collapses color with the toolkit luma weights', () => {
    const img = readPng(path.join(cross, 'rgb.png'));
    const luma = manifest.rgb_luma;
    for (let i = 0; i < luma.length; i++) {
      expect(Math.abs(img.data[i] - luma[i])).toBeLessThan(1e-12);
    }
  });

  it('round-trips through this writer and the toolkit reader', () => {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'png-'));
    const file = path.join(tmp, 'x.png');
    const data = new Float64Array([0, 0.25, 0.5, 0.75, 1, 0.125]);
    writePng(file, { width: 3, height: 2, data }, 16);
    const back = readPng(file);
    for (let i = 0; i < data.length; i++) {
      expect(Math.abs(back.data[i] - data[i])).toBeLessThan(1 / 65535);
    }
    const viaPython = execFileSync('python3', ['-c', `
from apsynth.io import load_png
import json
img = load_png(${JSON.stringify(file)})
print(json.dumps([list(img.shape), [float(v) for v in img.ravel()]]))
`], { encoding: 'utf-8' });
    const [shape, values] = JSON.parse(viaPython);
    expect(shape).toEqual([2, 3]);
    for (let i = 0; i < data.length; i++) {
      expect(Math.abs(values[i] - data[i])).toBeLessThan(1 / 65535);
    }
  });
});

describe('bicubic resampling', () => {
  it('matches the toolkit implementation', () => {
    const [srcShape, srcValues] = manifest.bicubic_src;
    const [upShape, upValues] = manifest.bicubic_up;
    const got = upsampleBicubic(srcValues, srcShape[0], srcShape[1], upShape[0], upShape[1]);
    for (let i = 0; i < upValues.length; i++) {
      expect(Math.abs(got[i] - upValues[i])).toBeLessThan(1e-10);
    }
  });

  it('is the identity at equal size and exact on constants', () => {
    const src = new Float64Array([1, 2, 3, 4]);
    const same = upsampleBicubic(src, 2, 2, 2, 2);
    expect(Array.from(same)).toEqual([1, 2, 3, 4]);
    const flat = upsampleBicubic(new Float64Array(16).fill(0.3), 4, 4, 9, 7);
    for (const v of flat) expect(Math.abs(v - 0.3)).toBeLessThan(1e-12);
  });
});

import fs from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';
import { readPng } from '../src/png.js';
import { bce, computeReport, mse, psnr, ssim } from '../src/metrics.js';
import { rowsToCsv } from '../src/evaluate.js';

const here = path.dirname(fileURLToPath(import.meta.url));
const cross = path.join(here, 'fixtures', 'cross');
const manifest = JSON.parse(fs.readFileSync(path.join(cross, 'manifest.json'), 'utf-8'));

describe('metric parity with the toolkit', () => {
  it('matches mse/psnr/ssim/bce within 1e-6 on 10 shared pairs', () => {
    for (let i = 0; i < 10; i++) {
      const a = readPng(path.join(cross, `pair${i}_a.png`));
      const b = readPng(path.join(cross, `pair${i}_b.png`));
      const ref = manifest.metric_reports[i];
      const got = computeReport(a.data, b.data, a.height, a.width);
      expect(Math.abs(got.mse - ref.mse)).toBeLessThan(1e-6);
      expect(Math.abs(got.psnr - ref.psnr)).toBeLessThan(1e-6);
      expect(Math.abs(got.ssim - ref.ssim)).toBeLessThan(1e-6);
      expect(Math.abs(got.bce - ref.bce)).toBeLessThan(1e-6);
    }
  });

  it('basic metric identities', () => {
    const x = new Float64Array(32 * 32).map(() => Math.random());
    expect(mse(x, x)).toBe(0);
    expect(psnr(x, x)).toBe(Infinity);
    expect(ssim(x, x, 32, 32)).toBeCloseTo(1.0, 12);
    const half = new Float64Array(16).fill(0.5);
    const target = new Float64Array(16).map((_, i) => (i % 2 === 0 ? 1 : 0));
    expect(bce(half, target)).toBeCloseTo(Math.log(2), 12);
  });

  it('empty-split evaluation yields an empty table with the shared header', () => {
    const csv = rowsToCsv([]);
    expect(csv).toBe('name,mse,psnr,ssim,bce\n');
  });
});

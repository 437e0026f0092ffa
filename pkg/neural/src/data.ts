/**
 * Dataset access: reads the toolkit's materialized dataset directories
 * (manifest.json, train/val/test splits, samples/{id}/gt.png plus
 * samples/{id}/stack). Network input for one sample is every stack
 * measurement divided by the photon scale and bicubic-upsampled to the field
 * size, stacked as channels; residual variants append the upsampled
 * bright-field amplitude as the last channel, which is also the prediction
 * base.
 */
import fs from 'node:fs';
import path from 'node:path';
import { readCafp } from './cafp.js';
import { readPng } from './png.js';
import { upsampleBicubic } from './resample.js';

export interface StackEntryMeta {
  snapshot: number;
  aperture: number;
  u: number;
  v: number;
  d: number;
  file: string;
}

export interface StackMeta {
  fieldSize: number;
  photonScale: number;
  entries: StackEntryMeta[];
  dir: string;
}

export interface SampleInput {
  size: number;
  channels: number;
  data: Float32Array;     // [size, size, channels]
  base: Float64Array;     // [size, size] bright-field amplitude upsample
}

export interface DatasetIndex {
  root: string;
  samples: string[];
  splits: { train: string[]; val: string[]; test: string[] };
}

export function readStackMeta(stackDir: string): StackMeta {
  const manifest = JSON.parse(
    fs.readFileSync(path.join(stackDir, 'manifest.json'), 'utf-8'),
  );
  if (manifest.format !== 'apsynth-stack') {
    throw new Error(`${stackDir}: not a measurement stack`);
  }
  return {
    fieldSize: manifest.field_size,
    photonScale: manifest.photon_scale ?? 1.0,
    entries: manifest.entries.map((e: Record<string, unknown>) => ({
      snapshot: e.snapshot as number,
      aperture: e.aperture as number,
      u: e.u as number,
      v: e.v as number,
      d: e.d as number,
      file: e.file as string,
    })),
    dir: stackDir,
  };
}

function brightfieldIndex(meta: StackMeta): number {
  let best = 0;
  let bestR = Infinity;
  meta.entries.forEach((e, i) => {
    if (e.snapshot !== 0) return;
    const r = e.u * e.u + e.v * e.v;
    if (r < bestR) {
      bestR = r;
      best = i;
    }
  });
  return best;
}

export function prepareInput(stackDir: string, residualBase: boolean): SampleInput {
  const meta = readStackMeta(stackDir);
  const n = meta.fieldSize;
  const measurements = meta.entries.map((e) => {
    const t = readCafp(path.join(stackDir, e.file));
    if (t.dims.length !== 2 || t.dims[0] !== e.d || t.dims[1] !== e.d) {
      throw new Error(`${e.file}: expected ${e.d}x${e.d}, got ${t.dims}`);
    }
    const natural = new Float64Array(t.data.length);
    for (let i = 0; i < natural.length; i++) natural[i] = t.data[i] / meta.photonScale;
    return { e, natural };
  });

  // A d-point orthonormal transform leaves decimated values (N/d)^2 brighter
  // than object-intensity units; rescale so channels are commensurate across
  // aperture scales. Off-center channels then sit orders of magnitude below
  // the bright field, so each measurement channel is additionally divided by
  // its own RMS; without this the first convolution cannot see them.
  const channels = measurements.length + (residualBase ? 1 : 0);
  const data = new Float32Array(n * n * channels);
  measurements.forEach(({ e, natural }, c) => {
    const up = upsampleBicubic(natural, e.d, e.d, n, n);
    const unit = (e.d / n) ** 2;
    let sq = 0;
    for (let p = 0; p < n * n; p++) sq += (up[p] * unit) ** 2;
    const rms = Math.max(Math.sqrt(sq / (n * n)), 1e-9);
    for (let p = 0; p < n * n; p++) data[p * channels + c] = (up[p] * unit) / rms;
  });

  const bf = measurements[brightfieldIndex(meta)];
  const amp = new Float64Array(bf.natural.length);
  const ampUnit = bf.e.d / n;
  for (let i = 0; i < amp.length; i++) {
    amp[i] = Math.sqrt(Math.max(bf.natural[i], 0)) * ampUnit;
  }
  const base = upsampleBicubic(amp, bf.e.d, bf.e.d, n, n);
  if (residualBase) {
    for (let p = 0; p < n * n; p++) data[p * channels + channels - 1] = base[p];
  }
  return { size: n, channels, data, base };
}

export function readDataset(root: string): DatasetIndex {
  const manifest = JSON.parse(fs.readFileSync(path.join(root, 'manifest.json'), 'utf-8'));
  if (manifest.format !== 'apsynth-dataset') {
    throw new Error(`${root}: not an apsynth dataset`);
  }
  const readSplit = (name: string) => {
    const p = path.join(root, name);
    return fs.existsSync(p)
      ? fs.readFileSync(p, 'utf-8').split('\n').filter(Boolean)
      : [];
  };
  return {
    root,
    samples: manifest.samples,
    splits: { train: readSplit('train.txt'), val: readSplit('val.txt'), test: readSplit('test.txt') },
  };
}

export function sampleGroundTruth(root: string, id: string): Float64Array {
  const img = readPng(path.join(root, 'samples', id, 'gt.png'));
  return img.data;
}

export function sampleStackDir(root: string, id: string): string {
  return path.join(root, 'samples', id, 'stack');
}

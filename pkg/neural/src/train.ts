/**
 * Two-stage training. Stage 1 minimizes L1 (residual variants) or BCE (the
 * binary-target variant) over the train split. Stage 2 re-scores the train
 * split by SSIM, keeps the worst fraction, and tunes with the composite
 * bce + lambda*(1 - SSIM) loss.
 */
import fs from 'node:fs';
import path from 'node:path';
import type * as tftypes from '@tensorflow/tfjs';
import { tf } from './backend.js';
import { saveCheckpoint } from './checkpoint.js';
import { NetworkConfig, TrainConfig } from './config.js';
import { DatasetIndex, prepareInput, sampleGroundTruth, sampleStackDir } from './data.js';
import { bceLoss, compositeLoss, l1Loss } from './losses.js';
import { buildNetwork } from './model.js';
import { ssim } from './metrics.js';

export interface LoadedSample {
  id: string;
  input: Float32Array;  // [n, n, c]
  base: Float64Array;   // [n, n]
  gt: Float64Array;     // [n, n]
  size: number;
  channels: number;
}

export function loadSamples(index: DatasetIndex, ids: string[], residual: boolean): LoadedSample[] {
  return ids.map((id) => {
    const prep = prepareInput(sampleStackDir(index.root, id), residual);
    const gt = sampleGroundTruth(index.root, id);
    if (gt.length !== prep.size * prep.size) {
      throw new Error(`${id}: ground truth does not match stack field size`);
    }
    return {
      id,
      input: prep.data,
      base: prep.base,
      gt,
      size: prep.size,
      channels: prep.channels,
    };
  });
}

function targetFor(sample: LoadedSample, residual: boolean): Float32Array {
  const t = new Float32Array(sample.gt.length);
  for (let i = 0; i < t.length; i++) {
    t[i] = residual ? sample.gt[i] - sample.base[i] : sample.gt[i];
  }
  return t;
}

export function toBatchTensors(
  samples: LoadedSample[], residual: boolean,
): { xs: tftypes.Tensor4D; ys: tftypes.Tensor4D } {
  const n = samples[0].size;
  const c = samples[0].channels;
  const xs = new Float32Array(samples.length * n * n * c);
  const ys = new Float32Array(samples.length * n * n);
  samples.forEach((s, i) => {
    xs.set(s.input, i * n * n * c);
    ys.set(targetFor(s, residual), i * n * n);
  });
  return {
    xs: tf.tensor4d(xs, [samples.length, n, n, c]),
    ys: tf.tensor4d(ys, [samples.length, n, n, 1]),
  };
}

/** Deterministic batch order: seeded LCG shuffle per epoch. */
function* batchIndices(count: number, batchSize: number, seed: number): Generator<number[]> {
  let state = (seed >>> 0) || 1;
  const next = () => {
    state = (1664525 * state + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
  for (;;) {
    const order = Array.from({ length: count }, (_, i) => i);
    for (let i = count - 1; i > 0; i--) {
      const j = Math.floor(next() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    for (let at = 0; at + batchSize <= count || at === 0; at += batchSize) {
      yield order.slice(at, at + batchSize);
      if (at + batchSize >= count) break;
    }
  }
}

export interface TrainLogEntry {
  step: number;
  loss: number;
  stage: 1 | 2;
}

/** One optimizer step on (xs, ys) with the gradient accumulated over memory
 *  bounded chunks; exact full-batch descent, deterministic. */
function accumulatedStep(
  optimizer: tftypes.Optimizer,
  model: tftypes.LayersModel,
  xs: tftypes.Tensor4D,
  ys: tftypes.Tensor4D,
  lossFn: (pred: tftypes.Tensor, target: tftypes.Tensor) => tftypes.Scalar,
  chunkSize: number,
): number {
  const count = xs.shape[0];
  const chunks: Array<[number, number]> = [];
  for (let at = 0; at < count; at += chunkSize) {
    chunks.push([at, Math.min(chunkSize, count - at)]);
  }
  const accum = new Map<string, tftypes.Tensor>();
  let total = 0;
  for (const [at, size] of chunks) {
    const frac = size / count;
    const { value, grads } = tf.variableGrads(() => {
      const bx = tf.slice(xs, [at, 0, 0, 0], [size, -1, -1, -1]);
      const by = tf.slice(ys, [at, 0, 0, 0], [size, -1, -1, -1]);
      return lossFn(model.apply(bx, { training: true }) as tftypes.Tensor, by);
    });
    total += value.dataSync()[0] * frac;
    value.dispose();
    for (const [name, g] of Object.entries(grads)) {
      const scaled = tf.mul(g, frac);
      g.dispose();
      const prev = accum.get(name);
      if (prev) {
        accum.set(name, tf.add(prev, scaled));
        prev.dispose();
        scaled.dispose();
      } else {
        accum.set(name, scaled);
      }
    }
  }
  optimizer.applyGradients(Object.fromEntries(accum));
  for (const g of accum.values()) g.dispose();
  return total;
}

export interface TrainResult {
  model: tftypes.LayersModel;
  log: TrainLogEntry[];
  hardMiningIds: string[];
}

export function predictTensor(
  model: tftypes.LayersModel, sample: LoadedSample, residual: boolean,
): Float64Array {
  const n = sample.size;
  const out = tf.tidy(() => {
    const x = tf.tensor4d(sample.input, [1, n, n, sample.channels]);
    const y = model.predict(x) as tftypes.Tensor4D;
    return y.reshape([n * n]);
  });
  const raw = out.dataSync();
  out.dispose();
  const img = new Float64Array(n * n);
  for (let i = 0; i < img.length; i++) {
    const v = residual ? raw[i] + sample.base[i] : raw[i];
    img[i] = Math.min(1, Math.max(0, v));
  }
  return img;
}

export function selectHardMiningIds(
  model: tftypes.LayersModel, samples: LoadedSample[], residual: boolean, fraction: number,
): string[] {
  const scored = samples.map((s) => ({
    id: s.id,
    ssim: ssim(predictTensor(model, s, residual), s.gt, s.size, s.size),
  }));
  scored.sort((a, b) => a.ssim - b.ssim || (a.id < b.id ? -1 : 1));
  const keep = Math.max(1, Math.round(fraction * samples.length));
  return scored.slice(0, keep).map((s) => s.id);
}

export async function train(
  index: DatasetIndex,
  netCfg: NetworkConfig,
  trainCfg: TrainConfig,
  outDir: string,
  options: { stopAtTrainPsnr?: number; log?: (msg: string) => void } = {},
): Promise<TrainResult> {
  const log = options.log ?? (() => undefined);
  const ids = index.splits.train.length ? index.splits.train : index.samples;
  const samples = loadSamples(index, ids, netCfg.residualLearning);
  const n = samples[0].size;
  if (samples[0].channels !== netCfg.inputChannels) {
    throw new Error(
      `network expects ${netCfg.inputChannels} channels, dataset provides ${samples[0].channels}`,
    );
  }

  const model = buildNetwork(netCfg, n);
  const optimizer = tf.train.adam(trainCfg.learningRate);
  const { xs, ys } = toBatchTensors(samples, netCfg.residualLearning);
  const lossFn = netCfg.variant === 'slm' ? bceLoss : l1Loss;

  const entries: TrainLogEntry[] = [];
  const fullBatch = trainCfg.batchSize >= samples.length;
  const batches = batchIndices(samples.length, trainCfg.batchSize, trainCfg.seed);
  for (let step = 1; step <= trainCfg.steps; step++) {
    let lossVal: number;
    if (fullBatch) {
      lossVal = accumulatedStep(optimizer, model, xs, ys, lossFn, 8);
    } else {
      const idx = batches.next().value as number[];
      lossVal = tf.tidy(() => {
        const bx = tf.gather(xs, idx);
        const by = tf.gather(ys, idx);
        const l = optimizer.minimize(
          () => lossFn(model.apply(bx, { training: true }) as tftypes.Tensor, by),
          true,
        ) as tftypes.Scalar;
        return l.dataSync()[0];
      });
    }
    entries.push({ step, loss: lossVal, stage: 1 });
    if (step % 25 === 0 || step === 1) log(`stage1 step ${step}: loss ${lossVal.toFixed(5)}`);
    if (options.stopAtTrainPsnr !== undefined && step % 50 === 0) {
      const p = meanTrainPsnr(model, samples, netCfg.residualLearning);
      log(`stage1 step ${step}: train PSNR ${p.toFixed(2)} dB`);
      if (p >= options.stopAtTrainPsnr) break;
    }
  }

  // Stage 2: tune on the worst-SSIM subset with the composite loss.
  let hardIds: string[] = [];
  if (trainCfg.hardMiningSteps > 0 && samples.length > 1) {
    hardIds = selectHardMiningIds(
      model, samples, netCfg.residualLearning, trainCfg.hardMiningFraction,
    );
    const hard = samples.filter((s) => hardIds.includes(s.id));
    const hb = toBatchTensors(hard, netCfg.residualLearning);
    const hardBatches = batchIndices(
      hard.length, Math.min(trainCfg.batchSize, hard.length), trainCfg.seed + 1,
    );
    const baseT = tf.tensor4d(
      Float32Array.from(hard.flatMap((s) => Array.from(s.base))),
      [hard.length, n, n, 1],
    );
    const gtT = tf.tensor4d(
      Float32Array.from(hard.flatMap((s) => Array.from(s.gt))),
      [hard.length, n, n, 1],
    );
    for (let step = 1; step <= trainCfg.hardMiningSteps; step++) {
      const idx = hardBatches.next().value as number[];
      const lossVal = tf.tidy(() => {
        const bx = tf.gather(hb.xs, idx);
        const bBase = tf.gather(baseT, idx);
        const bGt = tf.gather(gtT, idx);
        const l = optimizer.minimize(() => {
          let pred = model.apply(bx, { training: true }) as tftypes.Tensor4D;
          if (netCfg.residualLearning) pred = tf.add(pred, bBase) as tftypes.Tensor4D;
          return compositeLoss(pred, bGt as tftypes.Tensor4D, trainCfg.ssimLossWeight);
        }, true) as tftypes.Scalar;
        return l.dataSync()[0];
      });
      entries.push({ step, loss: lossVal, stage: 2 });
      if (step % 25 === 0 || step === 1) log(`stage2 step ${step}: loss ${lossVal.toFixed(5)}`);
    }
    hb.xs.dispose();
    hb.ys.dispose();
    baseT.dispose();
    gtT.dispose();
  }

  xs.dispose();
  ys.dispose();
  await saveCheckpoint(model, netCfg, outDir);
  fs.writeFileSync(
    path.join(outDir, 'training_log.json'),
    JSON.stringify({ config: trainCfg, hard_mining_ids: hardIds, entries }, null, 2) + '\n',
  );
  return { model, log: entries, hardMiningIds: hardIds };
}

export function meanTrainPsnr(
  model: tftypes.LayersModel, samples: LoadedSample[], residual: boolean,
): number {
  let total = 0;
  for (const s of samples) {
    const pred = predictTensor(model, s, residual);
    let err = 0;
    for (let i = 0; i < pred.length; i++) err += (pred[i] - s.gt[i]) ** 2;
    total += 10 * Math.log10(1 / (err / pred.length));
  }
  return total / samples.length;
}

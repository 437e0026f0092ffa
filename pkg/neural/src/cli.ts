/**
 * CLI: node dist/cli.js <train|predict|evaluate> [flags]
 *
 *   train    --dataset DIR --out DIR [--preset desk|sim|slm] [--steps N]
 *            [--batch N] [--lr F] [--seed N] [--hard-steps N] [--hard-frac F]
 *   predict  --checkpoint DIR --stack DIR --out DIR [--threshold]
 *   evaluate --checkpoint DIR --dataset DIR --split train|val|test [--out FILE]
 */
import fs from 'node:fs';
import path from 'node:path';
import { parseArgs } from 'node:util';
import { setupBackend } from './backend.js';
import { loadCheckpoint } from './checkpoint.js';
import { defaultTrainConfig, networkPreset } from './config.js';
import { prepareInput, readDataset, sampleStackDir } from './data.js';
import { evaluateSplit, rowsToCsv } from './evaluate.js';
import { predictStack, writePrediction } from './predict.js';
import { train } from './train.js';

function fail(msg: string): never {
  console.error(`error: ${msg}`);
  process.exit(2);
}

async function cmdTrain(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      dataset: { type: 'string' },
      out: { type: 'string' },
      preset: { type: 'string', default: 'desk' },
      steps: { type: 'string', default: '2000' },
      batch: { type: 'string', default: '8' },
      lr: { type: 'string', default: '0.0003' },
      seed: { type: 'string', default: '0' },
      'hard-steps': { type: 'string', default: '200' },
      'hard-frac': { type: 'string', default: '0.2' },
      'stop-psnr': { type: 'string' },
    },
  });
  if (!values.dataset || !values.out) fail('train requires --dataset and --out');
  await setupBackend();
  const index = readDataset(values.dataset);
  const firstId = index.splits.train[0] ?? index.samples[0];
  const probe = prepareInput(sampleStackDir(index.root, firstId), true);
  const netCfg = networkPreset(values.preset!, probe.channels);
  const trainCfg = defaultTrainConfig({
    steps: parseInt(values.steps!, 10),
    batchSize: parseInt(values.batch!, 10),
    learningRate: parseFloat(values.lr!),
    seed: parseInt(values.seed!, 10),
    hardMiningSteps: parseInt(values['hard-steps']!, 10),
    hardMiningFraction: parseFloat(values['hard-frac']!),
  });
  const result = await train(index, netCfg, trainCfg, values.out, {
    stopAtTrainPsnr: values['stop-psnr'] ? parseFloat(values['stop-psnr']) : undefined,
    log: (m) => console.log(m),
  });
  console.log(
    `trained ${result.log.length} steps; checkpoint in ${values.out}; ` +
      `hard-mining subset: ${result.hardMiningIds.length} samples`,
  );
  return 0;
}

async function cmdPredict(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      checkpoint: { type: 'string' },
      stack: { type: 'string' },
      out: { type: 'string' },
      threshold: { type: 'boolean', default: false },
    },
  });
  if (!values.checkpoint || !values.stack || !values.out) {
    fail('predict requires --checkpoint, --stack and --out');
  }
  await setupBackend();
  const { model, cfg } = await loadCheckpoint(values.checkpoint);
  const pred = predictStack(model, cfg, values.stack);
  writePrediction(pred, values.out, values.threshold);
  console.log(`wrote prediction (${pred.size}x${pred.size}) to ${values.out}`);
  return 0;
}

async function cmdEvaluate(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      checkpoint: { type: 'string' },
      dataset: { type: 'string' },
      split: { type: 'string', default: 'test' },
      out: { type: 'string' },
    },
  });
  if (!values.checkpoint || !values.dataset) fail('evaluate requires --checkpoint and --dataset');
  const split = values.split as 'train' | 'val' | 'test';
  if (!['train', 'val', 'test'].includes(split)) fail(`unknown split ${values.split}`);
  await setupBackend();
  const { model, cfg } = await loadCheckpoint(values.checkpoint);
  const rows = evaluateSplit(model, cfg, readDataset(values.dataset), split);
  const csv = rowsToCsv(rows);
  if (values.out) {
    fs.mkdirSync(path.dirname(values.out) || '.', { recursive: true });
    fs.writeFileSync(values.out, csv);
    console.log(`wrote ${rows.length} rows to ${values.out}`);
  } else {
    process.stdout.write(csv);
  }
  return 0;
}

async function main(): Promise<number> {
  const [cmd, ...rest] = process.argv.slice(2);
  try {
    switch (cmd) {
      case 'train': return await cmdTrain(rest);
      case 'predict': return await cmdPredict(rest);
      case 'evaluate': return await cmdEvaluate(rest);
      default:
        console.error('usage: cli <train|predict|evaluate> [flags]');
        return 2;
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

main().then((code) => process.exit(code));

/** Per-sample metric table over a dataset split (CSV schema matching the
 *  toolkit CLI: name,mse,psnr,ssim,bce). */
import type * as tftypes from '@tensorflow/tfjs';
import { NetworkConfig } from './config.js';
import { DatasetIndex, sampleGroundTruth, sampleStackDir } from './data.js';
import { computeReport, Report } from './metrics.js';
import { predictStack } from './predict.js';

export interface EvalRow {
  id: string;
  report: Report;
}

export function evaluateSplit(
  model: tftypes.LayersModel,
  cfg: NetworkConfig,
  index: DatasetIndex,
  split: 'train' | 'val' | 'test',
): EvalRow[] {
  const ids = index.splits[split];
  return ids.map((id) => {
    const pred = predictStack(model, cfg, sampleStackDir(index.root, id));
    const gt = sampleGroundTruth(index.root, id);
    return { id, report: computeReport(pred.image, gt, pred.size, pred.size) };
  });
}

export function rowsToCsv(rows: EvalRow[]): string {
  const fmt = (r: Report) =>
    [
      r.mse.toExponential(8).replace('e', 'e'),
      Number.isFinite(r.psnr) ? r.psnr.toFixed(6) : 'inf',
      r.ssim.toFixed(6),
      r.bce.toExponential(8),
    ].join(',');
  const lines = ['name,mse,psnr,ssim,bce'];
  for (const row of rows) lines.push(`${row.id},${fmt(row.report)}`);
  return lines.join('\n') + '\n';
}

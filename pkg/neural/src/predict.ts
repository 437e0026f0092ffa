/** Inference: stack directory -> prediction PNG (+ CAFP raster, + optional
 *  thresholded binary for the binary-target variant). */
import fs from 'node:fs';
import path from 'node:path';
import type * as tftypes from '@tensorflow/tfjs';
import { writeCafpF32 } from './cafp.js';
import { NetworkConfig } from './config.js';
import { prepareInput } from './data.js';
import { tf } from './backend.js';
import { writePng } from './png.js';

export interface Prediction {
  size: number;
  image: Float64Array; // [0, 1]
}

export function predictStack(
  model: tftypes.LayersModel, cfg: NetworkConfig, stackDir: string,
): Prediction {
  const prep = prepareInput(stackDir, cfg.residualLearning);
  if (prep.channels !== cfg.inputChannels) {
    throw new Error(
      `checkpoint expects ${cfg.inputChannels} channels, stack provides ${prep.channels}`,
    );
  }
  const n = prep.size;
  const out = tf.tidy(() => {
    const x = tf.tensor4d(prep.data, [1, n, n, prep.channels]);
    return (model.predict(x) as tftypes.Tensor4D).reshape([n * n]);
  });
  const raw = out.dataSync();
  out.dispose();
  const image = new Float64Array(n * n);
  for (let i = 0; i < image.length; i++) {
    const v = cfg.residualLearning ? raw[i] + prep.base[i] : raw[i];
    image[i] = Math.min(1, Math.max(0, v));
  }
  return { size: n, image };
}

export function writePrediction(
  pred: Prediction, outDir: string, withThreshold = false,
): void {
  fs.mkdirSync(outDir, { recursive: true });
  const img = { width: pred.size, height: pred.size, data: pred.image };
  writePng(path.join(outDir, 'prediction.png'), img, 16);
  writeCafpF32(path.join(outDir, 'prediction.cafp'), [pred.size, pred.size], pred.image);
  if (withThreshold) {
    const bin = new Float64Array(pred.image.length);
    for (let i = 0; i < bin.length; i++) bin[i] = pred.image[i] >= 0.5 ? 1 : 0;
    writePng(path.join(outDir, 'prediction_thresh.png'), { ...img, data: bin }, 8);
  }
}

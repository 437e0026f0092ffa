/**
 * Training losses. The stage-2 composite is
 * bce + lambda * (1 - SSIM), with SSIM differentiable (11x11 Gaussian
 * window, sigma 1.5, K1=0.01, K2=0.03, dynamic range 1) so it can be
 * optimized directly.
 */
import type * as tftypes from '@tensorflow/tfjs';
import { tf } from './backend.js';

const RADIUS = 5;
const SIGMA = 1.5;
const C1 = 0.01 ** 2;
const C2 = 0.03 ** 2;

let cachedWindow: tftypes.Tensor4D | null = null;

function gaussianWindow(): tftypes.Tensor4D {
  if (!cachedWindow) {
    const size = 2 * RADIUS + 1;
    const g = new Float32Array(size);
    let sum = 0;
    for (let i = 0; i < size; i++) {
      g[i] = Math.exp(-((i - RADIUS) ** 2) / (2 * SIGMA * SIGMA));
      sum += g[i];
    }
    const k = new Float32Array(size * size);
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) k[y * size + x] = (g[y] / sum) * (g[x] / sum);
    }
    cachedWindow = tf.keep(tf.tensor4d(k, [size, size, 1, 1]));
  }
  return cachedWindow;
}

/** Mean SSIM per batch element; inputs [b, h, w, 1] in [0, 1]. */
export function ssimMap(a: tftypes.Tensor4D, b: tftypes.Tensor4D): tftypes.Tensor {
  return tf.tidy(() => {
    const win = gaussianWindow();
    const filt = (t: tftypes.Tensor4D) => tf.conv2d(t, win, 1, 'valid');
    const ua = filt(a);
    const ub = filt(b);
    const uaa = filt(tf.mul(a, a) as tftypes.Tensor4D);
    const ubb = filt(tf.mul(b, b) as tftypes.Tensor4D);
    const uab = filt(tf.mul(a, b) as tftypes.Tensor4D);
    const va = tf.sub(uaa, tf.mul(ua, ua));
    const vb = tf.sub(ubb, tf.mul(ub, ub));
    const cab = tf.sub(uab, tf.mul(ua, ub));
    const num = tf.mul(
      tf.add(tf.mul(tf.mul(ua, ub), 2), C1),
      tf.add(tf.mul(cab, 2), C2),
    );
    const den = tf.mul(
      tf.add(tf.add(tf.mul(ua, ua), tf.mul(ub, ub)), C1),
      tf.add(tf.add(va, vb), C2),
    );
    return tf.div(num, den);
  });
}

export function ssimScalar(a: tftypes.Tensor4D, b: tftypes.Tensor4D): tftypes.Scalar {
  return tf.tidy(() => tf.mean(ssimMap(a, b)) as tftypes.Scalar);
}

export function bceLoss(pred: tftypes.Tensor, target: tftypes.Tensor): tftypes.Scalar {
  return tf.tidy(() => {
    const eps = 1e-7;
    const p = tf.clipByValue(pred, eps, 1 - eps);
    const t1 = tf.mul(target, tf.log(p));
    const t2 = tf.mul(tf.sub(1, target), tf.log(tf.sub(1, p)));
    return tf.neg(tf.mean(tf.add(t1, t2))) as tftypes.Scalar;
  });
}

export function l1Loss(pred: tftypes.Tensor, target: tftypes.Tensor): tftypes.Scalar {
  return tf.tidy(() => tf.mean(tf.abs(tf.sub(pred, target))) as tftypes.Scalar);
}

/** Stage-2 loss: bce + lambda * (1 - SSIM); nonnegative since SSIM <= 1. */
export function compositeLoss(
  pred: tftypes.Tensor4D, target: tftypes.Tensor4D, lambda: number,
): tftypes.Scalar {
  return tf.tidy(() => {
    const clamped = tf.clipByValue(pred, 0, 1) as tftypes.Tensor4D;
    const ssimTerm = tf.sub(1, ssimScalar(clamped, target));
    return tf.add(bceLoss(clamped, target), tf.mul(ssimTerm, lambda)) as tftypes.Scalar;
  });
}

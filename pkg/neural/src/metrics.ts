/**
 * Evaluation metrics in float64, mirroring the toolkit CLI definitions
 * (peak 1.0; SSIM with 11x11 Gaussian sigma 1.5, symmetric boundary,
 * population covariance, edge-cropped mean) so reports agree to 1e-6.
 */

const RADIUS = 5;
const SIGMA = 1.5;
const K1 = 0.01;
const K2 = 0.03;
const BCE_EPS = 1e-7;

export function mse(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) throw new Error('mse: length mismatch');
  let s = 0;
  for (let i = 0; i < a.length; i++) s += (a[i] - b[i]) ** 2;
  return s / a.length;
}

export function psnr(a: Float64Array, b: Float64Array): number {
  const m = mse(a, b);
  return m === 0 ? Infinity : 10 * Math.log10(1 / m);
}

export function bce(pred: Float64Array, target: Float64Array): number {
  if (pred.length !== target.length) throw new Error('bce: length mismatch');
  let s = 0;
  for (let i = 0; i < pred.length; i++) {
    const p = Math.min(Math.max(pred[i], BCE_EPS), 1 - BCE_EPS);
    s += target[i] * Math.log(p) + (1 - target[i]) * Math.log(1 - p);
  }
  return -s / pred.length;
}

function gaussian(): Float64Array {
  const size = 2 * RADIUS + 1;
  const g = new Float64Array(size);
  let sum = 0;
  for (let i = 0; i < size; i++) {
    g[i] = Math.exp(-((i - RADIUS) ** 2) / (2 * SIGMA * SIGMA));
    sum += g[i];
  }
  for (let i = 0; i < size; i++) g[i] /= sum;
  return g;
}

/** Separable correlation with symmetric (half-sample) boundary. */
function filterSym(img: Float64Array, h: number, w: number, g: Float64Array): Float64Array {
  const r = RADIUS;
  const reflect = (i: number, n: number) => {
    // half-sample symmetric: ... 1 0 | 0 1 ... n-1 | n-1 ...
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  };
  const rows = new Float64Array(h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let s = 0;
      for (let k = -r; k <= r; k++) s += g[k + r] * img[y * w + reflect(x + k, w)];
      rows[y * w + x] = s;
    }
  }
  const out = new Float64Array(h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let s = 0;
      for (let k = -r; k <= r; k++) s += g[k + r] * rows[reflect(y + k, h) * w + x];
      out[y * w + x] = s;
    }
  }
  return out;
}

export function ssim(a: Float64Array, b: Float64Array, h: number, w: number): number {
  if (a.length !== h * w || b.length !== h * w) throw new Error('ssim: bad dims');
  if (Math.min(h, w) < 2 * RADIUS + 1) throw new Error('ssim: image smaller than window');
  const g = gaussian();
  const mul = (x: Float64Array, y: Float64Array) => {
    const o = new Float64Array(x.length);
    for (let i = 0; i < x.length; i++) o[i] = x[i] * y[i];
    return o;
  };
  const ua = filterSym(a, h, w, g);
  const ub = filterSym(b, h, w, g);
  const uaa = filterSym(mul(a, a), h, w, g);
  const ubb = filterSym(mul(b, b), h, w, g);
  const uab = filterSym(mul(a, b), h, w, g);
  const c1 = K1 * K1;
  const c2 = K2 * K2;
  let sum = 0;
  let count = 0;
  for (let y = RADIUS; y < h - RADIUS; y++) {
    for (let x = RADIUS; x < w - RADIUS; x++) {
      const i = y * w + x;
      const va = uaa[i] - ua[i] * ua[i];
      const vb = ubb[i] - ub[i] * ub[i];
      const cab = uab[i] - ua[i] * ub[i];
      sum +=
        ((2 * ua[i] * ub[i] + c1) * (2 * cab + c2)) /
        ((ua[i] * ua[i] + ub[i] * ub[i] + c1) * (va + vb + c2));
      count++;
    }
  }
  return sum / count;
}

export interface Report {
  mse: number;
  psnr: number;
  ssim: number;
  bce: number;
}

export function computeReport(pred: Float64Array, gt: Float64Array, h: number, w: number): Report {
  return {
    mse: mse(pred, gt),
    psnr: psnr(pred, gt),
    ssim: ssim(pred, gt, h, w),
    bce: bce(pred, gt),
  };
}

/** Bicubic upsampling (Keys kernel a = -0.5, half-pixel centers, edge clamp)
 *  matching the toolkit's measurement-preparation convention. */

function kernel(t: number, a = -0.5): number {
  t = Math.abs(t);
  if (t <= 1) return (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1;
  if (t < 2) return a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a;
  return 0;
}

function axisWeights(nIn: number, nOut: number): { idx: Int32Array; w: Float64Array } {
  const idx = new Int32Array(nOut * 4);
  const w = new Float64Array(nOut * 4);
  for (let i = 0; i < nOut; i++) {
    // corner-aligned: decimated rasters sample the object grid at stride
    // nOut/nIn starting at pixel 0
    const src = (i * nIn) / nOut;
    const base = Math.floor(src);
    for (let t = 0; t < 4; t++) {
      const j = base - 1 + t;
      idx[i * 4 + t] = Math.min(Math.max(j, 0), nIn - 1);
      w[i * 4 + t] = kernel(src - j);
    }
  }
  return { idx, w };
}

export function upsampleBicubic(
  src: ArrayLike<number>, h: number, w: number, outH: number, outW: number,
): Float64Array {
  if (outH < h || outW < w) throw new Error('upsampleBicubic only enlarges');
  const rows = axisWeights(h, outH);
  const cols = axisWeights(w, outW);
  const tmp = new Float64Array(outH * w); // rows resampled
  for (let i = 0; i < outH; i++) {
    for (let t = 0; t < 4; t++) {
      const wi = rows.w[i * 4 + t];
      if (wi === 0) continue;
      const r = rows.idx[i * 4 + t] * w;
      for (let x = 0; x < w; x++) tmp[i * w + x] += wi * (src[r + x] as number);
    }
  }
  const out = new Float64Array(outH * outW);
  for (let j = 0; j < outW; j++) {
    for (let t = 0; t < 4; t++) {
      const wj = cols.w[j * 4 + t];
      if (wj === 0) continue;
      const c = cols.idx[j * 4 + t];
      for (let y = 0; y < outH; y++) out[y * outW + j] += wj * tmp[y * w + c];
    }
  }
  return out;
}

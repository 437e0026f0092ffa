/**
 * Global test setup: materializes fixtures produced by the toolkit CLI and
 * API (the external interfaces this package consumes). Idempotent; delete
 * tests/fixtures to regenerate.
 */
import { execFileSync } from 'node:child_process';
import fs from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

const here = path.dirname(fileURLToPath(import.meta.url));
const fixtures = path.join(here, '..', 'fixtures');

function py(code: string): string {
  return execFileSync('python3', ['-c', code], { encoding: 'utf-8' });
}

export default function setup(): void {
  fs.mkdirSync(fixtures, { recursive: true });

  const schedule = path.join(fixtures, 'mini_k2.json');
  if (!fs.existsSync(schedule)) {
    py(`
from apsynth import apertures as ap
base = ap.build_mini_layout(field_size=64, diameter=16, seed=0)
ap.save_layout(ap.build_snapshot_schedule(base, 2, seed=0), ${JSON.stringify(schedule)})
`);
  }

  const dataset = path.join(fixtures, 'desk-ds');
  if (!fs.existsSync(path.join(dataset, 'manifest.json'))) {
    execFileSync('python3', [
      '-m', 'apsynth.cli', 'dataset',
      '--preset', 'desk64',
      '--counts', '32', '0', '10',
      '--layout', schedule,
      '--out', dataset,
      '--seed', '0',
      '--threads', '4',
    ]);
  }

  const cross = path.join(fixtures, 'cross');
  if (!fs.existsSync(path.join(cross, 'manifest.json'))) {
    fs.mkdirSync(cross, { recursive: true });
    py(`
import json
import numpy as np
from apsynth import io as rio
from apsynth.fields import upsample_bicubic
from apsynth.metrics import compute_report

root = ${JSON.stringify(cross)}
rng = np.random.default_rng(77)

t32 = rng.standard_normal((5, 7)).astype(np.float32)
t64 = rng.standard_normal((3, 4, 2))
rio.write_tensor(t32, root + '/t32.cafp')
rio.write_tensor(t64, root + '/t64.cafp')

gray = rng.random((9, 11))
rio.save_png(gray, root + '/gray8.png', bit_depth=8)
rio.save_png(gray, root + '/gray16.png', bit_depth=16)
from PIL import Image
rgb = (rng.random((6, 5, 3)) * 255).astype('uint8')
Image.fromarray(rgb, mode='RGB').save(root + '/rgb.png')

src = rng.random((6, 9))
up = upsample_bicubic(src, 20, 15)

pairs = []
for i in range(10):
    a = rng.random((48, 48))
    b = np.clip(a + 0.1 * rng.standard_normal((48, 48)), 0, 1)
    rio.save_png(a, f'{root}/pair{i}_a.png', bit_depth=16)
    rio.save_png(b, f'{root}/pair{i}_b.png', bit_depth=16)
    qa = rio.load_png(f'{root}/pair{i}_a.png')
    qb = rio.load_png(f'{root}/pair{i}_b.png')
    r = compute_report(qa, qb)
    pairs.append({'mse': r.mse, 'psnr': r.psnr, 'ssim': r.ssim, 'bce': r.bce})

json.dump({
    't32': [t32.shape, np.float64(t32).ravel().tolist()],
    't64': [t64.shape, t64.ravel().tolist()],
    'gray': [gray.shape, gray.ravel().tolist()],
    'rgb_luma': (np.asarray(rgb, dtype=np.float64)[..., :3] @ np.array([0.299, 0.587, 0.114]) / 255.0).ravel().tolist(),
    'bicubic_src': [src.shape, src.ravel().tolist()],
    'bicubic_up': [up.shape, up.ravel().tolist()],
    'metric_reports': pairs,
}, open(root + '/manifest.json', 'w'))
`);
  }
}

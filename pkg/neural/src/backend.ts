/**
 * tfjs backend setup. The WASM backend carries every kernel the network
 * needs except the convolution filter gradient, which we register here as a
 * composite (the batch<->channel transposed-convolution identity), making
 * WASM fully trainable. Falls back to the pure-JS cpu backend if WASM is
 * unavailable.
 */
import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';
import { createRequire } from 'node:module';
import path from 'node:path';

let ready: Promise<string> | null = null;

function registerConvFilterGrad(backendName: string): void {
  if (tf.getKernel('Conv2DBackpropFilter', backendName)) return;
  tf.registerKernel({
    kernelName: 'Conv2DBackpropFilter',
    backendName,
    kernelFunc: ({ inputs, attrs }) => {
      const { x, dy } = inputs as { x: tf.Tensor4D; dy: tf.Tensor4D };
      const a = attrs as unknown as {
        strides: number | [number, number];
        pad: 'valid' | 'same' | number;
        dataFormat: string;
        dimRoundingMode?: 'floor' | 'round' | 'ceil';
        filterShape: [number, number, number, number];
      };
      if (a.dataFormat !== 'NHWC' && a.dataFormat !== 'channelsLast') {
        throw new Error(`Conv2DBackpropFilter composite supports NHWC only, got ${a.dataFormat}`);
      }
      const info = tf.backend_util.computeConv2DInfo(
        x.shape as [number, number, number, number],
        a.filterShape, a.strides, 1, a.pad, a.dimRoundingMode);
      return tf.tidy(() => {
        const xt = tf.transpose(x, [3, 1, 2, 0]); // [ci, H, W, b]
        const padded = tf.pad(xt, [
          [0, 0],
          [info.padInfo.top, info.padInfo.bottom],
          [info.padInfo.left, info.padInfo.right],
          [0, 0],
        ]);
        const filt = tf.transpose(dy, [1, 2, 0, 3]); // [OH, OW, b, co]
        const res = tf.conv2d(
          padded as tf.Tensor4D, filt as tf.Tensor4D,
          1, 'valid', 'NHWC', [info.strideHeight, info.strideWidth]);
        const sliced = tf.slice(res, [0, 0, 0, 0],
          [res.shape[0], a.filterShape[0], a.filterShape[1], res.shape[3]]);
        return tf.transpose(sliced, [1, 2, 0, 3]); // [kh, kw, ci, co]
      });
    },
  });
}

export async function setupBackend(prefer: 'wasm' | 'cpu' = 'wasm'): Promise<string> {
  if (!ready) {
    ready = (async () => {
      if (prefer === 'wasm') {
        try {
          const require = createRequire(import.meta.url);
          const dist = path.dirname(require.resolve('@tensorflow/tfjs-backend-wasm'));
          setWasmPaths(dist + path.sep);
          await tf.setBackend('wasm');
          await tf.ready();
          registerConvFilterGrad('wasm');
          return 'wasm';
        } catch {
          // fall through to cpu
        }
      }
      await tf.setBackend('cpu');
      await tf.ready();
      return 'cpu';
    })();
  }
  return ready;
}

export { tf };

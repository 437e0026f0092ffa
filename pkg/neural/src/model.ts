/**
 * Dense-block U-Net: an initial 3x3 convolution, `levels` encoder stages
 * (dense block then a compressing transition with max-pooling), a bottleneck
 * dense block, and `levels` decoder stages (compressing upsampling layer
 * with transposed convolution, concatenated with the encoder skip, then a
 * dense block), closed by a 1x1 convolution. Building blocks follow the
 * DenseNet bottleneck pattern BN-PReLU-Conv(1x1, 4k)-BN-PReLU-Conv(3x3, k).
 */
import type * as tftypes from '@tensorflow/tfjs';
import { tf } from './backend.js';
import { NetworkConfig } from './config.js';

type Sym = tftypes.SymbolicTensor;

let uid = 0;
let seedCounter = 0;

function nextSeed(): number {
  seedCounter += 1;
  return seedCounter;
}

function seededConv(opts: Record<string, unknown>): tftypes.layers.Layer {
  return tf.layers.conv2d({
    ...opts,
    kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
  } as never);
}

function bnPrelu(x: Sym, name: string): Sym {
  let y = tf.layers.batchNormalization({ name: `${name}_bn_${uid++}` }).apply(x) as Sym;
  y = tf.layers
    .prelu({ alphaInitializer: 'zeros', sharedAxes: [1, 2], name: `${name}_prelu_${uid++}` })
    .apply(y) as Sym;
  return y;
}

function buildingBlock(x: Sym, growth: number, name: string): Sym {
  let y = bnPrelu(x, `${name}_a`);
  y = seededConv({ filters: 4 * growth, kernelSize: 1, padding: 'same', name: `${name}_c1_${uid++}` })
    .apply(y) as Sym;
  y = bnPrelu(y, `${name}_b`);
  y = seededConv({ filters: growth, kernelSize: 3, padding: 'same', name: `${name}_c3_${uid++}` })
    .apply(y) as Sym;
  return tf.layers.concatenate({ name: `${name}_cat_${uid++}` }).apply([x, y]) as Sym;
}

function denseBlock(x: Sym, cfg: NetworkConfig, name: string): Sym {
  let y = x;
  for (let i = 0; i < cfg.blocksPerDense; i++) {
    y = buildingBlock(y, cfg.growthRate, `${name}_bb${i}`);
  }
  return y;
}

function channels(x: Sym): number {
  return x.shape[x.shape.length - 1] as number;
}

function transitionDown(x: Sym, theta: number, name: string): Sym {
  let y = bnPrelu(x, name);
  y = seededConv({
    filters: Math.max(1, Math.round(theta * channels(x))),
    kernelSize: 1,
    name: `${name}_c_${uid++}`,
  }).apply(y) as Sym;
  return tf.layers.maxPooling2d({ poolSize: 2, name: `${name}_pool_${uid++}` }).apply(y) as Sym;
}

function upsampling(x: Sym, theta: number, name: string): Sym {
  // transition layer with the max-pooling replaced by a deconvolution
  let y = bnPrelu(x, name);
  const filters = Math.max(1, Math.round(theta * channels(x)));
  y = seededConv({ filters, kernelSize: 1, name: `${name}_c_${uid++}` }).apply(y) as Sym;
  return tf.layers
    .conv2dTranspose({
      filters, kernelSize: 2, strides: 2, name: `${name}_up_${uid++}`,
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
    })
    .apply(y) as Sym;
}

export function buildNetwork(
  cfg: NetworkConfig, inputSize: number, seed = 0,
): tftypes.LayersModel {
  if (inputSize % 2 ** cfg.levels !== 0) {
    throw new Error(`input size ${inputSize} not divisible by 2^${cfg.levels}`);
  }
  seedCounter = seed * 10_000;
  const input = tf.input({ shape: [inputSize, inputSize, cfg.inputChannels], name: `in_${uid++}` });
  let x = seededConv({
    filters: cfg.initialFeatures,
    kernelSize: 3,
    padding: 'same',
    name: `init_${uid++}`,
  }).apply(input) as Sym;

  const skips: Sym[] = [];
  for (let level = 0; level < cfg.levels; level++) {
    x = denseBlock(x, cfg, `enc${level}`);
    skips.push(x);
    x = transitionDown(x, cfg.thetaDown, `down${level}`);
  }
  // 2*levels dense blocks total: the deepest transition feeds the deepest
  // upsampling directly (no bottleneck block).
  for (let level = cfg.levels - 1; level >= 0; level--) {
    x = upsampling(x, cfg.thetaUp, `up${level}`);
    x = tf.layers.concatenate({ name: `skip${level}_${uid++}` }).apply([x, skips[level]]) as Sym;
    x = denseBlock(x, cfg, `dec${level}`);
  }
  // Residual variants start near the bright-field base: a small-scale head
  // keeps the initial prediction close to the base while leaving gradient
  // flow to the body intact.
  x = tf.layers
    .conv2d({
      filters: 1,
      kernelSize: 1,
      activation: cfg.variant === 'slm' ? 'sigmoid' : 'linear',
      kernelInitializer: cfg.residualLearning
        ? tf.initializers.varianceScaling({
            scale: 0.01, mode: 'fanIn', distribution: 'truncatedNormal', seed: nextSeed(),
          })
        : tf.initializers.glorotUniform({ seed: nextSeed() }),
      name: `head_${uid++}`,
    })
    .apply(x) as Sym;
  return tf.model({ inputs: input, outputs: x, name: `denseunet_${cfg.variant}_${uid++}` });
}

/** Dense blocks in the network: levels encoder + levels decoder. */
export function denseBlockCount(cfg: NetworkConfig): number {
  return 2 * cfg.levels;
}

/** Network and training configuration presets. */

export interface NetworkConfig {
  variant: 'slm' | 'sim' | 'desk';
  growthRate: number;            // feature maps added per building block
  blocksPerDense: number;        // building blocks per dense block
  levels: number;                // transitions == upsampling layers == levels
  thetaDown: number;             // transition compression
  thetaUp: number;               // upsampling compression
  initialFeatures: number;       // channels out of the first 3x3 conv
  residualLearning: boolean;     // predict ground truth minus bright-field base
  inputChannels: number;         // measurement channels (+1 base when residual)
}

export interface TrainConfig {
  learningRate: number;
  steps: number;                 // optimizer steps for stage 1
  batchSize: number;
  seed: number;
  hardMiningFraction: number;    // worst-SSIM share of the train set
  hardMiningSteps: number;       // stage-2 optimizer steps
  ssimLossWeight: number;        // lambda of the composite stage-2 loss
}

/** slm: the 16-camera experimental net (14 dense blocks = 7 down + 7 up). */
export function slmPreset(inputChannels = 16): NetworkConfig {
  return {
    variant: 'slm',
    growthRate: 24,
    blocksPerDense: 5,
    levels: 7,
    thetaDown: 0.8,
    thetaUp: 0.2,
    initialFeatures: 64,
    residualLearning: false,
    inputChannels,
  };
}

/** sim: the array-simulation net (6 levels, growth 16, residual head). */
export function simPreset(inputChannels = 10): NetworkConfig {
  return {
    variant: 'sim',
    growthRate: 16,
    blocksPerDense: 5,
    levels: 6,
    thetaDown: 0.8,
    thetaUp: 0.2,
    initialFeatures: 64,
    residualLearning: true,
    inputChannels,
  };
}

/** desk: small residual variant for the 64x64 / 9x(d=16) desk-scale layout. */
export function deskPreset(inputChannels = 10): NetworkConfig {
  return {
    variant: 'desk',
    growthRate: 6,
    blocksPerDense: 2,
    levels: 2,
    thetaDown: 0.8,
    thetaUp: 0.2,
    initialFeatures: 12,
    residualLearning: true,
    inputChannels,
  };
}

export function defaultTrainConfig(overrides: Partial<TrainConfig> = {}): TrainConfig {
  return {
    learningRate: 3e-4,
    steps: 2000,
    batchSize: 8,
    seed: 0,
    hardMiningFraction: 0.2,
    hardMiningSteps: 200,
    ssimLossWeight: 0.01,
    ...overrides,
  };
}

export function networkPreset(name: string, inputChannels: number): NetworkConfig {
  switch (name) {
    case 'slm': return slmPreset(inputChannels);
    case 'sim': return simPreset(inputChannels);
    case 'desk': return deskPreset(inputChannels);
    default: throw new Error(`unknown network preset '${name}'`);
  }
}

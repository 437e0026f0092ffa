/**
 * Self-describing checkpoints on the local filesystem: model.json (topology
 * + weight specs), weights.bin, and network.json (the NetworkConfig used to
 * build the model).
 */
import fs from 'node:fs';
import path from 'node:path';
import type * as tftypes from '@tensorflow/tfjs';
import { tf } from './backend.js';
import { NetworkConfig } from './config.js';

export async function saveCheckpoint(
  model: tftypes.LayersModel, cfg: NetworkConfig, dir: string,
): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save({
    save: async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData));
      const meta = {
        modelTopology: artifacts.modelTopology,
        weightSpecs: artifacts.weightSpecs,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: null,
      };
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(meta));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      };
    },
  });
  fs.writeFileSync(path.join(dir, 'network.json'), JSON.stringify(cfg, null, 2) + '\n');
}

export async function loadCheckpoint(
  dir: string,
): Promise<{ model: tftypes.LayersModel; cfg: NetworkConfig }> {
  const cfg = JSON.parse(fs.readFileSync(path.join(dir, 'network.json'), 'utf-8'));
  const meta = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'));
  const weightData = fs.readFileSync(path.join(dir, 'weights.bin'));
  const model = await tf.loadLayersModel({
    load: async () => ({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset, weightData.byteOffset + weightData.byteLength,
      ),
    }),
  });
  return { model, cfg };
}

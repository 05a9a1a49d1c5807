/**
 * Thin bindings over the capkit toolkit for training scripts: log-mel
 * feature extraction (with resampling), dataset-mixture streams,
 * waveform augmentation, and the caption metrics suite. Every function
 * delegates to the capkit CLI and exchanges data through its documented
 * file formats; no logic lives on this side of the boundary.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { BoundArray, decodeCapk, encodeCapk } from "./capk.js";
import { CapkitError, readJsonl, runCapkit, withWorkspace, writeJsonl } from "./runner.js";
import { decodeWavFloat32, encodeWavFloat32 } from "./wav.js";

export { BoundArray, decodeCapk, encodeCapk, CapkitError };
export { encodeWavFloat32, decodeWavFloat32 };

export interface StreamItem {
  dataset: "audioset" | "audiocaps" | "clotho";
  index: number;
  epoch: number;
}

export interface CandidateRecord {
  id: string;
  text: string;
}

export interface ReferenceRecord {
  id: string;
  texts: string[];
}

export interface SpiceRecord {
  id: string;
  spice: number;
}

export interface EvalReport {
  corpus: Record<string, number>;
  perItem: Array<Record<string, unknown>>;
}

export interface AugmentOptions {
  pEach?: number;
  noiseStdRange?: [number, number];
  shiftFractionRange?: [number, number];
  gainDbRange?: [number, number];
  seed?: number;
}

/**
 * Log-mel features for a mono float waveform at any input rate; the
 * toolkit resamples to 16 kHz before extraction. Returns the fixed
 * (80, 3000) feature matrix as a zero-copy view over the tensor file.
 */
export function boundLogMel(samples: Float32Array, sampleRate: number): BoundArray {
  return withWorkspace(
    { features: { inputs: ["input.wav"] } },
    (ws) => {
      fs.writeFileSync(path.join(ws.dir, "input.wav"), encodeWavFloat32(samples, sampleRate));
      runCapkit(["--config", ws.configPath, "features"], ws.dir);
      const raw = fs.readFileSync(path.join(ws.outDir, "features", "input.capk"));
      return decodeCapk(raw);
    },
  );
}

/**
 * First `draws` items of the deterministic mixture stream for the given
 * per-dataset sizes and audioset:audiocaps:clotho ratio.
 */
export function boundSampleStream(
  sizes: [number, number, number],
  ratio: [number, number, number],
  seed: number,
  draws: number,
  clothoExpansion = 5,
): StreamItem[] {
  return withWorkspace(
    {
      mixture: {
        ratio,
        sizes,
        seed,
        clotho_expansion: clothoExpansion,
      },
    },
    (ws) => {
      runCapkit(
        ["--config", ws.configPath, "mix-plan", "--draws", String(draws)],
        ws.dir,
      );
      return readJsonl(path.join(ws.outDir, "mix_plan.jsonl")) as StreamItem[];
    },
  );
}

/**
 * Corpus metrics for candidate captions against references, optionally
 * combining ingested SPICE scores into SPIDEr. Returns the toolkit's
 * report document.
 */
export function boundEvaluate(
  candidates: CandidateRecord[],
  references: ReferenceRecord[],
  spice?: SpiceRecord[],
): EvalReport {
  return withWorkspace({}, (ws) => {
    const candPath = path.join(ws.dir, "candidates.jsonl");
    const refPath = path.join(ws.dir, "references.jsonl");
    writeJsonl(candPath, candidates);
    writeJsonl(refPath, references);
    const overrides = [
      "--set",
      `eval.candidates=${JSON.stringify(candPath)}`,
      "--set",
      `eval.references=${JSON.stringify(refPath)}`,
    ];
    if (spice) {
      const spicePath = path.join(ws.dir, "spice.jsonl");
      writeJsonl(spicePath, spice);
      overrides.push("--set", `eval.spice=${JSON.stringify(spicePath)}`);
    }
    runCapkit(["--config", ws.configPath, ...overrides, "eval"], ws.dir);
    const report = JSON.parse(
      fs.readFileSync(path.join(ws.outDir, "report.json"), "utf-8"),
    ) as { corpus: Record<string, number>; per_item: Array<Record<string, unknown>> };
    return { corpus: report.corpus, perItem: report.per_item };
  });
}

/**
 * Waveform augmentation pipeline (noise, rollover shift, clipped gain),
 * each stage gated by an independent Bernoulli draw.
 */
export function boundAugmentPipeline(
  samples: Float32Array,
  sampleRate: number,
  options: AugmentOptions = {},
): Float32Array {
  const augment: Record<string, unknown> = { inputs: ["input.wav"] };
  if (options.pEach !== undefined) augment.p_each = options.pEach;
  if (options.noiseStdRange) augment.noise_std_range = options.noiseStdRange;
  if (options.shiftFractionRange) augment.shift_fraction_range = options.shiftFractionRange;
  if (options.gainDbRange) augment.gain_db_range = options.gainDbRange;
  if (options.seed !== undefined) augment.seed = options.seed;
  return withWorkspace({ augment }, (ws) => {
    fs.writeFileSync(path.join(ws.dir, "input.wav"), encodeWavFloat32(samples, sampleRate));
    runCapkit(["--config", ws.configPath, "augment"], ws.dir);
    const raw = fs.readFileSync(path.join(ws.outDir, "augmented", "input.wav"));
    const copy = Buffer.from(raw); // detach from the file read buffer
    return decodeWavFloat32(copy).samples;
  });
}

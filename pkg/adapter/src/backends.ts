/**
 * Model backends behind the wire protocol.
 *
 * The stub pair keeps the adapter self-contained and deterministic: the
 * detector returns a fixed (possibly empty) box list, and the echo
 * classifier derives a one-hot vote from the clip bytes, which makes
 * canned request/response fixtures possible. Real pretrained weights are
 * hosted through the ONNX backend when model paths are supplied; loading
 * failures abort before serving, per the protocol contract.
 */

import { WireDetection, decodeLuma, normalizeTheta } from './protocol.js';

export interface DetectorBackend {
  detect(pixels: Buffer, width: number, height: number): Promise<WireDetection[]>;
}

export interface ClassifierBackend {
  classify(frames: Buffer[], width: number, height: number): Promise<number[]>;
}

export interface Backends {
  detector: DetectorBackend;
  classifier: ClassifierBackend;
}

export class StubDetector implements DetectorBackend {
  constructor(private readonly boxes: WireDetection[]) {}

  async detect(): Promise<WireDetection[]> {
    return this.boxes.map((b) => ({ ...b, theta_deg: normalizeTheta(b.theta_deg) }));
  }
}

/** One-hot of (sum of all decoded frame bytes) mod 5; see conformance notes. */
export class EchoClassifier implements ClassifierBackend {
  async classify(frames: Buffer[]): Promise<number[]> {
    let sum = 0;
    for (const frame of frames) {
      for (const byte of frame) sum = (sum + byte) % 5;
    }
    const probs = [0, 0, 0, 0, 0];
    probs[sum] = 1;
    return probs;
  }
}

export class FixedClassifier implements ClassifierBackend {
  constructor(private readonly bin: number) {
    if (bin < 0 || bin > 4) throw new Error(`bin index out of range: ${bin}`);
  }

  async classify(): Promise<number[]> {
    const probs = [0, 0, 0, 0, 0];
    probs[this.bin] = 1;
    return probs;
  }
}

export interface ModelPaths {
  detectorModel?: string;
  classifierModel?: string;
}

/**
 * Host real ONNX models. Expected signatures (documented hosting contract):
 * the detector maps a float32 [1, 1, H, W] luma tensor to [N, 7] rows of
 * (cx, cy, w, h, theta_deg, conf, cls) with cls 0 = chute, 1 = urchute; the
 * classifier maps [1, n, H, W] clips to 5 logits, softmaxed here. Any load
 * or shape failure exits nonzero before the serve loop starts.
 */
export async function loadOnnxBackends(paths: ModelPaths, fallback: Backends): Promise<Backends> {
  if (!paths.detectorModel && !paths.classifierModel) return fallback;
  let ort: typeof import('onnxruntime-node');
  try {
    ort = await import('onnxruntime-node');
  } catch (err) {
    console.error(`model load failed: onnxruntime-node unavailable (${err})`);
    process.exit(1);
  }
  const backends: Backends = { ...fallback };
  try {
    if (paths.detectorModel) {
      const session = await ort.InferenceSession.create(paths.detectorModel);
      backends.detector = {
        async detect(pixels: Buffer, width: number, height: number) {
          const data = Float32Array.from(pixels, (v) => v / 255);
          const input = new ort.Tensor('float32', data, [1, 1, height, width]);
          const output = await session.run({ [session.inputNames[0]]: input });
          const rows = output[session.outputNames[0]];
          const flat = rows.data as Float32Array;
          const out: WireDetection[] = [];
          for (let i = 0; i + 7 <= flat.length; i += 7) {
            out.push({
              cls: flat[i + 6] < 0.5 ? 'chute' : 'urchute',
              cx: flat[i], cy: flat[i + 1], w: flat[i + 2], h: flat[i + 3],
              theta_deg: normalizeTheta(flat[i + 4]), conf: flat[i + 5],
            });
          }
          return out;
        },
      };
    }
    if (paths.classifierModel) {
      const session = await ort.InferenceSession.create(paths.classifierModel);
      backends.classifier = {
        async classify(frames: Buffer[], width: number, height: number) {
          const data = new Float32Array(frames.length * width * height);
          frames.forEach((frame, k) => {
            frame.forEach((v, i) => { data[k * width * height + i] = v / 255; });
          });
          const input = new ort.Tensor('float32', data, [1, frames.length, height, width]);
          const output = await session.run({ [session.inputNames[0]]: input });
          const logits = Array.from(output[session.outputNames[0]].data as Float32Array);
          const peak = Math.max(...logits);
          const exps = logits.map((v) => Math.exp(v - peak));
          const total = exps.reduce((a, b) => a + b, 0);
          return exps.map((v) => v / total);
        },
      };
    }
  } catch (err) {
    console.error(`model load failed: ${err}`);
    process.exit(1);
  }
  return backends;
}

export function decodeFrames(framesB64: string[], width: number, height: number): Buffer[] {
  return framesB64.map((b64) => decodeLuma(b64, width, height));
}

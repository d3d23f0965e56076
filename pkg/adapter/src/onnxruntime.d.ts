/**
 * Minimal ambient surface of onnxruntime-node, which is an optional runtime
 * dependency: it is only imported dynamically when model paths are supplied,
 * and absence is reported as a model-load failure at startup.
 */
declare module 'onnxruntime-node' {
  export class Tensor {
    constructor(type: string, data: Float32Array, dims: number[]);
    readonly data: unknown;
  }

  export class InferenceSession {
    static create(path: string): Promise<InferenceSession>;
    readonly inputNames: string[];
    readonly outputNames: string[];
    run(feeds: Record<string, Tensor>): Promise<Record<string, Tensor>>;
  }
}

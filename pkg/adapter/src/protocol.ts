/**
 * Wire-protocol types and serialization for the pourwatch model adapter.
 *
 * Transport is newline-delimited JSON over stdin/stdout. Requests carry a
 * numeric id (except ping); responses echo it and may be emitted out of
 * order. Field order in responses is part of the byte-level conformance
 * contract, so objects below are constructed in their canonical order.
 */

export interface PingRequest {
  op: 'ping';
}

export interface DetectRequest {
  id: number;
  op: 'detect';
  width: number;
  height: number;
  pixels_b64: string;
}

export interface ClassifyRequest {
  id: number;
  op: 'classify';
  n: number;
  width: number;
  height: number;
  frames_b64: string[];
}

export type Request = PingRequest | DetectRequest | ClassifyRequest;

export interface WireDetection {
  cls: 'chute' | 'urchute';
  cx: number;
  cy: number;
  w: number;
  h: number;
  theta_deg: number;
  conf: number;
}

/** Axial-angle convention: every emitted angle lies in [0, 180). */
export function normalizeTheta(thetaDeg: number): number {
  return ((thetaDeg % 180) + 180) % 180;
}

export function pingResponse(ready: boolean, window: number): string {
  return JSON.stringify({ ready, window });
}

export function detectResponse(id: number, detections: WireDetection[]): string {
  return JSON.stringify({
    id,
    detections: detections.map((d) => ({
      cls: d.cls,
      cx: d.cx,
      cy: d.cy,
      w: d.w,
      h: d.h,
      theta_deg: normalizeTheta(d.theta_deg),
      conf: d.conf,
    })),
  });
}

export function classifyResponse(id: number, probs: number[]): string {
  return JSON.stringify({ id, probs });
}

export function errorResponse(id: number | null, code: string): string {
  return JSON.stringify({ id, error: code });
}

export function parseRequest(line: string): Request | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== 'object' || obj === null) return null;
  const rec = obj as Record<string, unknown>;
  if (rec.op === 'ping') return { op: 'ping' };
  if (typeof rec.id !== 'number') return null;
  if (rec.op === 'detect'
    && typeof rec.width === 'number' && typeof rec.height === 'number'
    && typeof rec.pixels_b64 === 'string') {
    return rec as unknown as DetectRequest;
  }
  if (rec.op === 'classify'
    && typeof rec.n === 'number' && typeof rec.width === 'number'
    && typeof rec.height === 'number' && Array.isArray(rec.frames_b64)
    && rec.frames_b64.every((f) => typeof f === 'string')) {
    return rec as unknown as ClassifyRequest;
  }
  return null;
}

/** Extract a request id for error echoing even when the shape is invalid. */
export function requestIdOf(line: string): number | null {
  try {
    const obj = JSON.parse(line);
    if (typeof obj === 'object' && obj !== null && typeof obj.id === 'number') {
      return obj.id;
    }
  } catch {
    /* malformed line, no id */
  }
  return null;
}

export function decodeLuma(b64: string, width: number, height: number): Buffer {
  const buf = Buffer.from(b64, 'base64');
  if (buf.length !== width * height) {
    throw new Error(`luma payload is ${buf.length} bytes, expected ${width * height}`);
  }
  return buf;
}

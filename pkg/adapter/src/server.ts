/**
 * The serve loop: newline-delimited JSON requests on stdin, responses on
 * stdout. Pings are answered immediately (ready=false until the backends
 * resolve); malformed or unknown requests produce error objects and the loop
 * continues. Responses normally follow request order; the reorder-pairs test
 * mode holds every other response to genuinely exercise out-of-order
 * delivery, which clients must tolerate by matching ids.
 */

import { createInterface } from 'node:readline';

import { Backends, decodeFrames } from './backends.js';
import {
  classifyResponse,
  detectResponse,
  errorResponse,
  parseRequest,
  pingResponse,
  requestIdOf,
} from './protocol.js';

export interface ServerOptions {
  window?: number;
  notReadyPings?: number;   // answer ready=false to the first N pings
  reorderPairs?: boolean;   // hold every odd response, emit pairs reversed
}

export class AdapterServer {
  private ready = false;
  private pings = 0;
  private held: string | null = null;
  private readonly window: number;

  constructor(private readonly backendsPromise: Promise<Backends>,
              private readonly opts: ServerOptions = {},
              private readonly out: NodeJS.WritableStream = process.stdout) {
    this.window = opts.window ?? 4;
    backendsPromise.then(() => { this.ready = true; }).catch(() => { /* exits in loader */ });
  }

  private emit(line: string): void {
    if (this.opts.reorderPairs) {
      if (this.held === null) {
        this.held = line;
        return;
      }
      this.out.write(line + '\n');
      this.out.write(this.held + '\n');
      this.held = null;
      return;
    }
    this.out.write(line + '\n');
  }

  /** Flush a held reorder-mode response at end of input. */
  flush(): void {
    if (this.held !== null) {
      this.out.write(this.held + '\n');
      this.held = null;
    }
  }

  async handleLine(line: string): Promise<void> {
    const trimmed = line.trim();
    if (!trimmed) return;
    const req = parseRequest(trimmed);
    if (req === null) {
      this.emit(errorResponse(requestIdOf(trimmed), 'bad_request'));
      return;
    }
    if (req.op === 'ping') {
      this.pings += 1;
      const notReady = this.pings <= (this.opts.notReadyPings ?? 0) || !this.ready;
      // Pings bypass reordering: the handshake precedes pipelined traffic.
      this.out.write(pingResponse(!notReady, this.window) + '\n');
      return;
    }
    const backends = await this.backendsPromise;
    try {
      if (req.op === 'detect') {
        const pixels = decodeFrames([req.pixels_b64], req.width, req.height)[0];
        const detections = await backends.detector.detect(pixels, req.width, req.height);
        this.emit(detectResponse(req.id, detections));
      } else {
        const frames = decodeFrames(req.frames_b64, req.width, req.height);
        if (frames.length !== req.n) {
          this.emit(errorResponse(req.id, 'bad_request'));
          return;
        }
        const probs = await backends.classifier.classify(frames, req.width, req.height);
        this.emit(classifyResponse(req.id, probs));
      }
    } catch {
      this.emit(errorResponse(req.id, 'bad_request'));
    }
  }

  async serve(input: NodeJS.ReadableStream = process.stdin): Promise<void> {
    const rl = createInterface({ input, crlfDelay: Infinity });
    for await (const line of rl) {
      await this.handleLine(line);
    }
    this.flush();
  }
}

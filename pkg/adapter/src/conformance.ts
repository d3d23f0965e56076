/**
 * Loader for the shared wire-protocol conformance vectors.
 *
 * The vectors file is the single source of truth for byte-level protocol
 * fixtures; the pipeline's client test suite pins its request bytes against
 * the same file this package pins its response bytes against.
 */

import { readFileSync } from 'node:fs';
import { dirname, resolve } from 'node:path';
import { fileURLToPath } from 'node:url';

export interface SingleVector {
  name: string;
  kind: 'ping' | 'detect' | 'classify' | 'error';
  request: string;
  response: string;
}

export interface SequenceVector {
  name: string;
  kind: 'sequence';
  order_significant: boolean;
  requests: string[];
  responses: string[];
}

export type Vector = SingleVector | SequenceVector;

export interface VectorFile {
  format: string;
  notes: Record<string, string>;
  vectors: Vector[];
}

export function vectorsPath(): string {
  const here = dirname(fileURLToPath(import.meta.url));
  // dist/src -> package root -> repository root -> protocol/
  return resolve(here, '..', '..', '..', 'protocol', 'conformance_vectors.json');
}

export function loadVectors(path: string = vectorsPath()): VectorFile {
  const doc = JSON.parse(readFileSync(path, 'utf-8')) as VectorFile;
  if (doc.format !== 'pourwatch-adapter-conformance/1') {
    throw new Error(`unsupported vectors format ${doc.format}`);
  }
  return doc;
}

export function vectorByName(doc: VectorFile, name: string): Vector {
  const vec = doc.vectors.find((v) => v.name === name);
  if (!vec) throw new Error(`no conformance vector named ${name}`);
  return vec;
}

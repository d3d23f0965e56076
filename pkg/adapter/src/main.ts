#!/usr/bin/env node
/**
 * Adapter entry point.
 *
 * Stub mode (default) serves the fixed-box detector and the echo
 * classifier, which is what the conformance vectors pin. Supplying
 * --detector-model / --classifier-model hosts real ONNX weights instead;
 * a model that fails to load exits nonzero before serving.
 */

import { Backends, EchoClassifier, FixedClassifier, StubDetector, loadOnnxBackends } from './backends.js';
import { WireDetection } from './protocol.js';
import { AdapterServer, ServerOptions } from './server.js';

interface CliOptions extends ServerOptions {
  boxes: WireDetection[];
  classify: string;
  detectorModel?: string;
  classifierModel?: string;
}

function parseArgs(argv: string[]): CliOptions {
  const opts: CliOptions = { boxes: [], classify: 'echo' };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case '--boxes': opts.boxes = JSON.parse(next()); break;
      case '--classify': opts.classify = next(); break;
      case '--detector-model': opts.detectorModel = next(); break;
      case '--classifier-model': opts.classifierModel = next(); break;
      case '--window': opts.window = Number(next()); break;
      case '--not-ready-pings': opts.notReadyPings = Number(next()); break;
      case '--reorder-pairs': opts.reorderPairs = true; break;
      default: throw new Error(`unknown flag ${arg}`);
    }
  }
  return opts;
}

function stubBackends(opts: CliOptions): Backends {
  let classifier;
  if (opts.classify === 'echo') {
    classifier = new EchoClassifier();
  } else if (opts.classify.startsWith('fixed:')) {
    classifier = new FixedClassifier(Number(opts.classify.slice('fixed:'.length)));
  } else {
    throw new Error(`unknown classifier mode ${opts.classify}`);
  }
  return { detector: new StubDetector(opts.boxes), classifier };
}

async function main(): Promise<void> {
  let opts: CliOptions;
  try {
    opts = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(String(err));
    process.exit(2);
  }
  const backends = loadOnnxBackends(
    { detectorModel: opts.detectorModel, classifierModel: opts.classifierModel },
    stubBackends(opts),
  );
  const server = new AdapterServer(backends, opts);
  await server.serve();
}

main().catch((err) => {
  console.error(String(err));
  process.exit(1);
});

#!/usr/bin/env node
/**
 * word-bridge: serve local checkpoints as protocol-v1 next-unit predictors.
 *
 *   word-bridge build --corpus train.txt --vocab vocab.txt --scheme wordpiece \
 *       --order 3 [--discount 0.75] [--mask-unit "[MASK]"] [--embedding-dim 16] \
 *       --out ckpt/
 *   word-bridge serve --checkpoint ckpt/ --mode causal|masked-append \
 *       [--transport stdio|tcp] [--port 9000]
 *   word-bridge export-vocab --checkpoint ckpt/ --out vocab.txt
 */

import { buildCheckpoint, loadCheckpoint, Mode } from './checkpoint';
import { Scheme } from './protocol';
import { exportVocab } from './tokenizer';
import { serveStdio, serveTcp } from './transport';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got: ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) {
    throw new Error(`missing required flag --${name}`);
  }
  return value;
}

function fatal(message: string): never {
  process.stdout.write(JSON.stringify({ type: 'error', message }) + '\n');
  process.exit(1);
}

function cmdServe(flags: Map<string, string>): void {
  let checkpoint;
  try {
    checkpoint = loadCheckpoint(required(flags, 'checkpoint'));
  } catch (error) {
    // handshake refusal: an error line instead of a hello
    fatal(String(error));
  }
  const mode = (flags.get('mode') ?? 'causal') as Mode;
  if (mode !== 'causal' && mode !== 'masked-append') {
    fatal(`unknown mode ${mode}`);
  }
  const transport = flags.get('transport') ?? 'stdio';
  if (transport === 'stdio') {
    serveStdio(checkpoint, mode);
  } else if (transport === 'tcp') {
    const port = parseInt(flags.get('port') ?? '0', 10);
    serveTcp(checkpoint, mode, port, (bound) => {
      process.stderr.write(`listening on 127.0.0.1:${bound}\n`);
    });
  } else {
    fatal(`unknown transport ${transport}`);
  }
}

function cmdExportVocab(flags: Map<string, string>): void {
  const checkpoint = loadCheckpoint(required(flags, 'checkpoint'));
  exportVocab(
    checkpoint.dir,
    checkpoint.config.scheme,
    required(flags, 'out'),
  );
}

function cmdBuild(flags: Map<string, string>): void {
  buildCheckpoint({
    corpusPath: required(flags, 'corpus'),
    vocabPath: required(flags, 'vocab'),
    scheme: (flags.get('scheme') ?? 'wordpiece') as Scheme,
    order: parseInt(flags.get('order') ?? '3', 10),
    discount: parseFloat(flags.get('discount') ?? '0.75'),
    maskUnit: flags.get('mask-unit') ?? null,
    embeddingDim: parseInt(flags.get('embedding-dim') ?? '16', 10),
    outDir: required(flags, 'out'),
  });
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    switch (command) {
      case 'serve':
        cmdServe(flags);
        break;
      case 'export-vocab':
        cmdExportVocab(flags);
        break;
      case 'build':
        cmdBuild(flags);
        break;
      default:
        process.stderr.write(
          'usage: word-bridge <serve|export-vocab|build> --flag value ...\n',
        );
        process.exit(2);
    }
  } catch (error) {
    process.stderr.write(String(error) + '\n');
    process.exit(1);
  }
}

main();

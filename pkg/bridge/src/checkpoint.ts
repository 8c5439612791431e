/**
 * Local checkpoint directories served by the bridge.
 *
 * Layout:
 *   checkpoint.json   {"format":"count-lm-v1","scheme":...,"order":N,
 *                      "discount":D,"mask_unit":"[MASK]"|null,
 *                      "embedding_dim":E}
 *   vocab.txt         unit list (toolkit wordpiece/bpe vocab format)
 *   merges.txt        bpe only
 *   counts.json       CountModel levels
 *   embeddings.json   {"word":[...]} static per-word vectors (optional)
 */

import * as fs from 'fs';
import * as path from 'path';

import { CountAccumulator, CountLm, CountModel } from './countlm';
import { Scheme } from './protocol';
import {
  SubwordVocab,
  loadVocab,
  segmentOrUnknown,
} from './tokenizer';

export type Mode = 'causal' | 'masked-append';

export interface CheckpointConfig {
  format: 'count-lm-v1';
  scheme: Scheme;
  order: number;
  discount: number;
  mask_unit: string | null;
  embedding_dim: number;
}

export interface Checkpoint {
  dir: string;
  config: CheckpointConfig;
  vocab: SubwordVocab;
  lm: CountLm;
  maskId: number | null;
  embeddings: Map<string, number[]>;
}

export function loadCheckpoint(dir: string): Checkpoint {
  const configPath = path.join(dir, 'checkpoint.json');
  if (!fs.existsSync(configPath)) {
    throw new Error(`unknown model: ${dir} has no checkpoint.json`);
  }
  const config = JSON.parse(
    fs.readFileSync(configPath, 'utf8'),
  ) as CheckpointConfig;
  if (config.format !== 'count-lm-v1') {
    throw new Error(`unknown model: unsupported format ${config.format}`);
  }
  const vocabPath =
    config.scheme === 'wordpiece' ? path.join(dir, 'vocab.txt') : dir;
  const vocab = loadVocab(vocabPath, config.scheme);
  const model = JSON.parse(
    fs.readFileSync(path.join(dir, 'counts.json'), 'utf8'),
  ) as CountModel;
  let maskId: number | null = null;
  if (config.mask_unit !== null) {
    const id = vocab.units.get(config.mask_unit);
    if (id === undefined) {
      throw new Error(
        `checkpoint declares mask unit ${config.mask_unit} missing from vocab`,
      );
    }
    maskId = id;
  }
  const embeddings = new Map<string, number[]>();
  const embPath = path.join(dir, 'embeddings.json');
  if (fs.existsSync(embPath)) {
    const raw = JSON.parse(fs.readFileSync(embPath, 'utf8')) as Record<
      string,
      number[]
    >;
    for (const [word, vector] of Object.entries(raw)) {
      embeddings.set(word, vector);
    }
  }
  return { dir, config, vocab, lm: new CountLm(model), maskId, embeddings };
}

export interface BuildOptions {
  corpusPath: string;
  vocabPath: string; // wordpiece file or bpe directory
  scheme: Scheme;
  order: number;
  discount: number;
  maskUnit: string | null;
  embeddingDim: number;
  outDir: string;
}

/**
 * Train a count checkpoint from a one-sentence-per-line corpus. Word vectors
 * are co-occurrence rows against the most frequent anchor words within a
 * +-5 window, length-normalized; crude, but deterministic and geometry-true.
 */
export function buildCheckpoint(opts: BuildOptions): void {
  const vocab = loadVocab(opts.vocabPath, opts.scheme);
  let maskId: number | null = null;
  if (opts.maskUnit !== null) {
    const id = vocab.units.get(opts.maskUnit);
    if (id === undefined) {
      throw new Error(`mask unit ${opts.maskUnit} is not in the vocabulary`);
    }
    maskId = id;
  }
  const sentences = fs
    .readFileSync(opts.corpusPath, 'utf8')
    .split('\n')
    .map((line) => line.split(/\s+/).filter(Boolean))
    .filter((words) => words.length > 0);
  if (sentences.length === 0) {
    throw new Error(`${opts.corpusPath}: empty corpus`);
  }

  const acc = new CountAccumulator(
    opts.order,
    opts.discount,
    vocab.idToUnit.length,
  );
  for (const words of sentences) {
    const seq: number[] = [];
    for (const word of words) {
      const ids = segmentOrUnknown(vocab, word);
      if (ids === null) {
        throw new Error(
          `word "${word}" is not segmentable and no unknown unit is defined`,
        );
      }
      seq.push(...ids);
    }
    acc.addSequence(seq, maskId);
  }

  const wordCounts = new Map<string, number>();
  for (const words of sentences) {
    for (const word of words) {
      wordCounts.set(word, (wordCounts.get(word) ?? 0) + 1);
    }
  }
  const anchors = Array.from(wordCounts.entries())
    .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
    .slice(0, opts.embeddingDim)
    .map(([word]) => word);
  const anchorIndex = new Map(anchors.map((w, i) => [w, i]));
  const rows = new Map<string, number[]>();
  for (const words of sentences) {
    for (let i = 0; i < words.length; i++) {
      let row = rows.get(words[i]);
      if (!row) {
        row = new Array(opts.embeddingDim).fill(0);
        rows.set(words[i], row);
      }
      const lo = Math.max(0, i - 5);
      const hi = Math.min(words.length, i + 6);
      for (let j = lo; j < hi; j++) {
        if (j === i) continue;
        const a = anchorIndex.get(words[j]);
        if (a !== undefined) row[a] += 1;
      }
    }
  }
  const embeddings: Record<string, number[]> = {};
  for (const word of Array.from(rows.keys()).sort()) {
    const row = rows.get(word)!;
    const norm = Math.sqrt(row.reduce((s, x) => s + x * x, 0)) || 1;
    embeddings[word] = row.map((x) => x / norm);
  }

  fs.mkdirSync(opts.outDir, { recursive: true });
  const config: CheckpointConfig = {
    format: 'count-lm-v1',
    scheme: opts.scheme,
    order: opts.order,
    discount: opts.discount,
    mask_unit: opts.maskUnit,
    embedding_dim: opts.embeddingDim,
  };
  fs.writeFileSync(
    path.join(opts.outDir, 'checkpoint.json'),
    JSON.stringify(config, null, 2) + '\n',
  );
  fs.writeFileSync(
    path.join(opts.outDir, 'counts.json'),
    JSON.stringify(acc.toModel()) + '\n',
  );
  fs.writeFileSync(
    path.join(opts.outDir, 'embeddings.json'),
    JSON.stringify(embeddings) + '\n',
  );
  if (opts.scheme === 'wordpiece') {
    fs.copyFileSync(opts.vocabPath, path.join(opts.outDir, 'vocab.txt'));
  } else {
    fs.copyFileSync(
      path.join(opts.vocabPath, 'vocab.txt'),
      path.join(opts.outDir, 'vocab.txt'),
    );
    fs.copyFileSync(
      path.join(opts.vocabPath, 'merges.txt'),
      path.join(opts.outDir, 'merges.txt'),
    );
  }
}

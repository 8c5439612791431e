/** Shared toy data builders for bridge tests. */

import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

export const ALPHABET = 'abcdefghij';

export const VOCAB_UNITS = [
  ...ALPHABET.split(''),
  ...ALPHABET.split('').map((c) => '##' + c),
  'ba', 'ce', 'dif', 'fe', '##go', '##ff', '##de', '##gi',
  '[UNK]', '[MASK]',
];

const LEXICON: [number, string[]][] = [
  [24.0, ['ba', 'ce']],
  [3.4, ['dif', 'gah', 'bej', 'cad']],
  [0.55, ['fegi', 'hiba', 'jad', 'ebb', 'digo', 'fa']],
  [0.045, ['gja', 'hcde', 'ibb', 'jiff']],
];

/** Deterministic 32-bit PRNG so fixtures never depend on Math.random. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function sampleSentences(n: number, seed: number): string[][] {
  const rng = mulberry32(seed);
  const words: string[] = [];
  const cumulative: number[] = [];
  let total = 0;
  for (const [weight, members] of LEXICON) {
    for (const w of members) {
      words.push(w);
      total += weight;
      cumulative.push(total);
    }
  }
  const pick = () => {
    const x = rng() * total;
    for (let i = 0; i < cumulative.length; i++) {
      if (x < cumulative[i]) return words[i];
    }
    return words[words.length - 1];
  };
  const sentences: string[][] = [];
  for (let i = 0; i < n; i++) {
    const length = 4 + Math.floor(rng() * 8);
    sentences.push(Array.from({ length }, pick));
  }
  return sentences;
}

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export function writeCorpus(file: string, sentences: string[][]): string {
  fs.writeFileSync(file, sentences.map((s) => s.join(' ')).join('\n') + '\n');
  return file;
}

export function writeVocab(file: string, units: string[] = VOCAB_UNITS): string {
  fs.writeFileSync(file, units.join('\n') + '\n');
  return file;
}

export const DIST = path.join(__dirname, '..', 'dist', 'main.js');
export const REPO_ROOT = path.join(__dirname, '..', '..');

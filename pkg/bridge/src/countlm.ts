/**
 * Count-based backoff language model over unit ids with absolute
 * discounting: each context level keeps count - discount for observed units
 * and hands the freed mass to the next shorter context, bottoming out at a
 * uniform distribution, so every unit has probability > 0 in every context.
 */

export interface LevelCounts {
  // context key (ids joined by ",") -> per-unit counts
  [context: string]: [number, number][];
}

export interface CountModel {
  order: number;
  discount: number;
  vocabSize: number;
  levels: LevelCounts[];
}

export function contextKey(units: number[]): string {
  return units.join(',');
}

export class CountLm {
  private totals: Map<string, number>[] = [];
  private buckets: Map<string, Map<number, number>>[] = [];

  constructor(readonly model: CountModel) {
    for (let level = 0; level < model.order; level++) {
      const totals = new Map<string, number>();
      const buckets = new Map<string, Map<number, number>>();
      const source = model.levels[level] ?? {};
      for (const [key, pairs] of Object.entries(source)) {
        const bucket = new Map<number, number>();
        let total = 0;
        for (const [unit, count] of pairs) {
          bucket.set(unit, count);
          total += count;
        }
        buckets.set(key, bucket);
        totals.set(key, total);
      }
      this.totals.push(totals);
      this.buckets.push(buckets);
    }
  }

  get vocabSize(): number {
    return this.model.vocabSize;
  }

  /** Dense probability vector for every unit given the context. */
  distribution(context: number[]): Float64Array {
    const { order, discount, vocabSize } = this.model;
    const probs = new Float64Array(vocabSize).fill(1 / vocabSize);
    const maxLen = Math.min(context.length, order - 1);
    for (let length = 0; length <= maxLen; length++) {
      const key = contextKey(context.slice(context.length - length));
      const bucket = this.buckets[length].get(key);
      if (bucket === undefined) break; // longer contexts share this suffix
      const total = this.totals[length].get(key)!;
      const lambda = (discount * bucket.size) / total;
      for (let u = 0; u < vocabSize; u++) probs[u] *= lambda;
      for (const [unit, count] of bucket) {
        probs[unit] += (count - discount) / total;
      }
    }
    return probs;
  }

  /** Top-k unit ids with log-probabilities, ties by ascending id. */
  topK(context: number[], k: number): [number, number][] {
    const probs = this.distribution(context);
    const ids = Array.from(probs.keys());
    ids.sort((a, b) => probs[b] - probs[a] || a - b);
    return ids.slice(0, k).map((u) => [u, Math.log(probs[u])]);
  }
}

/** Accumulate n-gram counts from unit sequences into a plain CountModel. */
export class CountAccumulator {
  private buckets: Map<string, Map<number, number>>[];

  constructor(
    readonly order: number,
    readonly discount: number,
    readonly vocabSize: number,
  ) {
    this.buckets = Array.from({ length: order }, () => new Map());
  }

  private bump(level: number, key: string, unit: number): void {
    let bucket = this.buckets[level].get(key);
    if (!bucket) {
      bucket = new Map();
      this.buckets[level].set(key, bucket);
    }
    bucket.set(unit, (bucket.get(unit) ?? 0) + 1);
  }

  /**
   * Count one sequence. With `maskUnit` set, every event is also counted
   * against contexts of the form (shorter real context + mask), emulating a
   * model trained to predict at an appended mask position.
   */
  addSequence(seq: number[], maskUnit: number | null = null): void {
    for (let i = 0; i < seq.length; i++) {
      const maxLen = Math.min(i, this.order - 1);
      for (let length = 0; length <= maxLen; length++) {
        const ctx = seq.slice(i - length, i);
        this.bump(length, contextKey(ctx), seq[i]);
        if (maskUnit !== null && length >= 1) {
          const masked = [...ctx.slice(1), maskUnit];
          this.bump(length, contextKey(masked), seq[i]);
        }
      }
    }
  }

  toModel(): CountModel {
    const levels: LevelCounts[] = this.buckets.map((level) => {
      const out: LevelCounts = {};
      const keys = Array.from(level.keys()).sort();
      for (const key of keys) {
        const bucket = level.get(key)!;
        const pairs = Array.from(bucket.entries()).sort((a, b) => a[0] - b[0]);
        out[key] = pairs;
      }
      return out;
    });
    return {
      order: this.order,
      discount: this.discount,
      vocabSize: this.vocabSize,
      levels,
    };
  }
}

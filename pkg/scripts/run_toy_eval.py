#!/usr/bin/env python3
"""End-to-end toy experiment: generate a Zipf-flavored corpus, run corpus
stats, train embeddings, evaluate a trigram subword model at the word level,
and sweep the embedding soft-match depths.

Usage:
    python scripts/run_toy_eval.py [--outdir toy_run] [--seed 0]
                                   [--train-sentences 600] [--test-sentences 80]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from wordeval.cli import main as wordeval_main

LEXICON = {
    24.0: ["ba", "ce"],
    3.4: ["dif", "gah", "bej", "cad"],
    0.55: ["fegi", "hiba", "jad", "ebb", "digo", "fa"],
    0.045: ["gja", "hcde", "ibb", "jiff"],
}

VOCAB_UNITS = (
    list("abcdefghij")
    + ["##" + c for c in "abcdefghij"]
    + ["ba", "ce", "dif", "fe", "##go", "##ff", "##de", "##gi", "[UNK]"]
)


def generate(path: Path, n_sentences: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    words, weights = [], []
    for weight, members in LEXICON.items():
        for w in members:
            words.append(w)
            weights.append(weight)
    probs = np.array(weights) / sum(weights)
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(n_sentences):
            length = int(rng.integers(4, 12))
            picks = rng.choice(len(words), size=length, p=probs)
            fh.write(" ".join(words[i] for i in picks) + "\n")


def run(args: list[str]) -> None:
    print("+ wordeval " + " ".join(args))
    code = wordeval_main(args)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="toy_run")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--train-sentences", type=int, default=600)
    parser.add_argument("--test-sentences", type=int, default=80)
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    train = outdir / "train.txt"
    test = outdir / "test.txt"
    vocab = outdir / "vocab.txt"
    generate(train, args.train_sentences, args.seed)
    generate(test, args.test_sentences, args.seed + 1)
    vocab.write_text("".join(u + "\n" for u in VOCAB_UNITS), encoding="utf-8")

    common = ["--train-corpus", str(train), "--test-corpus", str(test),
              "--output-dir", str(outdir)]
    run(["stats"] + common)
    run(["train-embeddings", "--train-corpus", str(train),
         "--embedding-dim", "24", "--embedding-window", "3",
         "--embedding-epochs", "3", "--embedding-min-count", "5",
         "--seed", str(args.seed), "--output-dir", str(outdir)])
    run(["evaluate"] + common + ["--vocab-path", str(vocab),
                                 "--ngram-order", "3",
                                 "--run-name", "toy-trigram"])
    run(["softmatch",
         "--records", str(outdir / "records.jsonl"),
         "--embeddings", str(outdir / "embeddings.txt"),
         "--output-dir", str(outdir)])
    print(f"\nall reports under {outdir}/")


if __name__ == "__main__":
    main()

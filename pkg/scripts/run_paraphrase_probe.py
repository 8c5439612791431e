#!/usr/bin/env python3
"""Paraphrase probe demo on synthetic data.

Builds a handful of rare/common probe triples plus an embedding table with
planted geometry (variants near their anchors, siblings pushed away for
common words only, simulating frequency-degraded representations), then runs
the probe command and prints the contingency table and chi-square result.

Usage:
    python scripts/run_paraphrase_probe.py [--outdir probe_run] [--seed 0]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from wordeval.cli import main as wordeval_main

TRIPLES = [
    ("rare", "the {} lingered after the storm", "smell", "petrichor", "sound"),
    ("rare", "a {} rested on the ledge", "bird", "wheatear", "lizard"),
    ("rare", "the {} was carved from oak", "vessel", "kylix", "bench"),
    ("rare", "she studied the {} under glass", "mineral", "euclase", "fossil"),
    ("common", "the council voted to {} the project", "cease", "stop", "start"),
    ("common", "he tried to {} the heavy door", "shut", "close", "open"),
    ("common", "they chose to {} the old bridge", "repair", "fix", "break"),
    ("common", "we must {} the remaining food", "divide", "split", "merge"),
]


def build_inputs(outdir: Path, seed: int) -> tuple[Path, Path]:
    rng = np.random.default_rng(seed)
    dim = 16
    vectors: dict[str, np.ndarray] = {}

    def vec(word):
        if word not in vectors:
            vectors[word] = rng.standard_normal(dim)
        return vectors[word]

    triple_lines = []
    for condition, template, anchor, variant, sibling in TRIPLES:
        for w in template.format("x").split():
            vec(w)
        anchor_vec = vec(anchor)
        if condition == "common":
            # well-learned words: the variant hugs its anchor
            vectors[variant] = anchor_vec + 0.05 * rng.standard_normal(dim)
            vectors[sibling] = anchor_vec + 1.5 * rng.standard_normal(dim)
        else:
            # rare words: noisy representation, often no closer than the sibling
            vectors[variant] = 0.2 * anchor_vec + rng.standard_normal(dim)
            vectors[sibling] = anchor_vec + 0.4 * rng.standard_normal(dim)
        triple_lines += [
            f"condition: {condition}",
            "h: " + template.format(anchor),
            "v: " + template.format(variant),
            "a: " + template.format(sibling),
            "",
        ]

    triples_path = outdir / "triples.txt"
    triples_path.write_text("\n".join(triple_lines), encoding="utf-8")
    emb_path = outdir / "embeddings.txt"
    with open(emb_path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for word in sorted(vectors):
            fh.write(word + " "
                     + " ".join(repr(float(x)) for x in vectors[word]) + "\n")
    return triples_path, emb_path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="probe_run")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    triples, embeddings = build_inputs(outdir, args.seed)
    code = wordeval_main(["paraphrase",
                          "--triples", str(triples),
                          "--embeddings", str(embeddings),
                          "--output-dir", str(outdir)])
    if code != 0:
        sys.exit(code)
    print(f"\ncontingency.tsv and chi_square.json under {outdir}/")


if __name__ == "__main__":
    main()

"""Rare-word paraphrase probe: triple-substituted sentences scored by
embedding similarity, with a chi-square test of frequency dependence.

Each probe is three sentences identical except in one slot, filled with a
more-general anchor word, a variant (the rare or common word under test),
and a sibling word that shares the anchor but is not interchangeable with
the variant. The probe scores the (anchor sentence, variant sentence) pair
against the (anchor sentence, sibling sentence) pair; a strictly higher
variant score is a hit. Hits and misses per condition feed a 2x2 Pearson
chi-square.

Triple file format: records separated by blank lines, each record four
lines, in order::

    condition: rare|common
    h: <sentence with the anchor word>
    v: <sentence with the variant word>
    a: <sentence with the sibling word>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import EmbeddingTable
from .errors import DegenerateTableError, EmptyInputError, FormatError

CONDITIONS = ("rare", "common")


@dataclass
class ProbeTriple:
    """One probe: a sentence template and its three slot fillers."""

    condition: str
    anchor_word: str
    variant_word: str
    sibling_word: str
    template: list[str]  # anchor sentence tokens; `slot` is the filler index
    slot: int

    def sentence(self, word: str) -> list[str]:
        tokens = list(self.template)
        tokens[self.slot] = word
        return tokens


@dataclass
class ProbeResult:
    sim_variant: float
    sim_sibling: float
    hit: bool


@dataclass
class ConditionTally:
    hits: int = 0
    misses: int = 0
    skipped: list[int] = field(default_factory=list)  # triple indexes

    @property
    def total(self) -> int:
        return self.hits + self.misses


def load_triples(path: str | Path) -> list[ProbeTriple]:
    """Parse a triple file, validating the single-slot invariant.

    The three sentences of a record must tokenize to the same length and
    differ in exactly one position. Raises FormatError with the offending
    line number otherwise.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    triples: list[ProbeTriple] = []
    record: list[tuple[int, str]] = []

    def flush(record: list[tuple[int, str]]) -> None:
        if not record:
            return
        first_line = record[0][0]
        if len(record) != 4:
            raise FormatError(
                f"{path}: record at line {first_line} has {len(record)} lines, "
                f"expected 4"
            )
        fields = {}
        for lineno, text in record:
            key, sep, value = text.partition(":")
            key = key.strip()
            value = value.strip()
            if not sep or key not in ("condition", "h", "v", "a") or not value:
                raise FormatError(
                    f"{path}: line {lineno}: expected 'condition:|h:|v:|a: <text>', "
                    f"got {text!r}"
                )
            if key in fields:
                raise FormatError(f"{path}: line {lineno}: duplicate field {key!r}")
            fields[key] = (lineno, value)
        for key in ("condition", "h", "v", "a"):
            if key not in fields:
                raise FormatError(
                    f"{path}: record at line {first_line} is missing field {key!r}"
                )
        condition = fields["condition"][1].lower()
        if condition not in CONDITIONS:
            raise FormatError(
                f"{path}: line {fields['condition'][0]}: condition must be "
                f"rare or common, got {condition!r}"
            )
        h = fields["h"][1].split()
        v = fields["v"][1].split()
        a = fields["a"][1].split()
        if not (len(h) == len(v) == len(a)):
            raise FormatError(
                f"{path}: record at line {first_line}: sentences differ in length"
            )
        diff = [i for i in range(len(h)) if not (h[i] == v[i] == a[i])]
        if len(diff) != 1:
            raise FormatError(
                f"{path}: record at line {first_line}: sentences must differ in "
                f"exactly one slot, found {len(diff)} differing positions"
            )
        slot = diff[0]
        triples.append(ProbeTriple(
            condition=condition,
            anchor_word=h[slot],
            variant_word=v[slot],
            sibling_word=a[slot],
            template=h,
            slot=slot,
        ))

    for lineno, text in enumerate(lines, start=1):
        if text.strip():
            record.append((lineno, text))
        else:
            flush(record)
            record = []
    flush(record)
    return triples


class UndefinedSimilarity(Exception):
    """Raised when a sentence has no in-vocabulary token to compare."""


def sentence_similarity(
    a: list[str], b: list[str], vectors: EmbeddingTable
) -> float:
    """Greedy-matching F1 over token cosine similarities.

    Precision averages, over tokens of `a`, the best cosine against any token
    of `b`; recall is the mirror image; the score is their harmonic mean.
    Out-of-vocabulary tokens are dropped; raises UndefinedSimilarity when a
    side has none left.
    """
    if not a or not b:
        raise EmptyInputError("sentences must be non-empty")
    va = [vectors.vectors[t] for t in a if t in vectors]
    vb = [vectors.vectors[t] for t in b if t in vectors]
    if not va or not vb:
        raise UndefinedSimilarity(
            "all tokens of one sentence are out of the embedding vocabulary"
        )
    ma = np.array(va)
    mb = np.array(vb)
    na = np.linalg.norm(ma, axis=1, keepdims=True)
    nb = np.linalg.norm(mb, axis=1, keepdims=True)
    na[na == 0.0] = 1.0
    nb[nb == 0.0] = 1.0
    sims = (ma / na) @ (mb / nb).T
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def run_probes(
    triples: list[ProbeTriple], scorer
) -> dict[str, ConditionTally]:
    """Score every triple and tally hits and misses per condition.

    `scorer` maps two token lists to a similarity; a hit requires the variant
    pair to score strictly above the sibling pair (ties are misses). Probes
    whose scorer raises UndefinedSimilarity are listed as skipped and leave
    the totals untouched.
    """
    if not triples:
        raise EmptyInputError("no probe triples")
    tallies = {c: ConditionTally() for c in CONDITIONS}
    for index, triple in enumerate(triples):
        tally = tallies[triple.condition]
        anchor = triple.sentence(triple.anchor_word)
        try:
            sim_variant = scorer(anchor, triple.sentence(triple.variant_word))
            sim_sibling = scorer(anchor, triple.sentence(triple.sibling_word))
        except UndefinedSimilarity:
            tally.skipped.append(index)
            continue
        if sim_variant > sim_sibling:
            tally.hits += 1
        else:
            tally.misses += 1
    if all(t.total == 0 for t in tallies.values()):
        raise EmptyInputError("every probe was skipped; nothing to tally")
    return tallies


def probe_one(triple: ProbeTriple, scorer) -> ProbeResult:
    """Score a single triple (hit means the variant pair scored higher)."""
    anchor = triple.sentence(triple.anchor_word)
    sim_variant = scorer(anchor, triple.sentence(triple.variant_word))
    sim_sibling = scorer(anchor, triple.sentence(triple.sibling_word))
    return ProbeResult(sim_variant, sim_sibling, sim_variant > sim_sibling)


def chi_square_independence(
    table: list[list[int]], yates: bool = False
) -> tuple[float, float]:
    """Pearson chi-square for a 2x2 table, two sided, 1 degree of freedom.

    Returns (statistic, p value). `yates` applies the continuity correction.
    Raises DegenerateTableError when a row or column margin is zero.
    """
    if len(table) != 2 or any(len(row) != 2 for row in table):
        raise ValueError("table must be 2x2")
    rows = [sum(row) for row in table]
    cols = [table[0][j] + table[1][j] for j in range(2)]
    total = sum(rows)
    if 0 in rows or 0 in cols:
        raise DegenerateTableError(
            f"zero marginal in contingency table {table!r}"
        )
    statistic = 0.0
    for i in range(2):
        for j in range(2):
            expected = rows[i] * cols[j] / total
            delta = abs(table[i][j] - expected)
            if yates:
                delta = max(delta - 0.5, 0.0)
            statistic += delta * delta / expected
    # Survival function of chi-square with df=1 via the error function.
    p_value = math.erfc(math.sqrt(statistic / 2.0))
    return statistic, p_value

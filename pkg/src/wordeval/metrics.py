"""Aggregation of per-event decode outcomes into the reporting metric suite.

Covers exact-match accuracy for the greedy and top-k channels, type-diversity
percentages (distinct correctly-predicted types over distinct attempted
types), word-level perplexity (exponentiated mean negative word
log-probability), frequency-stratified token and type coverage, embedding
soft-match rescoring at increasing neighbor depths, and unit-level
cross-entropy for comparison against the word-level number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Bin, BinAssignment, STRATIFIED_BINS
from .errors import ConfigurationError, EmptyInputError, NumericError
from .predictor import UnitDistribution


@dataclass
class PredictionRecord:
    """Outcome of one word prediction event, ready for aggregation."""

    target: str
    target_bin: Bin
    greedy_hit: bool
    topk_hit: bool
    greedy_word: str
    word_logprob: float


@dataclass
class CoverageCell:
    hits: int
    total: int

    @property
    def pct(self) -> float:
        return 100.0 * self.hits / self.total if self.total else 0.0


@dataclass
class StratifiedCoverage:
    """Greedy-channel coverage per frequency bin, tokens and types."""

    token: dict[Bin, CoverageCell]
    types: dict[Bin, CoverageCell]
    unbinned_token: CoverageCell
    unbinned_types: int  # distinct unbinned types with at least one hit


@dataclass
class SoftmatchPoint:
    accuracy_pct: float
    unique_types_pct: float
    hits: int
    hit_types: int


@dataclass
class EvalReport:
    """All headline numbers of one evaluation run, with denominators."""

    events: int
    k: int
    top1: float
    topk: float
    t1: float
    tk: float
    type_count: int
    ppx: float
    coverage: StratifiedCoverage
    bin_populations: dict[Bin, int]
    softmatch: dict[int, SoftmatchPoint] = field(default_factory=dict)
    aborted: int = 0
    unsegmentable: int = 0


def accuracy(records: list[PredictionRecord]) -> tuple[float, float]:
    """Percentage of events hit on the greedy and the top-k channel."""
    if not records:
        raise EmptyInputError("no prediction records")
    greedy = sum(1 for r in records if r.greedy_hit)
    topk = sum(1 for r in records if r.topk_hit)
    n = len(records)
    return 100.0 * greedy / n, 100.0 * topk / n


def type_diversity(
    records: list[PredictionRecord], test_type_count: int
) -> tuple[float, float]:
    """Percentage of distinct types hit at least once, per channel.

    The denominator is the number of distinct attempted target types and is
    reported alongside the percentages so runs stay comparable.
    """
    if not records:
        raise EmptyInputError("no prediction records")
    if test_type_count < 1:
        raise ValueError("test_type_count must be >= 1")
    greedy_types = {r.target for r in records if r.greedy_hit}
    topk_types = {r.target for r in records if r.topk_hit}
    return (
        100.0 * len(greedy_types) / test_type_count,
        100.0 * len(topk_types) / test_type_count,
    )


def word_perplexity(records: list[PredictionRecord]) -> float:
    """exp of the mean negative word log-probability over all events."""
    if not records:
        raise EmptyInputError("no prediction records")
    total = 0.0
    for r in records:
        if not math.isfinite(r.word_logprob):
            raise NumericError(
                f"non-finite word log-probability for target {r.target!r}"
            )
        total += r.word_logprob
    return math.exp(-total / len(records))


def stratified_coverage(
    records: list[PredictionRecord], bins: BinAssignment
) -> StratifiedCoverage:
    """Greedy-hit coverage per frequency bin.

    Token coverage divides bin-token hits by bin-token events; type coverage
    divides distinct hit types by the bin's eligible-type population.
    Unbinned events are reported separately, never silently dropped.
    """
    token = {b: CoverageCell(0, 0) for b in STRATIFIED_BINS}
    hit_types: dict[Bin, set[str]] = {b: set() for b in STRATIFIED_BINS}
    unbinned = CoverageCell(0, 0)
    unbinned_hit_types: set[str] = set()
    for r in records:
        expected = bins.bin_for(r.target)
        if expected is not r.target_bin:
            raise ConfigurationError(
                f"record for {r.target!r} is tagged {r.target_bin.value} but the "
                f"bin assignment says {expected.value}; records and bins were "
                f"built from different train/test pairs"
            )
        if r.target_bin is Bin.UNBINNED:
            unbinned.total += 1
            if r.greedy_hit:
                unbinned.hits += 1
                unbinned_hit_types.add(r.target)
        else:
            cell = token[r.target_bin]
            cell.total += 1
            if r.greedy_hit:
                cell.hits += 1
                hit_types[r.target_bin].add(r.target)
    types = {
        b: CoverageCell(len(hit_types[b]), bins.bin_populations.get(b, 0))
        for b in STRATIFIED_BINS
    }
    return StratifiedCoverage(token, types, unbinned, len(unbinned_hit_types))


def softmatch_rescore(
    records: list[PredictionRecord],
    index,
    depths: list[int],
    type_count: int | None = None,
) -> dict[int, SoftmatchPoint]:
    """Re-score greedy accuracy counting near misses as hits.

    At depth 1 only exact matches count (the baseline). At depth d > 1 a miss
    becomes a hit when the decoded word is among the d nearest embedding
    neighbors of the target. Targets missing from the index vocabulary fall
    back to exact matching. `index` is any object with a
    ``knn(word, k) -> list[str]`` method raising KeyError on such targets.
    """
    if not records:
        raise EmptyInputError("no prediction records")
    if sorted(depths) != list(depths):
        raise ValueError("depths must be sorted ascending")
    targets = {r.target for r in records}
    if type_count is None:
        type_count = len(targets)
    n = len(records)
    max_depth = max(depths)
    neighbor_cache: dict[str, list[str]] = {}
    oov = 0
    for word in targets:
        try:
            neighbor_cache[word] = index.knn(word, max_depth)
        except KeyError:
            neighbor_cache[word] = []
            oov += 1
    if oov == len(targets) and max_depth > 1:
        raise ConfigurationError(
            "no record target appears in the embedding index; the index was "
            "built from a different vocabulary"
        )

    def neighbors(word: str) -> list[str]:
        return neighbor_cache[word]

    result: dict[int, SoftmatchPoint] = {}
    for depth in depths:
        hits = 0
        hit_types: set[str] = set()
        for r in records:
            matched = r.greedy_hit
            if not matched and depth > 1:
                matched = r.greedy_word in neighbors(r.target)[:depth]
            if matched:
                hits += 1
                hit_types.add(r.target)
        result[depth] = SoftmatchPoint(
            accuracy_pct=100.0 * hits / n,
            unique_types_pct=100.0 * len(hit_types) / type_count,
            hits=hits,
            hit_types=len(hit_types),
        )
    return result


def unit_cross_entropy(
    unit_events: list[tuple[int, UnitDistribution]],
) -> tuple[float, float]:
    """Mean negative log-probability of target units, and its exp.

    The second value is the classic unit-level perplexity, reported for
    comparison against word-level perplexity. Raises NumericError when a
    target unit received no probability.
    """
    if not unit_events:
        raise EmptyInputError("no unit events")
    total = 0.0
    for i, (unit, dist) in enumerate(unit_events):
        lp = dist.logprob_of(unit)
        if lp is None or not math.isfinite(lp):
            raise NumericError(f"event {i}: target unit {unit} has no probability")
        total += lp
    mean_nll = -total / len(unit_events)
    return mean_nll, math.exp(mean_nll)

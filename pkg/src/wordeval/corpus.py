"""Corpus ingestion, word frequency tables, and frequency-bin assignment.

A corpus is a list of sentences, each a list of whitespace-delimited word
tokens. Frequency bins stratify word types by their training-set frequency:
high [1000, inf), mid [100, 1000), low [10, 100). Types below 10 occurrences,
and types that do not appear in both the train and test splits, are unbinned
and excluded from stratified denominators (but never dropped from overall
metrics).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyInputError, EncodingError, FormatError

HIGH_MIN = 1000
MID_MIN = 100
LOW_MIN = 10


class Bin(enum.Enum):
    HIGH = "high"
    MID = "mid"
    LOW = "low"
    UNBINNED = "unbinned"


STRATIFIED_BINS = (Bin.HIGH, Bin.MID, Bin.LOW)


@dataclass
class Corpus:
    """Ordered sentences of word tokens, exactly as read from disk."""

    sentences: list[list[str]]

    def num_sentences(self) -> int:
        return len(self.sentences)

    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def types(self) -> set[str]:
        return {tok for sent in self.sentences for tok in sent}


@dataclass
class FrequencyTable:
    """Occurrence count per word type."""

    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, word: str) -> int:
        return self.counts.get(word, 0)

    def __contains__(self, word: str) -> bool:
        return word in self.counts


@dataclass
class BinAssignment:
    """Frequency bin per word type plus eligible-type populations per bin.

    A type is eligible for stratified reporting only when it occurs in both
    the train and the test split; `bin_populations` counts eligible types
    only.
    """

    bins: dict[str, Bin] = field(default_factory=dict)
    bin_populations: dict[Bin, int] = field(default_factory=dict)

    def bin_for(self, word: str) -> Bin:
        return self.bins.get(word, Bin.UNBINNED)


def bin_of_frequency(freq: int) -> Bin:
    """Map a train frequency to its bin (closed-left, open-right intervals)."""
    if freq >= HIGH_MIN:
        return Bin.HIGH
    if freq >= MID_MIN:
        return Bin.MID
    if freq >= LOW_MIN:
        return Bin.LOW
    return Bin.UNBINNED


def ingest(path: str | Path, lowercase: bool = False) -> Corpus:
    """Read a one-sentence-per-line UTF-8 text file into a Corpus.

    Blank lines are skipped; tokens are whitespace-delimited with surrounding
    whitespace stripped. Raises EncodingError (with the line number) on bytes
    that are not valid UTF-8, and OSError if the file cannot be read.
    """
    sentences: list[list[str]] = []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise EncodingError(
                    f"{path}: line {lineno} is not valid UTF-8: {exc}"
                ) from exc
            if lowercase:
                line = line.lower()
            tokens = line.split()
            if tokens:
                sentences.append(tokens)
    return Corpus(sentences)


def count_frequencies(corpus: Corpus) -> FrequencyTable:
    """Count token occurrences per type over the whole corpus."""
    if not corpus.sentences:
        raise EmptyInputError("cannot count frequencies of an empty corpus")
    counts: Counter[str] = Counter()
    for sentence in corpus.sentences:
        counts.update(sentence)
    return FrequencyTable(dict(counts))


def assign_bins(train: FrequencyTable, test_types: set[str]) -> BinAssignment:
    """Assign frequency bins from train counts, restricted to eligible types.

    Every train type gets a bin from its frequency; `bin_populations` counts
    only types that also occur in `test_types`. Test types absent from train
    are recorded as unbinned.
    """
    bins: dict[str, Bin] = {}
    populations = {b: 0 for b in STRATIFIED_BINS}
    for word, freq in train.counts.items():
        b = bin_of_frequency(freq)
        bins[word] = b
        if b is not Bin.UNBINNED and word in test_types:
            populations[b] += 1
    for word in test_types:
        bins.setdefault(word, Bin.UNBINNED)
    return BinAssignment(bins, populations)


def write_frequency_tsv(table: FrequencyTable, path: str | Path) -> None:
    """Write (type, count) rows sorted by descending count, then by type."""
    rows = sorted(table.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8") as fh:
        for word, count in rows:
            fh.write(f"{word}\t{count}\n")


def read_frequency_tsv(path: str | Path) -> FrequencyTable:
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise FormatError(
                    f"{path}: line {lineno}: expected 2 tab-separated columns"
                )
            counts[parts[0]] = int(parts[1])
    return FrequencyTable(counts)


def write_bins_tsv(
    assignment: BinAssignment, train: FrequencyTable, test_types: set[str],
    path: str | Path,
) -> None:
    """Write (type, train count, bin) rows for every test type."""
    rows = sorted(test_types, key=lambda w: (-train[w], w))
    with open(path, "w", encoding="utf-8") as fh:
        for word in rows:
            fh.write(f"{word}\t{train[word]}\t{assignment.bin_for(word).value}\n")


def write_zipf_tsv(table: FrequencyTable, path: str | Path) -> None:
    """Write (rank, count) pairs for rank-frequency inspection."""
    counts = sorted(table.counts.values(), reverse=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rank, count in enumerate(counts, start=1):
            fh.write(f"{rank}\t{count}\n")

"""Shared test scaffolding: scripted predictors and toy data builders."""

from __future__ import annotations

import math

import numpy as np

from wordeval.predictor import Predictor, UnitDistribution
from wordeval.tokenizer import Scheme, SubwordVocab, load_vocab


class ScriptedPredictor(Predictor):
    """Serves stored probability vectors per context tuple.

    Contexts without an entry fall back to `default` (uniform when None).
    """

    def __init__(self, vocab_size, table=None, default=None):
        self.vocab_size = vocab_size
        self.table = {tuple(k): list(v) for k, v in (table or {}).items()}
        if default is None:
            default = [1.0 / vocab_size] * vocab_size
        self.default = list(default)

    def probs(self, context):
        return self.table.get(tuple(context), self.default)

    def predict(self, context_units, k):
        k = min(k, self.vocab_size)
        probs = self.probs(context_units)
        order = sorted(range(self.vocab_size), key=lambda u: (-probs[u], u))[:k]
        top = [(u, math.log(probs[u])) for u in order]
        return UnitDistribution(top, min(1.0, sum(probs[u] for u in order)))


class HashPredictor(Predictor):
    """Pseudo-random but reproducible distribution per context.

    The context tuple and seed feed a CRC, which seeds numpy's generator, so
    any context yields the same distribution in any process or run.
    """

    def __init__(self, vocab_size, seed=0, concentration=0.6):
        self.vocab_size = vocab_size
        self.seed = seed
        self.concentration = concentration

    def probs(self, context):
        import zlib

        key = f"{self.seed}:{tuple(context)}".encode()
        rng = np.random.default_rng(zlib.crc32(key))
        return list(rng.dirichlet([self.concentration] * self.vocab_size))

    def predict(self, context_units, k):
        k = min(k, self.vocab_size)
        probs = self.probs(context_units)
        order = sorted(range(self.vocab_size), key=lambda u: (-probs[u], u))[:k]
        top = [(u, math.log(probs[u])) for u in order]
        return UnitDistribution(top, min(1.0, sum(probs[u] for u in order)))


class PerfectPredictor(Predictor):
    """Predicts the gold continuation of known unit streams with certainty.

    Built from the unit sequences of the corpus being evaluated; every stored
    context prefix maps to its true next unit with probability ~1. Unknown
    contexts get an almost uniform distribution. Probability mass 1 - epsilon
    on the gold unit keeps log-probabilities finite for all units.
    """

    def __init__(self, unit_sequences, vocab_size, epsilon=1e-9):
        self.vocab_size = vocab_size
        self.epsilon = epsilon
        self._next = {}
        self._fallback_next = {}
        for seq in unit_sequences:
            for i in range(len(seq)):
                self._next.setdefault(tuple(seq[:i]), seq[i])

    def predict(self, context_units, k):
        k = min(k, self.vocab_size)
        key = tuple(context_units)
        gold = self._next.get(key)
        if gold is None:
            gold = 0
            peaked = 1.0 / self.vocab_size + 1e-6  # mildly break ties
        else:
            peaked = 1.0 - self.epsilon * (self.vocab_size - 1)
        rest = (1.0 - peaked) / (self.vocab_size - 1) if self.vocab_size > 1 else 0.0
        probs = [rest] * self.vocab_size
        probs[gold] = peaked
        order = sorted(range(self.vocab_size), key=lambda u: (-probs[u], u))[:k]
        top = [(u, math.log(probs[u])) for u in order]
        return UnitDistribution(top, min(1.0, sum(probs[u] for u in order)))


def write_wordpiece_vocab(path, units):
    with open(path, "w", encoding="utf-8") as fh:
        for unit in units:
            fh.write(unit + "\n")
    return path


def load_wordpiece(path, units) -> SubwordVocab:
    write_wordpiece_vocab(path, units)
    return load_vocab(path, Scheme.WORDPIECE)


def char_complete_units(alphabet, extra=()):
    """Unit list segmenting any word over `alphabet`: single chars both as
    word-initial and continuation units, plus whatever `extra` adds."""
    units = list(alphabet) + ["##" + c for c in alphabet]
    units.extend(extra)
    return units


TOY_ALPHABET = "abcdefghij"

# lexicon words grouped by intended train-frequency stratum
TOY_LEXICON = {
    "high": ["ba", "ce"],
    "mid": ["dif", "gah", "bej", "cad"],
    "low": ["fegi", "hiba", "jad", "ebb", "digo", "fa"],
    "rare": ["gja", "hcde", "ibb", "jiff"],
}

TOY_WEIGHTS = {
    "high": 24.0,
    "mid": 3.4,
    "low": 0.55,
    "rare": 0.045,
}


def toy_vocab_units():
    """Wordpiece unit list for the toy lexicon, a few multi-char units mixed
    in so that segmentations vary in length (stays under 60 units)."""
    extra = ["ba", "ce", "dif", "##go", "##ff", "##de", "fe", "##gi", "[UNK]"]
    return char_complete_units(TOY_ALPHABET, extra)


def sample_toy_sentences(n_sentences, seed, min_len=4, max_len=11):
    """Zipf-flavored sentences over the toy lexicon, deterministic by seed."""
    rng = np.random.default_rng(seed)
    words = []
    weights = []
    for stratum, members in TOY_LEXICON.items():
        for w in members:
            words.append(w)
            weights.append(TOY_WEIGHTS[stratum])
    probs = np.array(weights) / sum(weights)
    sentences = []
    for _ in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        picks = rng.choice(len(words), size=length, p=probs)
        sentences.append([words[i] for i in picks])
    return sentences


def write_corpus(path, sentences):
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in sentences:
            fh.write(" ".join(sentence) + "\n")
    return path


def clustered_vectors(n, dim, n_clusters, spread, seed):
    """Random vectors with cluster structure, the shape real embeddings have."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_clusters, dim))
    assignment = np.repeat(np.arange(n_clusters), math.ceil(n / n_clusters))[:n]
    points = centers[assignment] + spread * rng.standard_normal((n, dim))
    return points

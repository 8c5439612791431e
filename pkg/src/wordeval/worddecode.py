"""Whole-word decoding over a next-unit predictor.

Three operations cover one word prediction event:

* greedy search: follow the argmax unit chain until the next predicted unit
  would start a new word, then compare the decoded word to the target. An
  optional early exit abandons the chain as soon as the accumulated string
  stops being a prefix of the target; the returned hit flag is identical
  either way (property-tested), only the returned word differs on misses.
* top-k search: depth-first existence check for a unit path, each step inside
  the model's top k, whose stripped concatenation spells the target exactly
  while every intermediate concatenation is a proper prefix of it.
* word log-probability: sum of per-unit conditional log-probabilities along
  the target's canonical segmentation, independent of hit or miss.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NumericError
from .predictor import Predictor
from .tokenizer import Segmentation, SubwordVocab, is_end_of_word, segment, segment_sentence


@dataclass
class WordEvent:
    """One prediction event: a word history and the target that follows it."""

    history: tuple[str, ...]
    target: str
    target_segmentation: Segmentation
    context_units: tuple[int, ...]


@dataclass
class GreedyResult:
    hit: bool
    word: str
    units_consumed: int
    exhausted: bool  # stopped at max_units without reaching end-of-word


@dataclass
class DecodeOutcome:
    """Aggregate result of greedy, top-k, and probability for one event."""

    greedy_hit: bool
    greedy_word: str
    topk_hit: bool
    word_logprob: float
    units_consumed: int
    exhausted: bool


def make_word_event(
    vocab: SubwordVocab,
    history: list[str],
    target: str,
    context_units: list[int] | None = None,
) -> WordEvent:
    """Build an event, segmenting the target canonically.

    Raises CoverageError if the target is not segmentable. History words fall
    back to the unknown symbol when one is defined.
    """
    seg = segment(vocab, target, allow_unknown=False)
    if context_units is None:
        context_units = segment_sentence(vocab, history, allow_unknown=True)
    return WordEvent(tuple(history), target, seg, tuple(context_units))


def greedy_word_search(
    pred: Predictor,
    vocab: SubwordVocab,
    event: WordEvent,
    max_units: int = 16,
    early_exit: bool = False,
) -> GreedyResult:
    """Decode the model's single most likely next word and compare to target.

    The word is complete when the next argmax unit would begin a new word
    (or is the end-of-text symbol). Hitting `max_units` first counts as a
    miss with `exhausted` set. With `early_exit`, decoding stops as soon as
    the accumulation diverges from the target; the word returned is then the
    partial accumulation.
    """
    if max_units < 1:
        raise ValueError("max_units must be >= 1")
    context = list(event.context_units)
    acc = ""
    consumed = 0
    while True:
        unit = pred.predict(context, 1).argmax()
        if consumed > 0 and is_end_of_word(vocab, unit):
            return GreedyResult(acc == event.target, acc, consumed, False)
        if consumed == 0 and unit == vocab.end_of_text_unit:
            return GreedyResult(False, "", 0, False)
        acc += vocab.surface(unit)
        context.append(unit)
        consumed += 1
        if early_exit and not event.target.startswith(acc):
            return GreedyResult(False, acc, consumed, False)
        if consumed >= max_units:
            return GreedyResult(False, acc, consumed, True)


def topk_word_search(
    pred: Predictor,
    vocab: SubwordVocab,
    event: WordEvent,
    k: int = 10,
    max_units: int = 16,
) -> bool:
    """True iff some unit path within the per-step top k spells the target.

    Roots are tried in rank order and extended depth-first. A path is only
    extended while its concatenation is a proper prefix of the target, which
    keeps the search linear in practice. Path length is capped at max_units.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_units < 1:
        raise ValueError("max_units must be >= 1")
    target = event.target
    base = list(event.context_units)

    def explore(path: list[int], acc: str) -> bool:
        dist = pred.predict(base + path, k)
        for unit, _ in dist.top:
            grown = acc + vocab.surface(unit)
            if grown == target:
                return True
            # Descend only on strict growth into a proper prefix.
            if (len(grown) > len(acc)
                    and len(grown) < len(target)
                    and target.startswith(grown)
                    and len(path) + 1 < max_units):
                path.append(unit)
                if explore(path, grown):
                    return True
                path.pop()
        return False

    return explore([], "")


def word_logprob(
    pred: Predictor, vocab: SubwordVocab, event: WordEvent
) -> float:
    """Log-probability of the target word via its canonical segmentation."""
    context = list(event.context_units)
    total = 0.0
    for unit in event.target_segmentation.unit_ids:
        dist = pred.predict(context, pred.vocab_size)
        lp = dist.logprob_of(unit)
        if lp is None or lp == float("-inf"):
            raise NumericError(
                f"predictor assigned no probability to unit {unit} of "
                f"target {event.target!r}"
            )
        total += lp
        context.append(unit)
    return total


def decode_word_event(
    pred: Predictor,
    vocab: SubwordVocab,
    event: WordEvent,
    k: int = 10,
    max_units: int = 16,
) -> DecodeOutcome:
    """Run greedy, top-k, and word probability for one event."""
    greedy = greedy_word_search(pred, vocab, event, max_units)
    topk = topk_word_search(pred, vocab, event, k, max_units)
    logprob = word_logprob(pred, vocab, event)
    return DecodeOutcome(
        greedy_hit=greedy.hit,
        greedy_word=greedy.word,
        topk_hit=topk,
        word_logprob=logprob,
        units_consumed=greedy.units_consumed,
        exhausted=greedy.exhausted,
    )

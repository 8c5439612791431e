"""Subword vocabularies and canonical word segmentation.

Two schemes are supported. WordPiece vocabularies are a single file with one
unit per line; continuation units carry a leading "##". BPE vocabularies are
a directory holding a unit list (``vocab.txt``, one unit per line, optionally
``unit<TAB>id``) and a merge table (``merges.txt``, whose first line declares
the word-initial marker as ``word_initial=<char>`` followed by one
space-separated symbol pair per line, rank given by line order).

Segmentation is canonical and deterministic: WordPiece uses greedy
longest-match-first, BPE applies merges in rank order. Stripping scheme
markers from the units and concatenating always reproduces the input word.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import CoverageError, FormatError


class Scheme(enum.Enum):
    BPE = "bpe"
    WORDPIECE = "wordpiece"


WORDPIECE_CONTINUATION = "##"


@dataclass
class SubwordVocab:
    """A loaded subword vocabulary with dense unit ids.

    `unknown_unit` is the id of the unknown symbol when the unit list defines
    one ("[UNK]" or "<unk>"), else None. `end_of_text_unit` optionally names a
    unit that terminates decoding (treated as starting a new word).
    """

    scheme: Scheme
    units: dict[str, int]
    id_to_unit: list[str]
    merges: list[tuple[str, str]]
    word_initial_marker: str = ""
    continuation_marker: str = ""
    unknown_unit: int | None = None
    end_of_text_unit: int | None = None

    def __len__(self) -> int:
        return len(self.id_to_unit)

    def unit_string(self, unit_id: int) -> str:
        if not 0 <= unit_id < len(self.id_to_unit):
            raise ValueError(f"unit id {unit_id} out of range [0, {len(self)})")
        return self.id_to_unit[unit_id]

    def surface(self, unit_id: int) -> str:
        """Unit string with its scheme marker stripped."""
        unit = self.unit_string(unit_id)
        if self.scheme is Scheme.BPE:
            if unit.startswith(self.word_initial_marker):
                return unit[len(self.word_initial_marker):]
            return unit
        if unit.startswith(self.continuation_marker):
            return unit[len(self.continuation_marker):]
        return unit

    def sha256(self) -> str:
        """Hash of the unit list in id order; used in remote handshakes."""
        payload = "\n".join(self.id_to_unit) + "\n"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Segmentation:
    """Canonical unit decomposition of one word."""

    word: str
    unit_ids: tuple[int, ...]
    boundary_flags: tuple[bool, ...]  # True for the word-initial unit
    is_unknown: bool = False


UNKNOWN_UNIT_STRINGS = ("[UNK]", "<unk>", "<UNK>")


def _check_unit(unit: str, lineno: int, path, seen: dict[str, int]) -> None:
    if not unit:
        raise FormatError(f"{path}: line {lineno}: empty unit string")
    if unit in seen:
        raise FormatError(
            f"{path}: line {lineno}: duplicate unit {unit!r} "
            f"(first at line {seen[unit] + 1})"
        )


def load_vocab(
    path: str | Path,
    scheme: Scheme,
    end_of_text: str | None = None,
) -> SubwordVocab:
    """Load a subword vocabulary of the given scheme.

    For WORDPIECE, `path` is the unit-list file. For BPE, `path` is a
    directory containing ``vocab.txt`` and ``merges.txt``. Raises FormatError
    on duplicate units, malformed merge lines, or units that strip to an
    empty surface, and OSError when files are missing.
    """
    if scheme is Scheme.WORDPIECE:
        vocab = _load_wordpiece(Path(path))
    else:
        vocab = _load_bpe(Path(path))
    for name in UNKNOWN_UNIT_STRINGS:
        if name in vocab.units:
            vocab.unknown_unit = vocab.units[name]
            break
    if end_of_text is not None:
        if end_of_text not in vocab.units:
            raise FormatError(
                f"declared end-of-text unit {end_of_text!r} not in vocabulary"
            )
        vocab.end_of_text_unit = vocab.units[end_of_text]
    _reject_empty_surfaces(vocab)
    return vocab


def _load_wordpiece(path: Path) -> SubwordVocab:
    units: dict[str, int] = {}
    id_to_unit: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            unit = line.rstrip("\n")
            if not unit:
                continue
            _check_unit(unit, lineno, path, units)
            units[unit] = len(id_to_unit)
            id_to_unit.append(unit)
    return SubwordVocab(
        scheme=Scheme.WORDPIECE,
        units=units,
        id_to_unit=id_to_unit,
        merges=[],
        continuation_marker=WORDPIECE_CONTINUATION,
    )


def _load_bpe(path: Path) -> SubwordVocab:
    vocab_file = path / "vocab.txt"
    merges_file = path / "merges.txt"
    units: dict[str, int] = {}
    explicit: list[tuple[str, int]] = []
    id_to_unit: list[str] = []
    with open(vocab_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.rstrip("\n")
            if not entry:
                continue
            if "\t" in entry:
                unit, _, id_text = entry.partition("\t")
                _check_unit(unit, lineno, vocab_file, units)
                try:
                    unit_id = int(id_text)
                except ValueError:
                    raise FormatError(
                        f"{vocab_file}: line {lineno}: non-integer id {id_text!r}"
                    ) from None
                units[unit] = unit_id
                explicit.append((unit, unit_id))
            else:
                _check_unit(entry, lineno, vocab_file, units)
                units[entry] = len(units)
    if explicit:
        if len(explicit) != len(units):
            raise FormatError(f"{vocab_file}: mixed implicit and explicit ids")
        if sorted(units.values()) != list(range(len(units))):
            raise FormatError(f"{vocab_file}: explicit ids are not dense in [0, n)")
    id_to_unit = [""] * len(units)
    for unit, unit_id in units.items():
        id_to_unit[unit_id] = unit

    merges: list[tuple[str, str]] = []
    marker: str | None = None
    with open(merges_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.rstrip("\n")
            if not entry:
                continue
            if lineno == 1:
                if not entry.startswith("word_initial="):
                    raise FormatError(
                        f"{merges_file}: line 1 must declare 'word_initial=<char>'"
                    )
                marker = entry[len("word_initial="):]
                if not marker:
                    raise FormatError(
                        f"{merges_file}: word-initial marker must be non-empty"
                    )
                continue
            parts = entry.split(" ")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise FormatError(
                    f"{merges_file}: line {lineno}: expected two space-separated "
                    f"symbols, got {entry!r}"
                )
            merges.append((parts[0], parts[1]))
    if marker is None:
        raise FormatError(f"{merges_file}: missing word_initial header")
    return SubwordVocab(
        scheme=Scheme.BPE,
        units=units,
        id_to_unit=id_to_unit,
        merges=merges,
        word_initial_marker=marker,
    )


def _reject_empty_surfaces(vocab: SubwordVocab) -> None:
    # Empty-surface units would let decoding loop without consuming target
    # characters; only the end-of-text symbol may strip to nothing.
    for unit_id in range(len(vocab)):
        if unit_id == vocab.end_of_text_unit or unit_id == vocab.unknown_unit:
            continue
        if not vocab.surface(unit_id):
            raise FormatError(
                f"unit {vocab.unit_string(unit_id)!r} has an empty surface form"
            )


def is_end_of_word(vocab: SubwordVocab, unit_id: int) -> bool:
    """True iff this unit begins a new word under the scheme's convention."""
    unit = vocab.unit_string(unit_id)  # validates the id
    if unit_id == vocab.end_of_text_unit:
        return True
    if vocab.scheme is Scheme.BPE:
        return unit.startswith(vocab.word_initial_marker)
    return not unit.startswith(vocab.continuation_marker)


def segment(
    vocab: SubwordVocab, word: str, allow_unknown: bool = False
) -> Segmentation:
    """Produce the canonical segmentation of `word`.

    Raises CoverageError when the word cannot be covered and either no
    unknown symbol is defined or `allow_unknown` is False; with
    `allow_unknown` and a defined unknown symbol, returns a single-unit
    segmentation flagged `is_unknown`.
    """
    if not word:
        raise ValueError("cannot segment an empty word")
    if vocab.scheme is Scheme.WORDPIECE:
        ids = _segment_wordpiece(vocab, word)
    else:
        ids = _segment_bpe(vocab, word)
    if ids is None:
        if allow_unknown and vocab.unknown_unit is not None:
            return Segmentation(word, (vocab.unknown_unit,), (True,), True)
        raise CoverageError(f"word {word!r} is not segmentable with this vocabulary")
    flags = tuple(i == 0 for i in range(len(ids)))
    return Segmentation(word, tuple(ids), flags)


def _segment_wordpiece(vocab: SubwordVocab, word: str) -> list[int] | None:
    marker = vocab.continuation_marker
    ids: list[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = marker + piece
            unit_id = vocab.units.get(piece)
            if unit_id is not None:
                found = unit_id
                break
            end -= 1
        if found is None:
            return None
        ids.append(found)
        start = end
    return ids


def _segment_bpe(vocab: SubwordVocab, word: str) -> list[int] | None:
    symbols = [vocab.word_initial_marker + word[0]] + list(word[1:])
    rank = {pair: i for i, pair in enumerate(vocab.merges)}
    while len(symbols) > 1:
        best_rank = None
        best_pos = -1
        for i in range(len(symbols) - 1):
            r = rank.get((symbols[i], symbols[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
                best_pos = i
        if best_rank is None:
            break
        symbols[best_pos:best_pos + 2] = [
            symbols[best_pos] + symbols[best_pos + 1]
        ]
    ids = []
    for sym in symbols:
        unit_id = vocab.units.get(sym)
        if unit_id is None:
            return None
        ids.append(unit_id)
    return ids


def segment_sentence(
    vocab: SubwordVocab, words: list[str], allow_unknown: bool = True
) -> list[int]:
    """Concatenate canonical segmentations of a word sequence into unit ids."""
    units: list[int] = []
    for word in words:
        units.extend(segment(vocab, word, allow_unknown=allow_unknown).unit_ids)
    return units

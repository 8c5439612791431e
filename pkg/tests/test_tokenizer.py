import tempfile
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import char_complete_units, load_wordpiece
from oracles import ReferenceBpe
from wordeval.errors import CoverageError, FormatError
from wordeval.tokenizer import (
    Scheme,
    is_end_of_word,
    load_vocab,
    segment,
    segment_sentence,
)


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


_CACHED_VOCAB = None


def _char_complete_vocab():
    global _CACHED_VOCAB
    if _CACHED_VOCAB is None:
        tmp = Path(tempfile.mkdtemp())
        _CACHED_VOCAB = load_wordpiece(
            tmp / "v.txt", char_complete_units("abcd", extra=["ab", "##cd"])
        )
    return _CACHED_VOCAB


class TestLoadWordpiece:
    def test_minimal(self, tmp_path):
        vocab = load_vocab(write_lines(tmp_path / "v.txt", ["the", "##s"]),
                           Scheme.WORDPIECE)
        assert len(vocab) == 2
        assert vocab.units == {"the": 0, "##s": 1}
        assert not is_end_of_word(vocab, vocab.units["##s"])
        assert is_end_of_word(vocab, vocab.units["the"])

    def test_duplicate_unit(self, tmp_path):
        path = write_lines(tmp_path / "v.txt", ["a", "b", "a"])
        with pytest.raises(FormatError, match="duplicate"):
            load_vocab(path, Scheme.WORDPIECE)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_vocab(tmp_path / "nope.txt", Scheme.WORDPIECE)

    def test_roundtrip_ids(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a", "##b", "ab"])
        for unit, unit_id in vocab.units.items():
            assert vocab.unit_string(unit_id) == unit

    def test_unknown_symbol_detected(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a", "[UNK]"])
        assert vocab.unknown_unit == 1

    def test_bare_continuation_marker_rejected(self, tmp_path):
        path = write_lines(tmp_path / "v.txt", ["a", "##"])
        with pytest.raises(FormatError, match="empty surface"):
            load_vocab(path, Scheme.WORDPIECE)


def write_bpe(tmp_path, units, merges, marker="%"):
    bpe_dir = tmp_path / "bpe"
    bpe_dir.mkdir(exist_ok=True)
    write_lines(bpe_dir / "vocab.txt", units)
    write_lines(bpe_dir / "merges.txt",
                [f"word_initial={marker}"] + [f"{a} {b}" for a, b in merges])
    return bpe_dir


class TestLoadBpe:
    def test_minimal(self, tmp_path):
        bpe_dir = write_bpe(tmp_path, ["%a", "b", "%ab"], [("%a", "b")])
        vocab = load_vocab(bpe_dir, Scheme.BPE)
        assert vocab.word_initial_marker == "%"
        assert vocab.merges == [("%a", "b")]
        assert is_end_of_word(vocab, vocab.units["%ab"])
        assert not is_end_of_word(vocab, vocab.units["b"])

    def test_malformed_merge_line(self, tmp_path):
        bpe_dir = tmp_path / "bpe"
        bpe_dir.mkdir()
        write_lines(bpe_dir / "vocab.txt", ["%a", "b"])
        write_lines(bpe_dir / "merges.txt", ["word_initial=%", "%a b extra"])
        with pytest.raises(FormatError, match="line 2"):
            load_vocab(bpe_dir, Scheme.BPE)

    def test_missing_header(self, tmp_path):
        bpe_dir = tmp_path / "bpe"
        bpe_dir.mkdir()
        write_lines(bpe_dir / "vocab.txt", ["%a", "b"])
        write_lines(bpe_dir / "merges.txt", ["%a b"])
        with pytest.raises(FormatError, match="word_initial"):
            load_vocab(bpe_dir, Scheme.BPE)

    def test_explicit_ids(self, tmp_path):
        bpe_dir = tmp_path / "bpe"
        bpe_dir.mkdir()
        write_lines(bpe_dir / "vocab.txt", ["%a\t1", "b\t0"])
        write_lines(bpe_dir / "merges.txt", ["word_initial=%"])
        vocab = load_vocab(bpe_dir, Scheme.BPE)
        assert vocab.units == {"%a": 1, "b": 0}
        assert vocab.id_to_unit == ["b", "%a"]

    def test_non_dense_ids_rejected(self, tmp_path):
        bpe_dir = tmp_path / "bpe"
        bpe_dir.mkdir()
        write_lines(bpe_dir / "vocab.txt", ["%a\t0", "b\t2"])
        write_lines(bpe_dir / "merges.txt", ["word_initial=%"])
        with pytest.raises(FormatError, match="dense"):
            load_vocab(bpe_dir, Scheme.BPE)

    def test_matches_reference_learner(self, tmp_path):
        # Train a reference BPE on a 100-word toy corpus, export its units
        # and merges in our file format, and require identical segmentations.
        words = []
        stems = ["car", "card", "care", "cart", "star", "start", "spar",
                 "spark", "art", "dart", "tar", "tart", "rat", "rate"]
        for i, stem in enumerate(stems * 8):
            words.append(stem if i % 3 else stem + "s")
        words = words[:100]
        ref = ReferenceBpe(marker="%").train(words, num_merges=30)
        units = ref.unit_inventory(words)
        bpe_dir = write_bpe(tmp_path, units, ref.merges)
        vocab = load_vocab(bpe_dir, Scheme.BPE)
        for word in sorted(set(words)):
            seg = segment(vocab, word)
            got = [vocab.unit_string(u) for u in seg.unit_ids]
            assert got == ref.encode(word), word


class TestSegment:
    def test_whole_unit_fast_path(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt",
                               char_complete_units("the", extra=["the"]))
        seg = segment(vocab, "the")
        assert seg.unit_ids == (vocab.units["the"],)
        assert seg.boundary_flags == (True,)

    def test_long_rare_word_needs_multiple_units(self, tmp_path):
        vocab = load_wordpiece(
            tmp_path / "v.txt",
            char_complete_units("velocirapt", extra=["velo", "##rap"]),
        )
        seg = segment(vocab, "velociraptor")
        assert len(seg.unit_ids) >= 2
        joined = "".join(vocab.surface(u) for u in seg.unit_ids)
        assert joined == "velociraptor"

    def test_greedy_longest_match(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt",
                               ["a", "ab", "abc", "##d", "##cd"])
        seg = segment(vocab, "abcd")
        assert [vocab.unit_string(u) for u in seg.unit_ids] == ["abc", "##d"]

    def test_unsegmentable_raises(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a", "##a"])
        with pytest.raises(CoverageError, match="axe"):
            segment(vocab, "axe")

    def test_unknown_fallback(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a", "##a", "[UNK]"])
        seg = segment(vocab, "axe", allow_unknown=True)
        assert seg.is_unknown
        assert seg.unit_ids == (vocab.unknown_unit,)

    def test_empty_word_rejected(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a"])
        with pytest.raises(ValueError):
            segment(vocab, "")

    def test_exactly_one_word_initial_unit(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", char_complete_units("abc"))
        for word in ("a", "ab", "abc", "cab", "bacab"):
            seg = segment(vocab, word)
            assert sum(seg.boundary_flags) == 1
            assert seg.boundary_flags[0]

    @given(st.text(alphabet="abcd", min_size=1, max_size=12))
    def test_concat_identity_over_char_complete_vocab(self, word):
        vocab = _char_complete_vocab()
        seg = segment(vocab, word)
        assert "".join(vocab.surface(u) for u in seg.unit_ids) == word
        assert segment(vocab, word).unit_ids == seg.unit_ids  # deterministic

    def test_bpe_merge_order_respected(self, tmp_path):
        # merges: (%a b) before (b c); "abc" -> %ab c, not %a bc
        bpe_dir = write_bpe(
            tmp_path,
            ["%a", "b", "c", "%ab", "bc", "%abc"],
            [("%a", "b"), ("b", "c"), ("%ab", "c")],
        )
        vocab = load_vocab(bpe_dir, Scheme.BPE)
        seg = segment(vocab, "abc")
        assert [vocab.unit_string(u) for u in seg.unit_ids] == ["%abc"]

    def test_bpe_concat_identity(self, tmp_path):
        bpe_dir = write_bpe(
            tmp_path,
            ["%a", "%b", "%c", "a", "b", "c", "%ab", "ca"],
            [("%a", "b"), ("c", "a")],
        )
        vocab = load_vocab(bpe_dir, Scheme.BPE)
        for word in ("abca", "cab", "abcabc", "a"):
            seg = segment(vocab, word)
            assert "".join(vocab.surface(u) for u in seg.unit_ids) == word
            assert seg.boundary_flags[0]
            assert not any(seg.boundary_flags[1:])


class TestEndOfWord:
    def test_wordpiece_convention(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["dog", "##ing"])
        assert is_end_of_word(vocab, vocab.units["dog"])
        assert not is_end_of_word(vocab, vocab.units["##ing"])

    def test_unknown_id_rejected(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", ["a"])
        with pytest.raises(ValueError):
            is_end_of_word(vocab, 99)

    def test_end_of_text_unit(self, tmp_path):
        path = write_lines(tmp_path / "v.txt", ["a", "##a", "<eot>"])
        vocab = load_vocab(path, Scheme.WORDPIECE, end_of_text="<eot>")
        assert is_end_of_word(vocab, vocab.end_of_text_unit)


class TestSegmentSentence:
    def test_concatenates_units(self, tmp_path):
        vocab = load_wordpiece(tmp_path / "v.txt", char_complete_units("ab"))
        units = segment_sentence(vocab, ["ab", "ba"])
        expected = (segment(vocab, "ab").unit_ids + segment(vocab, "ba").unit_ids)
        assert tuple(units) == expected

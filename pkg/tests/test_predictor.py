import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import NgramOracle, ranked_units
from wordeval.errors import EmptyInputError
from wordeval.predictor import (
    CachingPredictor,
    UniformPredictor,
    UnitDistribution,
    train_ngram,
)


class TestUniform:
    def test_every_unit_equal(self):
        model = UniformPredictor(8)
        dist = model.predict([3, 1], 8)
        for _, lp in dist.top:
            assert math.exp(lp) == pytest.approx(1 / 8)
        assert dist.total_mass_accounted == pytest.approx(1.0)

    def test_tiebreak_ascending_id(self):
        dist = UniformPredictor(5).predict([], 3)
        assert [u for u, _ in dist.top] == [0, 1, 2]


class TestTrainNgram:
    def test_unigram_ratio(self):
        model = train_ngram([[0, 0, 1]], order=1, discount=0.5, vocab_size=2)
        probs = model.full_distribution([])
        # discounting preserves the 2:1 ranking
        assert probs[0] > probs[1]
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_empty_corpus(self):
        with pytest.raises(EmptyInputError):
            train_ngram([], order=2, discount=0.5)
        with pytest.raises(EmptyInputError):
            train_ngram([[]], order=2, discount=0.5)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            train_ngram([[0]], order=0, discount=0.5)
        with pytest.raises(ValueError):
            train_ngram([[0]], order=1, discount=1.0)

    def test_bigram_ranking_from_counts(self):
        # corpus "a b a b": after context a, b always follows
        model = train_ngram([[0, 1, 0, 1]], order=2, discount=0.75, vocab_size=2)
        probs = model.full_distribution([0])
        oracle = NgramOracle([[0, 1, 0, 1]], 2, 0.75, 2)
        assert probs[1] > probs[0]
        assert probs[1] == pytest.approx(oracle.prob([0], 1), abs=1e-12)
        assert probs[0] == pytest.approx(oracle.prob([0], 0), abs=1e-12)

    def test_every_unit_nonzero_everywhere(self):
        model = train_ngram([[0, 1, 2, 1]], order=3, discount=0.9, vocab_size=5)
        for ctx in ([], [0], [4], [3, 4], [0, 1], [2, 2, 2, 2]):
            probs = model.full_distribution(ctx)
            assert (probs > 0).all()
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_extreme_discount_normalization(self):
        rng = np.random.default_rng(0)
        seqs = [list(rng.integers(0, 12, size=20)) for _ in range(10)]
        model = train_ngram(seqs, order=3, discount=0.999, vocab_size=12)
        for _ in range(50):
            ctx = list(rng.integers(0, 12, size=int(rng.integers(0, 5))))
            assert model.full_distribution(ctx).sum() == pytest.approx(1.0, abs=1e-9)


class TestPredict:
    def test_trigram_matches_count_oracle(self):
        seqs = [[0, 1, 2, 0, 1], [1, 2, 2, 0], [2, 0, 1, 1]]
        model = train_ngram(seqs, order=3, discount=0.75, vocab_size=3)
        oracle = NgramOracle(seqs, 3, 0.75, 3)
        for ctx in ([], [0], [1], [2], [0, 1], [1, 2], [2, 2], [0, 0]):
            got = model.full_distribution(ctx)
            want = oracle.distribution(ctx)
            assert got == pytest.approx(want, abs=1e-12)

    def test_k1_is_argmax_of_full(self):
        seqs = [[0, 1, 2, 0, 1, 0]]
        model = train_ngram(seqs, order=2, discount=0.75, vocab_size=3)
        for ctx in ([], [0], [1], [2]):
            full = model.full_distribution(ctx)
            top1 = model.predict(ctx, 1)
            assert top1.top[0][0] == ranked_units(list(full))[0]

    def test_prefix_property(self):
        seqs = [[0, 1, 2, 3, 0, 2, 1]]
        model = train_ngram(seqs, order=2, discount=0.75, vocab_size=4)
        for ctx in ([], [1], [3]):
            tops = {k: [u for u, _ in model.predict(ctx, k).top] for k in (1, 2, 4)}
            assert tops[2][:1] == tops[1]
            assert tops[4][:2] == tops[2]

    def test_clamp_with_warning(self):
        model = train_ngram([[0, 1]], order=1, discount=0.5, vocab_size=2)
        with pytest.warns(UserWarning, match="clamping"):
            dist = model.predict([], 10)
        assert len(dist.top) == 2
        assert dist.total_mass_accounted == pytest.approx(1.0)

    def test_k_below_one_rejected(self):
        model = train_ngram([[0, 1]], order=1, discount=0.5)
        with pytest.raises(ValueError):
            model.predict([], 0)

    def test_deterministic_streams(self):
        seqs = [[0, 1, 2, 0], [2, 1, 0, 2]]
        contexts = ([], [0], [1, 2], [2, 0, 1])

        def stream():
            model = train_ngram(seqs, order=3, discount=0.75, vocab_size=3)
            return json.dumps([
                model.predict(list(ctx), 3).top for ctx in contexts
            ])

        assert stream() == stream()

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.lists(st.integers(0, 4), min_size=1, max_size=30),
            min_size=1, max_size=8,
        ),
        st.integers(1, 3),
    )
    def test_matches_oracle_on_random_small_corpora(self, seqs, order):
        total = sum(len(s) for s in seqs)
        if total > 200:
            seqs = [s[:25] for s in seqs]
        model = train_ngram(seqs, order=order, discount=0.75, vocab_size=5)
        oracle = NgramOracle(seqs, order, 0.75, 5)
        rng = np.random.default_rng(0)
        contexts = [[]]
        for length in range(1, order):
            for _ in range(3):
                contexts.append(list(rng.integers(0, 5, size=length)))
        for ctx in contexts:
            got = model.full_distribution(ctx)
            want = oracle.distribution(ctx)
            assert got == pytest.approx(want, abs=1e-10)


class TestCachingPredictor:
    def test_same_results_and_single_inner_call(self):
        calls = []

        class Spy(UniformPredictor):
            def predict(self, context_units, k):
                calls.append((tuple(context_units), k))
                return super().predict(context_units, k)

        cached = CachingPredictor(Spy(4))
        a = cached.predict([1, 2], 2)
        b = cached.predict([1, 2], 2)
        assert a.top == b.top
        assert len(calls) == 1

    def test_eviction_bound(self):
        cached = CachingPredictor(UniformPredictor(4), maxsize=2)
        for i in range(5):
            cached.predict([i], 1)
        assert len(cached._cache) == 2


class TestUnitDistribution:
    def test_logprob_lookup(self):
        dist = UnitDistribution([(3, -0.5), (1, -2.0)], 0.9)
        assert dist.logprob_of(1) == -2.0
        assert dist.logprob_of(7) is None
        assert dist.argmax() == 3

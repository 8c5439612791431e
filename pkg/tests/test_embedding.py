import numpy as np
import pytest

from helpers import clustered_vectors
from oracles import knn_scan
from wordeval.corpus import Corpus
from wordeval.embedding import (
    EmbeddingTable,
    ExactIndex,
    RandomProjectionForest,
    build_index,
    cosine,
    load_embeddings,
    save_embeddings,
    train_sgns,
)
from wordeval.errors import DegenerateInputError, EmptyInputError, FormatError


def two_topic_corpus(seed=0, n_sentences=260):
    """Interleaved sentences drawn from two disjoint topic vocabularies."""
    rng = np.random.default_rng(seed)
    topics = (
        ["ocean", "wave", "tide", "shore", "fish", "boat"],
        ["ember", "flame", "smoke", "torch", "ash", "coal"],
    )
    sentences = []
    for i in range(n_sentences):
        words = topics[i % 2]
        sentences.append([words[j] for j in rng.integers(0, len(words), 7)])
    return Corpus(sentences), topics


class TestTrainSgns:
    def test_deterministic_given_seed(self):
        corpus, _ = two_topic_corpus()
        kwargs = dict(dim=12, window=3, negatives=3, epochs=1, min_count=5,
                      seed=42)
        first = train_sgns(corpus, **kwargs)
        second = train_sgns(corpus, **kwargs)
        assert first.vectors.keys() == second.vectors.keys()
        for word in first.vectors:
            assert (first.vectors[word] == second.vectors[word]).all()

    def test_topic_clusters_separate(self):
        corpus, topics = two_topic_corpus()
        table = train_sgns(corpus, dim=16, window=3, negatives=4, epochs=4,
                           min_count=5, seed=7)
        within, across = [], []
        for i, a in enumerate(topics[0]):
            for b in topics[0][i + 1:]:
                within.append(cosine(table.vectors[a], table.vectors[b]))
            for b in topics[1]:
                across.append(cosine(table.vectors[a], table.vectors[b]))
        assert np.mean(within) > np.mean(across)

    def test_min_count_filters_vocabulary(self):
        corpus, _ = two_topic_corpus()
        corpus.sentences[0][0] = "hapax"
        table = train_sgns(corpus, dim=8, window=2, negatives=2, epochs=1,
                           min_count=5, seed=0)
        assert "hapax" not in table
        assert all(len(v) == 8 for v in table.vectors.values())
        assert not any(np.isnan(v).any() for v in table.vectors.values())

    def test_empty_corpus(self):
        with pytest.raises(EmptyInputError):
            train_sgns(Corpus([]), dim=4)

    def test_corpus_smaller_than_window(self):
        with pytest.raises(DegenerateInputError):
            train_sgns(Corpus([["a", "b"]]), dim=4, window=5, min_count=1)

    def test_dim_validation(self):
        with pytest.raises(ValueError):
            train_sgns(Corpus([["a"] * 30]), dim=1, min_count=1)


class TestEmbeddingIo:
    def test_roundtrip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        table = EmbeddingTable(
            5, {f"w{i}": rng.standard_normal(5) for i in range(20)}
        )
        path = tmp_path / "emb.txt"
        save_embeddings(table, path)
        loaded = load_embeddings(path)
        assert loaded.dim == 5
        assert loaded.vectors.keys() == table.vectors.keys()
        for word in table.vectors:
            assert (loaded.vectors[word] == table.vectors[word]).all()

    def test_component_count_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\na 0.1 0.2 0.3\nb 0.1 0.2 0.3 0.4\n")
        with pytest.raises(FormatError, match="line 3"):
            load_embeddings(path)

    def test_header_count_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("3 2\na 0.1 0.2\nb 0.3 0.4\n")
        with pytest.raises(FormatError, match="declares 3"):
            load_embeddings(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("two three four\n")
        with pytest.raises(FormatError):
            load_embeddings(path)

    def test_externally_written_file_accepted(self, tmp_path):
        # hand-rolled writer, independent of save_embeddings
        rows = {"alpha": [1.0, 0.0], "beta": [0.25, -0.75]}
        lines = ["2 2"] + [
            f"{w} {' '.join(str(x) for x in v)}" for w, v in rows.items()
        ]
        path = tmp_path / "ext.txt"
        path.write_text("\n".join(lines) + "\n")
        table = load_embeddings(path)
        assert table.vectors["beta"][1] == -0.75


def random_table(n, dim, seed):
    rng = np.random.default_rng(seed)
    return EmbeddingTable(
        dim, {f"w{i:04d}": rng.standard_normal(dim) for i in range(n)}
    )


class TestExactIndex:
    def test_identical_direction_wins(self):
        table = EmbeddingTable(2, {
            "b": np.array([1.0, 0.0]),
            "c": np.array([1.0, 0.0]),
            "d": np.array([0.0, 1.0]),
        })
        assert ExactIndex(table).knn("b", 1) == ["c"]

    def test_excludes_query_word(self):
        table = random_table(50, 8, 1)
        index = ExactIndex(table)
        for word in ("w0000", "w0042"):
            assert word not in index.knn(word, 49)

    def test_prefix_property(self):
        table = random_table(100, 8, 2)
        index = ExactIndex(table)
        for word in ("w0003", "w0077"):
            short = index.knn(word, 5)
            long = index.knn(word, 20)
            assert long[:5] == short

    def test_oov_raises_keyerror(self):
        index = ExactIndex(random_table(10, 4, 3))
        with pytest.raises(KeyError):
            index.knn("missing", 3)

    def test_matches_brute_force_scan(self):
        table = random_table(200, 12, 4)
        index = ExactIndex(table)
        plain = {w: list(map(float, v)) for w, v in table.vectors.items()}
        for word in sorted(table.vectors)[:25]:
            assert index.knn(word, 10) == knn_scan(plain, word, 10)

    def test_similarities_non_increasing(self):
        table = random_table(300, 10, 5)
        index = ExactIndex(table)
        q = table.vectors["w0005"]
        sims = [cosine(q, table.vectors[w]) for w in index.knn("w0005", 30)]
        assert all(a >= b - 1e-12 for a, b in zip(sims, sims[1:]))

    def test_lexicographic_tiebreak(self):
        table = EmbeddingTable(2, {
            "q": np.array([1.0, 0.0]),
            "zz": np.array([2.0, 0.0]),
            "aa": np.array([3.0, 0.0]),
            "mm": np.array([0.5, 0.0]),
        })
        # all cosines equal 1; ties resolve by ascending word
        assert ExactIndex(table).knn("q", 3) == ["aa", "mm", "zz"]


class TestRandomProjectionForest:
    def table(self, n=1000, dim=20, seed=6):
        points = clustered_vectors(n, dim, n_clusters=40, spread=0.3, seed=seed)
        return EmbeddingTable(dim, {f"w{i:04d}": points[i] for i in range(n)})

    def test_recall_against_exact_on_1k_vectors(self):
        table = self.table()
        exact = ExactIndex(table)
        forest = RandomProjectionForest(table, num_trees=12, seed=0,
                                        search_k=250)
        rng = np.random.default_rng(9)
        words = [f"w{i:04d}" for i in rng.integers(0, 1000, 150)]
        overlap = 0
        for word in words:
            truth = set(exact.knn(word, 10))
            got = set(forest.knn(word, 10))
            overlap += len(truth & got)
        assert overlap / (10 * len(words)) >= 0.95

    def test_excludes_query_and_returns_k(self):
        table = self.table(300)
        forest = RandomProjectionForest(table, num_trees=8, seed=1,
                                        search_k=200)
        got = forest.knn("w0000", 10)
        assert len(got) == 10
        assert "w0000" not in got
        assert len(set(got)) == 10

    def test_deterministic(self):
        table = self.table(400)
        a = RandomProjectionForest(table, num_trees=6, seed=3, search_k=100)
        b = RandomProjectionForest(table, num_trees=6, seed=3, search_k=100)
        for word in ("w0001", "w0200", "w0399"):
            assert a.knn(word, 8) == b.knn(word, 8)

    def test_oov_raises_keyerror(self):
        forest = RandomProjectionForest(self.table(100), num_trees=4, seed=0)
        with pytest.raises(KeyError):
            forest.knn("nope", 5)

    def test_tiny_table_single_leaf(self):
        table = random_table(8, 4, 7)
        forest = RandomProjectionForest(table, num_trees=2, seed=0)
        exact = ExactIndex(table)
        for word in table.vectors:
            assert forest.knn(word, 3) == exact.knn(word, 3)


class TestBuildIndex:
    def test_backends(self):
        table = random_table(50, 6, 8)
        assert isinstance(build_index(table, "exact"), ExactIndex)
        assert isinstance(build_index(table, "forest", num_trees=2),
                          RandomProjectionForest)
        with pytest.raises(ValueError):
            build_index(table, "faiss")

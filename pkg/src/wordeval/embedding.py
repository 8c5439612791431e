"""Skip-gram word embeddings and cosine nearest-neighbor retrieval.

Training is skip-gram with negative sampling over a word corpus, single
threaded and fully determined by its seed. Retrieval offers two backends
behind the same ``knn(word, k)`` call: an exact brute-force scan (stable
argsort, so ties fall back to ascending lexicographic word order) and a
random-projection forest with annoy-style priority-queue traversal whose
query path is compiled with numba. The forest trades a configurable amount
of recall for an order-of-magnitude lower query cost on clustered vectors.

Text format: first line ``<count> <dim>``, then one ``<word> <v1> ... <vd>``
line per word, space separated.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .corpus import Corpus
from .errors import DegenerateInputError, EmptyInputError, FormatError


@dataclass
class EmbeddingTable:
    """Word vectors of a fixed dimensionality."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -20.0, 20.0)))


def train_sgns(
    corpus: Corpus,
    dim: int = 50,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    min_count: int = 10,
    seed: int = 0,
    learning_rate: float = 0.025,
) -> EmbeddingTable:
    """Train skip-gram negative-sampling embeddings on a corpus.

    Deterministic for a fixed seed. Noise words are drawn from the unigram
    distribution raised to 0.75; the learning rate decays linearly over all
    center-context pairs. Only types with at least `min_count` occurrences
    receive vectors.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not corpus.sentences:
        raise EmptyInputError("cannot train embeddings on an empty corpus")
    if corpus.num_tokens() < window:
        raise DegenerateInputError(
            f"corpus has {corpus.num_tokens()} tokens, fewer than window={window}"
        )
    counts: dict[str, int] = {}
    for sent in corpus.sentences:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
    words = sorted(w for w, c in counts.items() if c >= min_count)
    if not words:
        raise DegenerateInputError(
            f"no type reaches min_count={min_count}; largest count is "
            f"{max(counts.values())}"
        )
    word_to_idx = {w: i for i, w in enumerate(words)}
    vocab_size = len(words)

    sentences = [
        np.array([word_to_idx[t] for t in sent if t in word_to_idx], dtype=np.int64)
        for sent in corpus.sentences
    ]
    sentences = [s for s in sentences if len(s) >= 2]
    if not sentences:
        raise DegenerateInputError("no sentence has two in-vocabulary tokens")

    noise = np.array([counts[w] for w in words], dtype=np.float64) ** 0.75
    noise_cum = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(seed)
    syn0 = (rng.random((vocab_size, dim)) - 0.5) / dim
    syn1 = np.zeros((vocab_size, dim))

    pairs_per_pass = 0
    for s in sentences:
        n = len(s)
        for pos in range(n):
            pairs_per_pass += min(n, pos + window + 1) - max(0, pos - window) - 1
    total_pairs = pairs_per_pass * epochs

    labels = np.zeros(negatives + 1)
    labels[0] = 1.0
    processed = 0
    for _ in range(epochs):
        for s in sentences:
            n = len(s)
            for pos in range(n):
                center = s[pos]
                lo = max(0, pos - window)
                hi = min(n, pos + window + 1)
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    lr = learning_rate * max(1.0 - processed / total_pairs, 1e-4)
                    processed += 1
                    rows = np.empty(negatives + 1, dtype=np.int64)
                    rows[0] = s[j]
                    rows[1:] = np.searchsorted(noise_cum, rng.random(negatives))
                    l1 = syn0[center]
                    l2 = syn1[rows]
                    grad = (labels - _sigmoid(l2 @ l1)) * lr
                    syn0[center] = l1 + grad @ l2
                    for i, row in enumerate(rows):
                        syn1[row] += grad[i] * l1
    return EmbeddingTable(dim, {w: syn0[i].copy() for i, w in enumerate(words)})


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write the text format; floats use repr so a reload is bit-identical."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word in sorted(table.vectors):
            components = " ".join(repr(float(x)) for x in table.vectors[word])
            fh.write(f"{word} {components}\n")


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the text format, validating the header against every row."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: non-integer header {header!r}") from None
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise FormatError(
                    f"{path}: line {lineno}: expected {dim} components, "
                    f"got {len(parts) - 1}"
                )
            word = parts[0]
            if word in vectors:
                raise FormatError(f"{path}: line {lineno}: duplicate word {word!r}")
            try:
                vectors[word] = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: non-numeric component"
                ) from None
    if len(vectors) != count:
        raise FormatError(
            f"{path}: header declares {count} vectors, file has {len(vectors)}"
        )
    return EmbeddingTable(dim, vectors)


def _normalized_rows(table: EmbeddingTable) -> tuple[list[str], np.ndarray]:
    # Rows sorted by word so that a stable sort on similarity breaks ties by
    # ascending lexicographic word.
    words = sorted(table.vectors)
    matrix = np.array([table.vectors[w] for w in words], dtype=np.float32)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return words, np.ascontiguousarray(matrix / norms)


class ExactIndex:
    """Brute-force cosine scan; the reference backend."""

    def __init__(self, table: EmbeddingTable):
        self.words, self.matrix = _normalized_rows(table)
        self._row = {w: i for i, w in enumerate(self.words)}

    def knn(self, word: str, k: int) -> list[str]:
        """The k most cosine-similar words, query word excluded.

        Raises KeyError for out-of-vocabulary queries.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        row = self._row[word]
        sims = self.matrix @ self.matrix[row]
        sims[row] = -2.0  # below any cosine, so the word never returns itself
        order = np.argsort(-sims, kind="stable")[:k]
        return [self.words[i] for i in order]


@njit(cache=True, fastmath=True, boundscheck=False)
def _forest_query(q, planes, nodes, items, leaf_vecs, roots, search_k, k,
                  self_row, heap_pri, heap_node, mark, visited, out_id, out_sim):
    dim = q.shape[0]
    cap = heap_pri.shape[0]
    n_heap = 0
    INF = np.float32(3.0e38)
    for i in range(roots.shape[0]):
        heap_pri[n_heap] = INF
        heap_node[n_heap] = roots[i]
        n_heap += 1
        j = n_heap - 1
        while j > 0:
            p = (j - 1) >> 1
            if heap_pri[j] > heap_pri[p]:
                heap_pri[j], heap_pri[p] = heap_pri[p], heap_pri[j]
                heap_node[j], heap_node[p] = heap_node[p], heap_node[j]
                j = p
            else:
                break
    for i in range(k):
        out_id[i] = -1
        out_sim[i] = np.float32(-2.0)
    worst = np.float32(-2.0)
    n_seen = 0
    while n_heap > 0 and n_seen < search_k:
        pri = heap_pri[0]
        node = heap_node[0]
        n_heap -= 1
        heap_pri[0] = heap_pri[n_heap]
        heap_node[0] = heap_node[n_heap]
        j = 0
        while True:
            c1 = 2 * j + 1
            c2 = c1 + 1
            big = j
            if c1 < n_heap and heap_pri[c1] > heap_pri[big]:
                big = c1
            if c2 < n_heap and heap_pri[c2] > heap_pri[big]:
                big = c2
            if big == j:
                break
            heap_pri[j], heap_pri[big] = heap_pri[big], heap_pri[j]
            heap_node[j], heap_node[big] = heap_node[big], heap_node[j]
            j = big
        if nodes[node, 0] < 0:
            # leaf: rank members immediately (vectors stored leaf-contiguous)
            for ii in range(nodes[node, 2], nodes[node, 3]):
                item = items[ii]
                if item == self_row or mark[item] != 0:
                    continue
                mark[item] = 1
                visited[n_seen] = item
                n_seen += 1
                s = np.float32(0.0)
                for d in range(dim):
                    s += leaf_vecs[ii, d] * q[d]
                if s > worst or (s == worst and 0 <= item < out_id[k - 1]):
                    pos = k - 1
                    while pos > 0 and (
                        out_sim[pos - 1] < s
                        or (out_sim[pos - 1] == s and out_id[pos - 1] > item)
                    ):
                        out_sim[pos] = out_sim[pos - 1]
                        out_id[pos] = out_id[pos - 1]
                        pos -= 1
                    out_sim[pos] = s
                    out_id[pos] = item
                    worst = out_sim[k - 1]
        else:
            margin = planes[node, dim]
            for d in range(dim):
                margin += planes[node, d] * q[d]
            amargin = margin if margin >= 0 else -margin
            if margin >= 0:
                near = nodes[node, 1]
                far = nodes[node, 0]
            else:
                near = nodes[node, 0]
                far = nodes[node, 1]
            if n_heap + 2 <= cap:
                pn = pri if pri < amargin else amargin
                heap_pri[n_heap] = pn
                heap_node[n_heap] = near
                n_heap += 1
                j = n_heap - 1
                while j > 0:
                    p = (j - 1) >> 1
                    if heap_pri[j] > heap_pri[p]:
                        heap_pri[j], heap_pri[p] = heap_pri[p], heap_pri[j]
                        heap_node[j], heap_node[p] = heap_node[p], heap_node[j]
                        j = p
                    else:
                        break
                pf = pri if pri < -amargin else -amargin
                heap_pri[n_heap] = pf
                heap_node[n_heap] = far
                n_heap += 1
                j = n_heap - 1
                while j > 0:
                    p = (j - 1) >> 1
                    if heap_pri[j] > heap_pri[p]:
                        heap_pri[j], heap_pri[p] = heap_pri[p], heap_pri[j]
                        heap_node[j], heap_node[p] = heap_node[p], heap_node[j]
                        j = p
                    else:
                        break
    for i in range(n_seen):
        mark[visited[i]] = 0
    return n_seen


class RandomProjectionForest:
    """Approximate cosine kNN via randomized median-split trees.

    Each tree splits on a random hyperplane at the projection median, giving
    balanced depth. Queries run one priority-queue traversal across all
    trees, collect `search_k` distinct candidates, and rank them exactly.
    Deterministic for a fixed seed; immutable after build.
    """

    def __init__(
        self,
        table: EmbeddingTable,
        num_trees: int = 16,
        leaf_size: int = 32,
        seed: int = 0,
        search_k: int | None = None,
    ):
        if num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        self.words, self.matrix = _normalized_rows(table)
        self._row = {w: i for i, w in enumerate(self.words)}
        self.num_trees = num_trees
        self.leaf_size = leaf_size
        self.default_search_k = search_k
        n, dim = self.matrix.shape

        planes: list[np.ndarray] = []
        children: list[list[int]] = []  # [left, right, leaf_lo, leaf_hi]
        items: list[int] = []
        roots: list[int] = []
        rng = np.random.default_rng(seed)

        def build(ids: np.ndarray) -> int:
            node = len(children)
            planes.append(np.zeros(dim + 1, np.float32))
            children.append([-1, -1, -1, -1])
            if len(ids) <= leaf_size:
                children[node][2] = len(items)
                items.extend(ids.tolist())
                children[node][3] = len(items)
                return node
            normal = rng.standard_normal(dim).astype(np.float32)
            normal /= np.linalg.norm(normal)
            proj = self.matrix[ids] @ normal
            median = float(np.median(proj))
            mask = proj < median
            n_left = int(mask.sum())
            if n_left == 0 or n_left == len(ids):
                # Degenerate projections: fall back to a balanced stable split.
                order = np.argsort(proj, kind="stable")
                mask = np.zeros(len(ids), bool)
                mask[order[: len(ids) // 2]] = True
            plane = np.empty(dim + 1, np.float32)
            plane[:dim] = normal
            plane[dim] = np.float32(-median)
            planes[node] = plane
            children[node][0] = build(ids[mask])
            children[node][1] = build(ids[~mask])
            return node

        all_ids = np.arange(n, dtype=np.int64)
        for _ in range(num_trees):
            roots.append(build(all_ids))

        self._planes = np.ascontiguousarray(np.stack(planes))
        self._nodes = np.ascontiguousarray(np.array(children, dtype=np.int64))
        self._items = np.array(items, dtype=np.int64)
        self._leaf_vecs = np.ascontiguousarray(self.matrix[self._items])
        self._roots = np.array(roots, dtype=np.int64)
        self._scratch = threading.local()

    def _buffers(self, search_k: int, k: int):
        local = self._scratch
        cap = 2 * search_k + 4 * self.num_trees + 64
        if getattr(local, "cap", 0) < cap or getattr(local, "k", 0) < k:
            local.cap = cap
            local.k = k
            local.heap_pri = np.empty(cap, np.float32)
            local.heap_node = np.empty(cap, np.int64)
            local.mark = np.zeros(len(self.words), np.uint8)
            local.visited = np.empty(len(self.words), np.int64)
            local.out_id = np.empty(k, np.int64)
            local.out_sim = np.empty(k, np.float32)
        return local

    def knn(self, word: str, k: int, search_k: int | None = None) -> list[str]:
        """Approximate k nearest words; contract mirrors ExactIndex.knn."""
        if k < 1:
            raise ValueError("k must be >= 1")
        row = self._row[word]
        if search_k is None:
            search_k = self.default_search_k or max(2 * k * self.num_trees, 64)
        buf = self._buffers(search_k, k)
        _forest_query(
            self.matrix[row], self._planes, self._nodes, self._items,
            self._leaf_vecs, self._roots, search_k, k, row,
            buf.heap_pri, buf.heap_node, buf.mark, buf.visited,
            buf.out_id, buf.out_sim,
        )
        return [self.words[i] for i in buf.out_id[:k] if i >= 0]


def build_index(table: EmbeddingTable, backend: str = "exact", **kwargs):
    """Construct a neighbor index by backend name ('exact' or 'forest')."""
    if backend == "exact":
        return ExactIndex(table)
    if backend == "forest":
        return RandomProjectionForest(table, **kwargs)
    raise ValueError(f"unknown index backend {backend!r}")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors compare as 0."""
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)

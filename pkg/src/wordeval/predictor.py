"""Next-unit predictors: the prediction contract, a backoff n-gram model,
and a client for the line-delimited remote wire protocol (v1).

Every predictor maps (context unit ids, k) to the top-k next units with
log-probabilities, descending by probability with ties broken by ascending
unit id so that identical sessions produce identical prediction streams.

Wire protocol v1 (UTF-8, one JSON object per line):

    server hello   {"type": "hello", "scheme": "bpe"|"wordpiece",
                    "vocab_sha256": "...", "vocab_size": N}
    request        {"type": "predict", "id": i, "context": [unit ids], "k": K}
    response       {"type": "dist", "id": i, "top": [[unit_id, logprob], ...]}

The transport is either the stdio of a spawned adapter process or a TCP
socket given as ``host:port``. One request is in flight per connection and
response ids must echo request ids.
"""

from __future__ import annotations

import json
import math
import selectors
import shlex
import socket
import subprocess
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    EmptyInputError,
    ProtocolError,
    SessionClosedError,
    TransportError,
)


@dataclass
class UnitDistribution:
    """Top units of a next-unit distribution, best first.

    `top` holds (unit_id, logprob) pairs with non-increasing probability.
    `total_mass_accounted` is the probability mass covered by `top`.
    """

    top: list[tuple[int, float]]
    total_mass_accounted: float

    def argmax(self) -> int:
        return self.top[0][0]

    def logprob_of(self, unit_id: int) -> float | None:
        for uid, lp in self.top:
            if uid == unit_id:
                return lp
        return None


class Predictor:
    """Interface for a next-unit distribution source."""

    vocab_size: int

    def predict(self, context_units: list[int], k: int) -> UnitDistribution:
        raise NotImplementedError


def _clamp_k(k: int, vocab_size: int) -> int:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > vocab_size:
        warnings.warn(
            f"k={k} exceeds vocabulary size {vocab_size}; clamping",
            stacklevel=3,
        )
        return vocab_size
    return k


def _top_k_from_probs(probs: np.ndarray, k: int) -> UnitDistribution:
    # Stable argsort on -p yields ascending unit id among equal probabilities.
    order = np.argsort(-probs, kind="stable")[:k]
    top = [(int(u), float(math.log(probs[u]))) for u in order]
    mass = float(probs[order].sum())
    return UnitDistribution(top, min(mass, 1.0))


class UniformPredictor(Predictor):
    """Assigns probability 1/V to every unit regardless of context."""

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size

    def predict(self, context_units: list[int], k: int) -> UnitDistribution:
        k = _clamp_k(k, self.vocab_size)
        lp = -math.log(self.vocab_size)
        top = [(u, lp) for u in range(k)]
        return UnitDistribution(top, k / self.vocab_size)


class NGramModel(Predictor):
    """Backoff n-gram model over unit ids with absolute discounting.

    Each context level subtracts `discount` from every observed count and
    redistributes the freed mass to the next shorter context, bottoming out
    at the uniform distribution, so every unit has nonzero probability in
    every context and each distribution sums to 1 exactly.
    """

    def __init__(self, order: int, discount: float, vocab_size: int):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if not 0.0 < discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {discount}")
        self.order = order
        self.discount = discount
        self.vocab_size = vocab_size
        # context tuple (len < order) -> (total count, {unit id: count})
        self._contexts: list[dict[tuple[int, ...], tuple[int, dict[int, int]]]] = [
            {} for _ in range(order)
        ]

    def _observe(self, sequences: list[list[int]]) -> None:
        raw: list[dict[tuple[int, ...], dict[int, int]]] = [
            {} for _ in range(self.order)
        ]
        for seq in sequences:
            for i, unit in enumerate(seq):
                for length in range(min(i, self.order - 1) + 1):
                    ctx = tuple(seq[i - length:i])
                    bucket = raw[length].setdefault(ctx, {})
                    bucket[unit] = bucket.get(unit, 0) + 1
        for length in range(self.order):
            for ctx, bucket in raw[length].items():
                self._contexts[length][ctx] = (sum(bucket.values()), bucket)

    def full_distribution(self, context_units: list[int]) -> np.ndarray:
        """Probability of every unit given the context, as a dense vector."""
        probs = np.full(self.vocab_size, 1.0 / self.vocab_size)
        max_len = min(len(context_units), self.order - 1)
        for length in range(max_len + 1):
            ctx = tuple(context_units[len(context_units) - length:])
            entry = self._contexts[length].get(ctx)
            if entry is None:
                # Unseen context; longer contexts share its suffix and are
                # unseen too, so the backoff chain stops here.
                break
            total, bucket = entry
            lam = self.discount * len(bucket) / total
            probs *= lam
            for unit, count in bucket.items():
                probs[unit] += (count - self.discount) / total
        return probs

    def predict(self, context_units: list[int], k: int) -> UnitDistribution:
        k = _clamp_k(k, self.vocab_size)
        return _top_k_from_probs(self.full_distribution(context_units), k)


def train_ngram(
    corpus_units: list[list[int]],
    order: int,
    discount: float = 0.75,
    vocab_size: int | None = None,
) -> NGramModel:
    """Train an absolute-discounting backoff model on unit id sequences."""
    sequences = [seq for seq in corpus_units if seq]
    if not sequences:
        raise EmptyInputError("cannot train an n-gram model on an empty corpus")
    if vocab_size is None:
        vocab_size = max(max(seq) for seq in sequences) + 1
    model = NGramModel(order, discount, vocab_size)
    model._observe(sequences)
    return model


class CachingPredictor(Predictor):
    """LRU memo around another predictor, keyed by (context, k)."""

    def __init__(self, inner: Predictor, maxsize: int = 100_000):
        self.inner = inner
        self.vocab_size = inner.vocab_size
        self.maxsize = maxsize
        self._cache: OrderedDict[tuple, UnitDistribution] = OrderedDict()

    def predict(self, context_units: list[int], k: int) -> UnitDistribution:
        key = (tuple(context_units), k)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        dist = self.inner.predict(context_units, k)
        self._cache[key] = dist
        if len(self._cache) > self.maxsize:
            self._cache.popitem(last=False)
        return dist


@dataclass
class Handshake:
    scheme: str
    vocab_sha256: str
    vocab_size: int


class _LineTransport:
    """Line-oriented transport over a spawned process or a TCP socket."""

    def __init__(self, spawn: str | None, address: str | None, timeout: float):
        self.timeout = timeout
        self._closed = False
        self._buffer = b""
        if (spawn is None) == (address is None):
            raise ConfigurationError(
                "exactly one of spawn command or TCP address must be given"
            )
        if spawn is not None:
            # bufsize=0 keeps the pipe unbuffered so the selector below sees
            # exactly what is readable.
            self._proc = subprocess.Popen(
                shlex.split(spawn),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
            self._sock = None
            self._selector = selectors.DefaultSelector()
            self._selector.register(self._proc.stdout, selectors.EVENT_READ)
        else:
            host, _, port_text = address.rpartition(":")
            try:
                port = int(port_text)
            except ValueError:
                raise ConfigurationError(
                    f"address {address!r} is not of the form host:port"
                ) from None
            self._proc = None
            self._selector = None
            try:
                self._sock = socket.create_connection((host, port), timeout=timeout)
            except OSError as exc:
                raise TransportError(f"cannot connect to {address}: {exc}") from exc
            self._sock.settimeout(timeout)

    def send_line(self, line: str) -> None:
        if self._closed:
            raise SessionClosedError("session already closed")
        data = line.encode("utf-8") + b"\n"
        try:
            if self._proc is not None:
                self._proc.stdin.write(data)
                self._proc.stdin.flush()
            else:
                self._sock.sendall(data)
        except (BrokenPipeError, OSError) as exc:
            self._closed = True
            raise SessionClosedError(f"connection lost while sending: {exc}") from exc

    def recv_line(self) -> str:
        if self._closed:
            raise SessionClosedError("session already closed")
        while b"\n" not in self._buffer:
            chunk = self._read_chunk()
            if not chunk:
                self._closed = True
                raise SessionClosedError("connection closed by peer")
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line.decode("utf-8")

    def _read_chunk(self) -> bytes:
        if self._proc is not None:
            ready = self._selector.select(self.timeout)
            if not ready:
                self._closed = True
                raise TransportError(
                    f"timed out after {self.timeout}s waiting for adapter output"
                )
            return self._proc.stdout.read(65536)
        try:
            return self._sock.recv(65536)
        except socket.timeout as exc:
            self._closed = True
            raise TransportError(
                f"timed out after {self.timeout}s waiting for response"
            ) from exc
        except OSError as exc:
            self._closed = True
            raise SessionClosedError(f"connection lost: {exc}") from exc

    def close(self) -> None:
        self._closed = True
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        elif self._sock is not None:
            self._sock.close()


class RemotePredictor(Predictor):
    """Client for a protocol-v1 adapter serving next-unit distributions.

    The adapter speaks first with a hello line announcing its vocabulary;
    when `expected_sha256` is given, a mismatch raises ConfigurationError so
    that locally loaded vocabularies cannot silently diverge from the model's.
    """

    def __init__(
        self,
        spawn: str | None = None,
        address: str | None = None,
        timeout: float = 30.0,
        expected_sha256: str | None = None,
    ):
        self._transport = _LineTransport(spawn, address, timeout)
        self._next_id = 0
        try:
            hello = self._read_message()
            if hello.get("type") != "hello":
                raise ProtocolError(f"expected hello, got: {json.dumps(hello)}")
            try:
                self.handshake = Handshake(
                    scheme=hello["scheme"],
                    vocab_sha256=hello["vocab_sha256"],
                    vocab_size=int(hello["vocab_size"]),
                )
            except KeyError as exc:
                raise ProtocolError(f"hello missing field {exc}") from exc
            self.vocab_size = self.handshake.vocab_size
            if (expected_sha256 is not None
                    and expected_sha256 != self.handshake.vocab_sha256):
                raise ConfigurationError(
                    "vocabulary hash mismatch: adapter serves "
                    f"{self.handshake.vocab_sha256}, local vocabulary is "
                    f"{expected_sha256}"
                )
        except Exception:
            self._transport.close()
            raise

    def _read_message(self) -> dict:
        line = self._transport.recv_line()
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed protocol line: {line!r}") from exc
        if not isinstance(message, dict):
            raise ProtocolError(f"malformed protocol line: {line!r}")
        return message

    def predict(self, context_units: list[int], k: int) -> UnitDistribution:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        request_id = self._next_id
        self._next_id += 1
        self._transport.send_line(json.dumps({
            "type": "predict",
            "id": request_id,
            "context": list(context_units),
            "k": k,
        }))
        message = self._read_message()
        if message.get("type") != "dist":
            raise ProtocolError(f"expected dist, got: {json.dumps(message)}")
        if message.get("id") != request_id:
            raise ProtocolError(
                f"response id {message.get('id')} does not match request {request_id}"
            )
        if "warning" in message:
            warnings.warn(f"adapter warning: {message['warning']}", stacklevel=2)
        try:
            top = [(int(uid), float(lp)) for uid, lp in message["top"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed dist payload: {json.dumps(message)}") from exc
        mass = min(1.0, sum(math.exp(lp) for _, lp in top))
        return UnitDistribution(top, mass)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "RemotePredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def remote_predict(
    endpoint: str,
    context_units: list[int],
    k: int,
    timeout: float = 30.0,
) -> UnitDistribution:
    """One-shot prediction against a TCP adapter at ``host:port``."""
    client = RemotePredictor(address=endpoint, timeout=timeout)
    try:
        return client.predict(context_units, k)
    finally:
        client.close()

"""Sentence encoders and the intent-schema overlap (cosine) score."""

from __future__ import annotations

import hashlib
import math
import re
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, EncoderUnavailableError
from .tokens import content_hash

DEFAULT_DIM = 384

_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    norm: float

    @classmethod
    def from_values(cls, values: Iterable[float], normalize: bool = True) -> "EmbeddingVector":
        arr = np.array(values, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if normalize and norm > 0.0:
            arr = arr / norm
            norm = float(np.linalg.norm(arr))
        arr.setflags(write=False)
        return cls(arr, norm)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @property
    def is_zero(self) -> bool:
        return self.norm == 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


class Encoder(Protocol):
    name: str
    dim: int

    def encode(self, text: str) -> EmbeddingVector: ...


def _as_array(v: EmbeddingVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(v, EmbeddingVector):
        return v.values
    return np.asarray(v, dtype=np.float64)


def iso_score(e_q: EmbeddingVector | Sequence[float], e_t: EmbeddingVector | Sequence[float]) -> float:
    """Cosine similarity between query and tool-summary embeddings; 0 if either is the zero vector."""
    a, b = _as_array(e_q), _as_array(e_t)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    s = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, s))


STOPWORDS = frozenset(
    """a an and are as at be by can could do for from help i in into is it its let's lets me
    my need of on or please so that the this to up us we when which with you your""".split()
)


def tokenize_words(text: str) -> list[str]:
    return [w for w in _SPLIT.split(text.lower()) if w]


class HashedNgramEncoder:
    """Signed feature hashing of word unigrams and per-word character 3-grams.

    Words are padded with ``<``/``>`` before taking 3-grams, so ``"pr"`` yields
    ``<pr`` and ``pr>``. Each feature lands in one of ``dim`` buckets with a
    +/-1 sign drawn from an independent hash; the result is L2-normalized.
    """

    def __init__(
        self,
        dim: int = DEFAULT_DIM,
        seed: int = 0,
        word_weight: float = 1.0,
        char_weight: float = 0.2,
        bigram_weight: float = 0.7,
        stopwords: frozenset[str] = STOPWORDS,
    ) -> None:
        if dim < 16:
            raise ConfigurationError("dim must be >= 16")
        self.dim = dim
        self.seed = seed
        self.word_weight = word_weight
        self.char_weight = char_weight
        self.bigram_weight = bigram_weight
        self.stopwords = stopwords
        self.name = f"hashed-ngram-{dim}"
        self._key = seed.to_bytes(8, "little", signed=True)
        self._slots: dict[str, tuple[int, float]] = {}
        self._vectors: dict[int, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def _slot(self, feature: str) -> tuple[int, float]:
        slot = self._slots.get(feature)
        if slot is None:
            raw = feature.encode("utf-8")
            bucket = int.from_bytes(hashlib.blake2b(raw, digest_size=8, key=self._key, person=b"bucket").digest(), "little")
            sign_bits = hashlib.blake2b(raw, digest_size=1, key=self._key, person=b"sign").digest()[0]
            slot = (bucket % self.dim, 1.0 if sign_bits & 1 else -1.0)
            self._slots[feature] = slot
        return slot

    def features(self, text: str) -> list[tuple[str, float]]:
        out: list[tuple[str, float]] = []
        words = [w for w in tokenize_words(text) if w not in self.stopwords]
        for prev, word in zip([""] + words, words):
            out.append(("w:" + word, self.word_weight))
            if self.bigram_weight and prev:
                out.append((f"b:{prev} {word}", self.bigram_weight))
            if self.char_weight:
                padded = f"<{word}>"
                for i in range(len(padded) - 2):
                    out.append(("c:" + padded[i : i + 3], self.char_weight))
        return out

    def encode(self, text: str) -> EmbeddingVector:
        key = content_hash(text)
        cached = self._vectors.get(key)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim, dtype=np.float64)
        for feature, weight in self.features(text):
            bucket, sign = self._slot(feature)
            vec[bucket] += sign * weight
        out = EmbeddingVector.from_values(vec)
        with self._lock:
            self._vectors[key] = out
        return out


def hashed_ngram_encoder(dim: int = DEFAULT_DIM, seed: int = 0) -> HashedNgramEncoder:
    return HashedNgramEncoder(dim=dim, seed=seed)


class TfidfHashedEncoder:
    """Lexical baseline: hashed word unigrams weighted by IDF fitted on a corpus."""

    def __init__(self, corpus: Sequence[str], dim: int = DEFAULT_DIM, seed: int = 0) -> None:
        self.dim = dim
        self.name = f"tfidf-hashed-{dim}"
        self._base = HashedNgramEncoder(dim=dim, seed=seed, char_weight=0.0)
        df: dict[str, int] = {}
        for doc in corpus:
            for w in set(tokenize_words(doc)):
                df[w] = df.get(w, 0) + 1
        n = len(corpus)
        self._idf = {w: math.log((1 + n) / (1 + c)) + 1.0 for w, c in df.items()}
        self._default_idf = math.log(1 + n) + 1.0

    def encode(self, text: str) -> EmbeddingVector:
        vec = np.zeros(self.dim, dtype=np.float64)
        counts: dict[str, int] = {}
        for w in tokenize_words(text):
            counts[w] = counts.get(w, 0) + 1
        for w, tf in counts.items():
            bucket, sign = self._base._slot("w:" + w)
            vec[bucket] += sign * tf * self._idf.get(w, self._default_idf)
        return EmbeddingVector.from_values(vec)


class ExternalEncoder:
    """Delegates to an embedding endpoint, normalizing and caching results."""

    def __init__(self, adapter: Callable[[str], Any], dim: int, name: str = "external") -> None:
        self._adapter = adapter
        self.dim = dim
        self.name = name
        self._cache: dict[int, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def encode(self, text: str) -> EmbeddingVector:
        key = content_hash(text)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            reply = self._adapter(text)
        except Exception as exc:
            raise EncoderUnavailableError(f"embedding adapter failed: {exc}") from exc
        values = reply["vector"] if isinstance(reply, dict) else reply
        if len(values) != self.dim:
            raise ConfigurationError(f"adapter returned dimension {len(values)}, expected {self.dim}")
        vec = EmbeddingVector.from_values(values)
        with self._lock:
            self._cache[key] = vec
        return vec


def external_encoder(adapter: Callable[[str], Any], dim: int, name: str = "external") -> ExternalEncoder:
    return ExternalEncoder(adapter, dim, name)

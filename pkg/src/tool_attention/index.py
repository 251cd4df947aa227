"""Flat inner-product store over normalized tool-summary embeddings."""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Iterator, Sequence

import numpy as np

from .embed import EmbeddingVector, Encoder
from .errors import DimensionMismatchError, DuplicateToolError


class ReadWriteLock:
    """Many concurrent readers or one writer."""

    def __init__(self) -> None:
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writing = False

    @contextmanager
    def read(self) -> Iterator[None]:
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        with self._cond:
            while self._writing or self._readers:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class VectorStore:
    def __init__(self, dim: int) -> None:
        self.dim = dim
        self.tool_ids: list[str] = []
        self.id_set: set[str] = set()
        self._rows: list[np.ndarray] = []
        self._matrix = np.zeros((0, dim), dtype=np.float64)
        self._lock = ReadWriteLock()

    def __len__(self) -> int:
        return len(self.tool_ids)

    def __contains__(self, tool_id: object) -> bool:
        return tool_id in self.id_set

    def add_vectors(self, items: Sequence[tuple[str, EmbeddingVector | np.ndarray]]) -> None:
        if not items:
            return
        rows = []
        seen: set[str] = set()
        for tool_id, vec in items:
            values = vec.values if isinstance(vec, EmbeddingVector) else np.asarray(vec, dtype=np.float64)
            if values.shape != (self.dim,):
                raise DimensionMismatchError(f"vector for {tool_id!r} has shape {values.shape}, store dim is {self.dim}")
            if tool_id in self.id_set or tool_id in seen:
                raise DuplicateToolError(tool_id)
            seen.add(tool_id)
            norm = float(np.linalg.norm(values))
            rows.append(values / norm if norm > 0.0 else values)
        with self._lock.write():
            self._matrix = np.vstack([self._matrix, np.stack(rows)])
            for tool_id, _ in items:
                self.tool_ids.append(tool_id)
                self.id_set.add(tool_id)

    def add_tools(self, summaries: Sequence, encoder: Encoder) -> None:
        """Encode each summary's text and append it; empty input is a no-op."""
        if not summaries:
            return
        if encoder.dim != self.dim:
            raise DimensionMismatchError(f"encoder dim {encoder.dim} != store dim {self.dim}")
        self.add_vectors([(s.tool_id, encoder.encode(s.text)) for s in summaries])

    def scores(self, query_vec: EmbeddingVector | np.ndarray) -> np.ndarray:
        q = query_vec.values if isinstance(query_vec, EmbeddingVector) else np.asarray(query_vec, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimensionMismatchError(f"query has shape {q.shape}, store dim is {self.dim}")
        with self._lock.read():
            return self._matrix @ q

    def search(self, query_vec: EmbeddingVector | np.ndarray, k: int) -> list[tuple[str, float]]:
        """Top-min(k, size) by inner product, descending; ties go to the earlier insertion."""
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock.read():
            if not self.tool_ids:
                return []
            q = query_vec.values if isinstance(query_vec, EmbeddingVector) else np.asarray(query_vec, dtype=np.float64)
            if q.shape != (self.dim,):
                raise DimensionMismatchError(f"query has shape {q.shape}, store dim is {self.dim}")
            scores = self._matrix @ q
            ids = list(self.tool_ids)
        n = scores.shape[0]
        m = min(k, n)
        if m < n:
            part = np.argpartition(-scores, m - 1)[:m]
            cutoff = scores[part].min()
            pool = np.flatnonzero(scores >= cutoff)
        else:
            pool = np.arange(n)
        order = pool[np.lexsort((pool, -scores[pool]))][:m]
        return [(ids[i], float(scores[i])) for i in order]

"""Partition containers: cluster label sequences and FoF vectors."""
from collections.abc import Mapping

import numpy as np

__all__ = ["FoFVector", "ClusterAssignment", "canonicalize", "enumerate_partitions"]


class FoFVector(Mapping):
    """Frequency of frequencies: ``counts[i]`` clusters of size ``i``.

    Zero multiplicities are dropped, so ``len(fof)`` is the number of
    distinct cluster sizes.
    """

    __slots__ = ("_counts",)

    def __init__(self, counts=None):
        items = {}
        for size, mult in dict(counts or {}).items():
            size, mult = int(size), int(mult)
            if size < 1 or mult < 0:
                raise ValueError(f"invalid FoF entry {size}:{mult}")
            if mult:
                items[size] = mult
        self._counts = dict(sorted(items.items()))

    @classmethod
    def from_sizes(cls, sizes):
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.size == 0:
            return cls()
        vals, cnts = np.unique(sizes, return_counts=True)
        return cls(dict(zip(vals.tolist(), cnts.tolist())))

    def __getitem__(self, size):
        return self._counts[size]

    def get(self, size, default=0):
        return self._counts.get(size, default)

    def __iter__(self):
        return iter(self._counts)

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if isinstance(other, FoFVector):
            return self._counts == other._counts
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._counts.items()))

    def __repr__(self):
        return f"FoFVector({self._counts})"

    @property
    def n(self):
        return sum(i * m for i, m in self._counts.items())

    @property
    def l(self):
        return sum(self._counts.values())

    def sizes(self):
        """Cluster sizes in ascending order."""
        if not self._counts:
            return np.zeros(0, dtype=np.int64)
        return np.repeat(np.fromiter(self._counts, dtype=np.int64),
                         np.fromiter(self._counts.values(), dtype=np.int64))

    def to_assignment(self):
        return ClusterAssignment.from_sizes(self.sizes())

    def dense(self, length=None):
        """Array ``m`` with ``m[i]`` the count for size ``i`` (index 0 unused)."""
        top = max(self._counts, default=0)
        length = top + 1 if length is None else length
        out = np.zeros(length, dtype=np.int64)
        for i, m in self._counts.items():
            if i < length:
                out[i] = m
        return out


def canonicalize(labels):
    """Relabel ``labels`` by order of first appearance, starting at 1."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return np.zeros(0, dtype=np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(1, first.size + 1)
    return rank[inverse.ravel()]


class ClusterAssignment:
    """Labels ``z_1..z_n`` in canonical order-of-appearance form.

    ``labels`` is a read-only int64 array with values in ``1..l``.
    """

    __slots__ = ("labels", "_sizes")

    def __init__(self, labels, *, canonical=False):
        arr = np.asarray(labels, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if not canonical:
            arr = canonicalize(arr)
        arr = np.array(arr, dtype=np.int64)
        arr.setflags(write=False)
        self.labels = arr
        self._sizes = None

    @classmethod
    def from_sizes(cls, sizes):
        """Concatenate blocks of the given sizes: ``(2, 1) -> 1 1 2``."""
        sizes = np.asarray(sizes, dtype=np.int64)
        if np.any(sizes < 1):
            raise ValueError("cluster sizes must be positive")
        labels = np.repeat(np.arange(1, sizes.size + 1, dtype=np.int64), sizes)
        return cls(labels, canonical=True)

    @property
    def n(self):
        return int(self.labels.size)

    @property
    def l(self):
        return int(self.labels.max()) if self.labels.size else 0

    @property
    def sizes(self):
        """Cluster sizes ``n_k`` indexed by label order."""
        if self._sizes is None:
            s = np.bincount(self.labels, minlength=self.l + 1)[1:]
            s.setflags(write=False)
            self._sizes = s
        return self._sizes

    def fof(self):
        return FoFVector.from_sizes(self.sizes)

    def prefix(self, i):
        return ClusterAssignment(self.labels[:i], canonical=True)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if isinstance(other, ClusterAssignment):
            return np.array_equal(self.labels, other.labels)
        return NotImplemented

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        if self.n <= 20:
            return f"ClusterAssignment({self.labels.tolist()})"
        return f"ClusterAssignment(n={self.n}, l={self.l})"


def enumerate_partitions(n, prefix=None):
    """Yield every canonical label tuple of length ``n`` (restricted growth).

    With ``prefix`` given, only completions of that canonical prefix are
    produced.
    """
    start = list(prefix) if prefix is not None else []
    if n == 0:
        yield ()
        return
    if not start:
        start = [1]
    if len(start) > n:
        return

    def grow(cur, top):
        if len(cur) == n:
            yield tuple(cur)
            return
        for k in range(1, top + 2):
            cur.append(k)
            yield from grow(cur, max(top, k))
            cur.pop()

    yield from grow(start, max(start))

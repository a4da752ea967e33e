"""Log-space triangular tables for S_a(n, l) and the backward recursion R.

``S_a(n, l)`` normalizes the size-dependent EPPF; ``R_{n}(i, j)`` carries the
mass of all completions of a length-``i`` prefix with ``j`` clusters inside
a population of size ``n``. Both tables hold natural logs and are
triangular (``1 <= l <= n``, ``1 <= j <= i``), stored flat row by row.
"""
import functools
import hashlib
import math
import os
import struct

import numpy as np

from . import _kernels
from .params import GnbpParams

__all__ = [
    "DEFAULT_CAP",
    "CapError",
    "LogTableS",
    "LogTableR",
    "build_s_table",
    "build_r_table",
    "log_normalizer",
    "log_normalizer_from_s",
    "set_cache_dir",
    "dump_table",
    "load_table",
]

DEFAULT_CAP = 4096
MAGIC = b"FOFTBL1"
_KIND_S, _KIND_R = 1, 2
_cache_dir = None


class CapError(ValueError):
    """Raised when a quadratic table would exceed the configured size cap."""


def _check_cap(n, cap):
    cap = DEFAULT_CAP if cap is None else cap
    if n > cap:
        raise CapError(f"table size {n} exceeds cap {cap}; pass cap= to override")


def _offset(i):
    return i * (i - 1) // 2


class _TriTable:
    """Flat lower-triangular array; row ``i`` holds columns ``1..i``."""

    def __init__(self, size, entries):
        self.size = size
        self.entries = entries
        self.entries.setflags(write=False)

    def row(self, i):
        if not 1 <= i <= self.size:
            raise IndexError(i)
        o = _offset(i)
        return self.entries[o:o + i]

    def __getitem__(self, key):
        i, j = key
        if not 1 <= i <= self.size:
            raise IndexError(key)
        if j < 1 or j > i:
            return -math.inf
        return float(self.entries[_offset(i) + j - 1])


class LogTableS(_TriTable):
    """``table[n, l] = ln S_a(n, l)`` for ``1 <= l <= n <= n_max``."""

    def __init__(self, a, n_max, entries):
        super().__init__(n_max, entries)
        self.a = a

    @property
    def n_max(self):
        return self.size

    def log_weighted_sum(self, n, params):
        """ln sum_l gamma0^l p^(-a l) S_a(n, l)."""
        if n == 0:
            return 0.0
        lw = params.log_new_weight
        ls = np.arange(1, n + 1)
        v = self.row(n) + ls * lw
        m = v.max()
        return float(m + math.log(np.exp(v - m).sum()))


class LogTableR(_TriTable):
    """``table[i, j] = ln R_{n, gamma0, a, p}(i, j)`` for ``1 <= j <= i <= n``."""

    def __init__(self, n, params, entries):
        super().__init__(n, entries)
        self.params = params

    @property
    def n(self):
        return self.size


def build_s_table(a, n_max, cap=None):
    """Fill ln S_a(n, l) by ``S(n+1, l) = (n - a l) S(n, l) + S(n, l-1)``.

    Memoized per ``(a, n_max)``; the returned table is read-only.
    """
    a = float(a)
    if not a < 1:
        raise ValueError("discount a must be < 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    _check_cap(n_max, cap)
    return _build_s_cached(a, int(n_max))


_s_tables = {}


def _build_s_cached(a, n_max):
    # rows do not depend on n_max, so smaller requests slice the largest table
    big = _s_tables.get(a)
    if big is None or big.n_max < n_max:
        entries = np.empty(_offset(n_max + 1))
        _kernels.fill_s_table(entries, n_max, a)
        entries.flags.writeable = False
        big = LogTableS(a, n_max, entries)
        if len(_s_tables) >= 8:
            _s_tables.pop(next(iter(_s_tables)))
        _s_tables[a] = big
    if big.n_max == n_max:
        return big
    return LogTableS(a, n_max, big.entries[:_offset(n_max + 1)])


def _r_key(n, params):
    h = hashlib.sha1(struct.pack("<qddd", n, params.gamma0, params.a, params.p))
    return h.hexdigest()[:16]


@functools.lru_cache(maxsize=8)
def _build_r_cached(n, gamma0, a, p):
    params = GnbpParams(gamma0, a, p)
    if _cache_dir:
        path = os.path.join(_cache_dir, f"R_{_r_key(n, params)}.tbl")
        if os.path.exists(path):
            tbl = load_table(path)
            if isinstance(tbl, LogTableR) and tbl.params == params and tbl.n == n:
                return tbl
    entries = np.empty(_offset(n + 1))
    _kernels.fill_r_table(entries, n, a, params.log_new_weight)
    tbl = LogTableR(n, params, entries)
    if _cache_dir:
        os.makedirs(_cache_dir, exist_ok=True)
        dump_table(tbl, os.path.join(_cache_dir, f"R_{_r_key(n, params)}.tbl"))
    return tbl


def build_r_table(n, params, cap=None):
    """Backward recursion ``R(i, j) = R(i+1, j)(i - a j) + R(i+1, j+1) gamma0 p^-a``.

    Tables are memoized per ``(n, params)``; they are immutable.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_cap(n, cap)
    return _build_r_cached(int(n), params.gamma0, params.a, params.p)


def set_cache_dir(path):
    """Persist R tables under ``path`` (``None`` disables the disk cache)."""
    global _cache_dir
    _cache_dir = path
    _build_r_cached.cache_clear()


def log_normalizer_from_s(n, params, cap=None):
    """ln sum_l gamma0^l p^(-a l) S_a(n, l) summed from an S table."""
    if n == 0:
        return 0.0
    return build_s_table(params.a, n, cap=cap).log_weighted_sum(n, params)


def log_normalizer(n, params, cap=None, cross_check=False):
    """ln sum_{l=0}^{n} gamma0^l p^(-a l) S_a(n, l).

    Evaluated as ``ln(gamma0 p^-a) + ln R(1, 1)``; at ``a = 0`` the sum is the
    rising factorial ``Gamma(n + gamma0) / Gamma(gamma0)`` and needs no table.
    With ``cross_check`` the S-table sum is also computed and compared.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0
    if params.a == 0.0:
        value = math.lgamma(n + params.gamma0) - math.lgamma(params.gamma0)
    else:
        value = _log_normalizer_r(n, params, cap)
    if cross_check:
        via_r = _log_normalizer_r(n, params, cap)
        via_s = log_normalizer_from_s(n, params, cap)
        for other in (via_r, via_s):
            if abs(value - other) > 1e-10 * max(1.0, abs(value)):
                raise AssertionError(
                    f"normalizer mismatch at n={n}: {value!r} vs {other!r}")
    return value


def _log_normalizer_r(n, params, cap):
    _check_cap(n, cap)
    return params.log_new_weight + build_r_table(n, params, cap=cap)[1, 1]


def dump_table(table, path):
    """Write a table as ``FOFTBL1`` + kind/n (u64) + a/gamma0/p (f64) + entries."""
    if isinstance(table, LogTableS):
        head = struct.pack("<QQddd", _KIND_S, table.n_max, table.a, math.nan, math.nan)
    elif isinstance(table, LogTableR):
        prm = table.params
        head = struct.pack("<QQddd", _KIND_R, table.n, prm.a, prm.gamma0, prm.p)
    else:
        raise TypeError("not a recursion table")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(head)
        fh.write(np.ascontiguousarray(table.entries, dtype="<f8").tobytes())


def load_table(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        kind, size, a, gamma0, p = struct.unpack("<QQddd", fh.read(40))
        entries = np.frombuffer(fh.read(), dtype="<f8").astype(float)
    if entries.size != _offset(size + 1):
        raise ValueError(f"{path}: truncated table")
    if kind == _KIND_S:
        return LogTableS(a, size, entries)
    if kind == _KIND_R:
        return LogTableR(size, GnbpParams(gamma0, a, p), entries)
    raise ValueError(f"{path}: unknown table kind {kind}")

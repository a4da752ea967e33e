"""Cluster structure of completely-random-measure mixed Poisson processes.

The generic layer works with any mixing kernel exposing the moments
``int r^j e^-r rho(dr)`` and ``int (1 - e^-r) rho(dr)``: the process is
compound Poisson with a Poisson number of clusters and iid sizes. The gNBP
specialization adds closed-form ECPF/EPPF, FoF rates, three equivalent
simulators, and the two partition samplers (sequential R-ratio rule and the
proportional Gibbs rule).
"""
import abc
import math

import numpy as np
from scipy import special

from . import _kernels
from .distributions import _tnb_log_pmf_array, tnb_sample
from .numerics import log_psi as _log_psi
from .params import GnbpParams
from .partitions import ClusterAssignment, FoFVector
from .recursions import build_r_table, build_s_table, log_normalizer
from .rng import as_stream

__all__ = [
    "MixingKernel",
    "GammaKernel",
    "GGammaKernel",
    "generic_cluster_size_log_pmf",
    "generic_compound",
    "log_ecpf",
    "log_eppf",
    "log_cluster_count_pmf",
    "cluster_count_log_pmf_all",
    "log_size_eppf",
    "log_prefix_cluster_count_pmf",
    "fof_log_rate",
    "fof_truncation",
    "simulate_fof_poisson",
    "simulate_fof_stickbreak",
    "simulate_compound",
    "sequential_sample",
    "simulate_pitman_yor",
    "sequential_rule_probs",
    "gibbs_weights",
    "gibbs_sweep",
    "log_completion_density",
]


# ---------------------------------------------------------------- kernels

class MixingKernel(abc.ABC):
    """Levy intensity ``rho`` of the jumps of the mixing measure."""

    @abc.abstractmethod
    def log_moment(self, j):
        """ln int r^j e^-r rho(dr), vectorized over ``j >= 1``."""

    @property
    @abc.abstractmethod
    def log_psi(self):
        """ln int (1 - e^-r) rho(dr)."""


class GammaKernel(MixingKernel):
    """Gamma process jumps, ``rho(dr) = r^-1 exp(-r (1-p)/p) dr``."""

    def __init__(self, p):
        self.p = float(p)

    def log_moment(self, j):
        j = np.asarray(j, dtype=float)
        return special.gammaln(j) + j * math.log(self.p)

    @property
    def log_psi(self):
        return math.log(-math.log1p(-self.p))


class GGammaKernel(MixingKernel):
    """Generalized gamma jumps with discount ``a < 1`` and probability ``p``."""

    def __init__(self, a, p):
        self.a = float(a)
        self.p = float(p)

    def log_moment(self, j):
        j = np.asarray(j, dtype=float)
        return (special.gammaln(j - self.a) - math.lgamma(1 - self.a)
                + (j - self.a) * math.log(self.p))

    @property
    def log_psi(self):
        return _log_psi(self.a, self.p)


def generic_cluster_size_log_pmf(j, kernel):
    """ln P(n_k = j) = ln moment(j) - ln j! - ln psi."""
    j = np.asarray(j, dtype=float)
    out = kernel.log_moment(j) - special.gammaln(j + 1) - kernel.log_psi
    return float(out) if out.ndim == 0 else out


def _generic_cdf(kernel, tail_tol=1e-14, max_support=1 << 24):
    size = 64
    while True:
        pmf = np.exp(generic_cluster_size_log_pmf(np.arange(1, size + 1), kernel))
        cdf = np.cumsum(pmf)
        if 1.0 - cdf[-1] < tail_tol or pmf[-1] == 0.0 or size >= max_support:
            return cdf
        size *= 2


def generic_compound(kernel, gamma0, rng):
    """Compound Poisson draw: ``l ~ Poisson(gamma0 psi)`` clusters, iid sizes."""
    gen = as_stream(rng)
    l = int(gen.poisson(gamma0 * math.exp(kernel.log_psi)))
    if l == 0:
        return ClusterAssignment(np.zeros(0, dtype=np.int64), canonical=True)
    cdf = _generic_cdf(kernel)
    sizes = np.searchsorted(cdf, gen.random(l) * cdf[-1], side="right") + 1
    return ClusterAssignment.from_sizes(np.minimum(sizes, cdf.size))


# ------------------------------------------------------- gNBP likelihoods

def _sum_log_gamma_ratio(sizes, a):
    sizes = np.asarray(sizes, dtype=float)
    if sizes.size == 0:
        return 0.0
    return float(special.gammaln(sizes - a).sum() - sizes.size * math.lgamma(1 - a))


def log_ecpf(assign, params):
    """ln p(z, n | gamma0, a, p), the fully factorized joint of partition and size."""
    n, l = assign.n, assign.l
    g, a, p = params.gamma0, params.a, params.p
    out = -math.lgamma(n + 1) - g * params.psi + (n - a * l) * math.log(p)
    if l:
        out += l * math.log(g) + _sum_log_gamma_ratio(assign.sizes, a)
    return out


def log_eppf(assign, params, cap=None):
    """ln p(z | n, gamma0, a, p), the size-dependent gCRSF."""
    n, l = assign.n, assign.l
    if n == 0:
        return 0.0
    return (l * params.log_new_weight - log_normalizer(n, params, cap=cap)
            + _sum_log_gamma_ratio(assign.sizes, params.a))


def cluster_count_log_pmf_all(n, params, cap=None):
    """``[ln p_L(0 | n), ..., ln p_L(n | n)]``."""
    out = np.full(n + 1, -math.inf)
    if n == 0:
        out[0] = 0.0
        return out
    row = build_s_table(params.a, n, cap=cap).row(n)
    v = row + np.arange(1, n + 1) * params.log_new_weight
    m = v.max()
    out[1:] = v - (m + math.log(np.exp(v - m).sum()))
    return out


def log_cluster_count_pmf(l, n, params, cap=None):
    """ln p_L(l | n): probability that a size-``n`` population has ``l`` clusters."""
    if not 0 <= l <= n:
        return -math.inf
    if n == 0:
        return 0.0
    if l == 0:
        return -math.inf
    table = build_s_table(params.a, n, cap=cap)
    return (l * params.log_new_weight + table[n, l]
            - log_normalizer(n, params, cap=cap))


def log_size_eppf(prefix, n, params, cap=None):
    """ln p(z_{1:i} | n): law of a length-``i`` prefix inside a population of ``n``."""
    i, li = prefix.n, prefix.l
    if not 1 <= i <= n:
        raise ValueError("need 1 <= i <= n")
    r = build_r_table(n, params, cap=cap)
    return (r[i, li] + li * params.log_new_weight
            + _sum_log_gamma_ratio(prefix.sizes, params.a)
            - log_normalizer(n, params, cap=cap))


def log_prefix_cluster_count_pmf(j, i, n, params, cap=None):
    """ln p(l_(i) = j | n): cluster count among the first ``i`` of ``n`` elements."""
    if not 1 <= j <= i <= n:
        return -math.inf
    s = build_s_table(params.a, i, cap=cap)
    r = build_r_table(n, params, cap=cap)
    return (j * params.log_new_weight + s[i, j] + r[i, j]
            - log_normalizer(n, params, cap=cap))


# ------------------------------------------------------------- FoF law

def fof_log_rate(i, params):
    """ln lambda_i, the Poisson rate of the number of clusters of size ``i``."""
    i = np.asarray(i, dtype=float)
    g, a, p = params.gamma0, params.a, params.p
    out = (special.gammaln(i - a) - math.lgamma(1 - a) + math.log(g)
           + (i - a) * math.log(p) - special.gammaln(i + 1))
    return float(out) if out.ndim == 0 else out


def fof_truncation(params, tol=1e-12, i_max=None):
    """Smallest ``i_max`` (at least the one given) with ``sum_{i > i_max} lambda_i < tol``."""
    size = 64
    p = params.p
    while True:
        lam = np.exp(fof_log_rate(np.arange(1, size + 1), params))
        # lambda_{i+1}/lambda_i = p (i - a)/(i + 1) < p beyond the table
        if lam[-1] * p / (1 - p) < tol * 1e-2 or size >= 1 << 26:
            break
        size *= 2
    tails = np.cumsum(lam[::-1])[::-1]  # tails[k] = sum_{i >= k+1} lambda_i
    below = np.nonzero(tails < tol)[0]
    cut = int(below[0]) if below.size else size
    return max(cut, int(i_max or 0))


def simulate_fof_poisson(params, rng, i_max=None, size=None):
    """FoF vector with independent ``m_i ~ Poisson(lambda_i)``, ``i <= i_max``.

    ``i_max`` is extended until the neglected rate mass is below 1e-12.
    With ``size`` a list of independent FoF vectors is returned.
    """
    gen = as_stream(rng)
    top = fof_truncation(params, i_max=i_max)
    lam = np.exp(fof_log_rate(np.arange(1, top + 1), params))
    reps = 1 if size is None else int(size)
    m = gen.poisson(lam, size=(reps, top))
    out = []
    for row in m:
        nz = np.nonzero(row)[0]
        out.append(FoFVector(dict(zip((nz + 1).tolist(), row[nz].tolist()))))
    return out[0] if size is None else out


class _TnbHazard:
    """``q_i = pmf(i) / P(U >= i)`` for the stick-breaking construction.

    The tail ``P(U >= i)`` is tracked as one minus a running prefix sum and
    recomputed by direct summation once it falls below 1e-8.
    """

    def __init__(self, a, p):
        self.a, self.p = a, p
        self.tail = 1.0
        self.i = 1
        self.direct = False

    def _direct_tail(self, i):
        total, block = 0.0, 256
        start = i
        while True:
            pm = np.exp(_tnb_log_pmf_array(np.arange(start, start + block), self.a, self.p))
            total += pm.sum()
            if pm[-1] < 1e-300 or pm[-1] * self.p / (1 - self.p) < total * 1e-17:
                return total
            start += block
            block *= 2

    def next(self):
        i = self.i
        pmf = math.exp(float(_tnb_log_pmf_array(i, self.a, self.p)))
        if self.direct:
            tail = self._direct_tail(i)
        else:
            tail = self.tail
            if tail < 1e-8:
                self.direct = True
                tail = self._direct_tail(i)
        self.tail = tail - pmf
        self.i += 1
        if tail <= 0.0:
            return 1.0
        return min(1.0, pmf / tail)


def simulate_fof_stickbreak(params, rng, size=None):
    """FoF vector by ``l ~ Poisson(gamma0 psi)`` then sequential binomial splits."""
    gen = as_stream(rng)
    reps = 1 if size is None else int(size)
    remaining = gen.poisson(params.gamma0 * params.psi, size=reps).astype(np.int64)
    hazard = _TnbHazard(params.a, params.p)
    counts = [dict() for _ in range(reps)]
    active = np.nonzero(remaining)[0]
    i = 1
    while active.size:
        q = hazard.next()
        m = gen.binomial(remaining[active], q)
        hit = np.nonzero(m)[0]
        for k in hit:
            counts[active[k]][i] = int(m[k])
        remaining[active] -= m
        active = active[remaining[active] > 0]
        i += 1
    out = [FoFVector(c) for c in counts]
    return out[0] if size is None else out


def simulate_compound(params, rng, size=None):
    """Cluster assignment with Poisson-many clusters of iid TNB(a, p) sizes.

    Clusters are laid out as consecutive blocks (``1 1 2 3 3 3 ...``).
    """
    gen = as_stream(rng)
    reps = 1 if size is None else int(size)
    ls = gen.poisson(params.gamma0 * params.psi, size=reps)
    total = int(ls.sum())
    sizes = tnb_sample(params.a, params.p, gen, size=total) if total else np.zeros(0, np.int64)
    out = [ClusterAssignment.from_sizes(s) for s in np.split(sizes, np.cumsum(ls)[:-1])]
    return out[0] if size is None else out


# ------------------------------------------------------- partition samplers

def sequential_rule_probs(prefix, n, params, cap=None):
    """Probabilities for element ``i + 1`` given a length-``i`` prefix.

    Returns an array of length ``l_(i) + 1``: existing clusters in label
    order, then the new cluster.
    """
    i, li = prefix.n, prefix.l
    if not 1 <= i < n:
        raise ValueError("need 1 <= i < n")
    r = build_r_table(n, params, cap=cap)
    base = r[i, li]
    old = (prefix.sizes - params.a) * math.exp(r[i + 1, li] - base)
    new = math.exp(params.log_new_weight + r[i + 1, li + 1] - base)
    return np.append(old, new)


def sequential_sample(n, params, rng, cap=None, size=None):
    """Exact gCRSF(n) draw(s) via the R-ratio sequential prediction rule."""
    gen = as_stream(rng)
    if n < 1:
        raise ValueError("n must be >= 1")
    r = build_r_table(n, params, cap=cap)
    reps = 1 if size is None else int(size)
    out = []
    z = np.empty(n, dtype=np.int64)
    for _ in range(reps):
        u = gen.random(n)
        _kernels.rratio_sample(r.entries, n, params.a, params.log_new_weight, u, z)
        out.append(ClusterAssignment(z.copy(), canonical=True))
    return out[0] if size is None else out


def simulate_pitman_yor(n, params, rng, size=None):
    """Pitman-Yor (CRP at ``a = 0``) partitions of ``n`` by the prediction rule.

    Element ``i + 1`` joins cluster ``k`` w.p. ``(n_k - a) / (i + gamma0)``
    and opens a new one w.p. ``(gamma0 + a l) / (i + gamma0)``.
    """
    gen = as_stream(rng)
    if n < 1:
        raise ValueError("n must be >= 1")
    reps = 1 if size is None else int(size)
    out = []
    for _ in range(reps):
        z = np.zeros(n, dtype=np.int64)
        _kernels.sequential_fill(z, 0, params.a, params.gamma0, params.a, gen.random(n))
        out.append(ClusterAssignment(z, canonical=True))
    return out[0] if size is None else out


def gibbs_weights(sizes_without, params):
    """Normalized full conditional for one element given the others' cluster sizes."""
    w = np.append(np.asarray(sizes_without, dtype=float) - params.a,
                  math.exp(params.log_new_weight))
    return w / w.sum()


def _sweep_inplace(z, frozen, a, c0, c1, n_sweeps, gen):
    n = z.size
    m = n - frozen
    if m <= 0:
        return int(z.max()) if n else 0
    orders = np.empty((n_sweeps, m), dtype=np.int64)
    for t in range(n_sweeps):
        orders[t] = frozen + gen.permutation(m)
    u = gen.random((n_sweeps, m))
    return _kernels.gibbs_sweeps(z, frozen, a, c0, c1, orders, u)


def gibbs_sweep(assign, params, frozen_prefix, rng):
    """One random-order Gibbs sweep over ``z[frozen_prefix:]`` under the gCRSF.

    Uses the proportional rule ``n_k - a`` (existing) vs ``gamma0 p^-a`` (new);
    the EPPF normalizer cancels, so no table is needed at any ``n``.
    """
    if not 0 <= frozen_prefix <= assign.n:
        raise ValueError("frozen_prefix out of range")
    gen = as_stream(rng)
    z = assign.labels.copy()
    _sweep_inplace(z, frozen_prefix, params.a, math.exp(params.log_new_weight), 0.0, 1, gen)
    return ClusterAssignment(z, canonical=True)


def log_completion_density(assign, observed_prefix, params, cap=None):
    """ln p(z_{i+1:n} | z_{1:i}, n) for ``i = observed_prefix``."""
    n, i = assign.n, int(observed_prefix)
    if not 0 <= i <= n:
        raise ValueError("need 0 <= i <= n")
    if i == n:
        return 0.0
    if i == 0:
        return log_eppf(assign, params, cap=cap)
    a = params.a
    labels = assign.labels
    li = int(labels[:i].max())
    sizes_n = assign.sizes
    sizes_i = np.bincount(labels[:i], minlength=li + 1)[1:]
    r = build_r_table(n, params, cap=cap)
    old = special.gammaln(sizes_n[:li] - a).sum() - special.gammaln(sizes_i - a).sum()
    new = _sum_log_gamma_ratio(sizes_n[li:], a)
    return float((assign.l - li) * params.log_new_weight - r[i, li] + old + new)

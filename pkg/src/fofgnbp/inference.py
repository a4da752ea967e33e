"""MCMC parameter samplers for the gNBP, Pitman-Yor and CRP models.

gNBP updates use the fully factorized ECPF as likelihood:

* ``gamma0``: conjugate gamma update,
* ``a``: griddy Gibbs on ``a~ = 1/(2 - a)`` over ``0.0001, ..., 0.9999``,
* ``p``: beta update at ``a = 0``, griddy Gibbs on ``p`` otherwise.

Pitman-Yor (and CRP, its ``a = 0`` case) use the auxiliary-variable scheme
of Teh (2006). Every sampler accepts an ``exposure``: the number of
independent replicate populations pooled into the data, which multiplies
the total mass of the mixing measure.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import special

from .numerics import log_psi
from .params import GnbpParams, PyParams
from .partitions import ClusterAssignment, FoFVector
from .rng import as_stream

__all__ = [
    "McmcConfig",
    "McmcTrace",
    "SuffStats",
    "a_grid",
    "a_grid_log_mass",
    "p_grid_log_mass",
    "sample_gamma0",
    "sample_a_griddy",
    "sample_p",
    "gnbp_step",
    "fit_gnbp",
    "py_log_eppf",
    "pitman_yor_step",
    "fit_pitman_yor",
    "fit_crp",
    "parse_a_mode",
]


@dataclass
class McmcConfig:
    iterations: int = 1000
    burn_in: int = 500
    inner_sweeps: int = 5
    e0: float = 0.01
    f0: float = 0.01
    grid_step: float = 1e-4
    seed: int = 0
    # parameter-only iterations on the observed sample before extrapolating
    init_iterations: int = 50

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.inner_sweeps < 1:
            raise ValueError("inner_sweeps must be >= 1")
        if not (self.e0 > 0 and self.f0 > 0):
            raise ValueError("e0 and f0 must be positive")
        if not 0 < self.grid_step < 0.5:
            raise ValueError("grid_step must lie in (0, 0.5)")

    @property
    def grid(self):
        """Interior grid ``step, 2 step, ..., 1 - step``."""
        k = int(round(1.0 / self.grid_step))
        return np.arange(1, k) / k


@dataclass
class McmcTrace:
    """Per-iteration parameter draws; ``p`` is NaN for models without one."""

    gamma0: np.ndarray
    a: np.ndarray
    p: np.ndarray
    l: np.ndarray
    log_ecpf: np.ndarray
    fofs: list = field(default_factory=list)
    assignments: list = field(default_factory=list)

    @classmethod
    def empty(cls, iterations):
        nan = np.full(iterations, np.nan)
        return cls(nan.copy(), nan.copy(), nan.copy(),
                   np.zeros(iterations, dtype=np.int64), nan.copy())

    def __len__(self):
        return self.gamma0.size

    def record(self, it, gamma0, a, p, l, log_lik):
        self.gamma0[it] = gamma0
        self.a[it] = a
        self.p[it] = p
        self.l[it] = l
        self.log_ecpf[it] = log_lik

    def posterior_means(self, burn_in):
        sl = slice(burn_in, None)
        return {
            "gamma0": float(np.mean(self.gamma0[sl])),
            "a": float(np.mean(self.a[sl])),
            "p": float(np.mean(self.p[sl])) if not np.all(np.isnan(self.p)) else math.nan,
            "l": float(np.mean(self.l[sl])),
        }


@dataclass(frozen=True)
class SuffStats:
    """Size-only summary of a partition: ``n``, ``l`` and its FoF entries."""

    n: int
    l: int
    sizes: np.ndarray  # distinct cluster sizes, ascending
    mult: np.ndarray   # number of clusters of each size

    @classmethod
    def of(cls, data):
        if isinstance(data, SuffStats):
            return data
        if isinstance(data, ClusterAssignment):
            cl = data.sizes
        elif isinstance(data, FoFVector):
            cl = data.sizes()
        else:
            cl = np.asarray(data, dtype=np.int64)
        if cl.size == 0:
            e = np.zeros(0, dtype=np.int64)
            return cls(0, 0, e, e)
        sizes, mult = np.unique(cl, return_counts=True)
        return cls(int(cl.sum()), int(cl.size), sizes.astype(np.int64), mult.astype(np.int64))

    @classmethod
    def from_cluster_sizes(cls, cl):
        counts = np.bincount(cl)
        sizes = np.nonzero(counts)[0]
        return cls(int(cl.sum()), int(cl.size), sizes.astype(np.int64), counts[sizes])

    def log_gamma_sum(self, a):
        """sum_k [ln Gamma(n_k - a) - ln Gamma(1 - a)]."""
        if self.l == 0:
            return 0.0
        return float((self.mult * special.gammaln(self.sizes - a)).sum()
                     - self.l * math.lgamma(1 - a))


def _draw_from_log_mass(logw, u):
    m = np.max(logw)
    w = np.exp(logw - m)
    c = np.cumsum(w)
    return int(min(np.searchsorted(c, u * c[-1], side="right"), c.size - 1))


# ------------------------------------------------------------------ gNBP

def parse_a_mode(mode):
    """``"free"``, ``"negative"``, a number, or ``"fixed=V"`` -> mode object."""
    if isinstance(mode, (int, float)):
        return float(mode)
    if mode in ("free", "negative"):
        return mode
    if isinstance(mode, str) and mode.startswith("fixed="):
        return float(mode.split("=", 1)[1])
    try:
        return float(mode)
    except (TypeError, ValueError):
        raise ValueError(f"unknown a-mode {mode!r}") from None


def a_grid(cfg, mode="free"):
    """Discount values on the ``a~ = 1/(2 - a)`` grid for a griddy mode."""
    g = cfg.grid
    if mode == "negative":
        g = g[g < 0.5]
    elif mode != "free":
        raise ValueError("a_grid only applies to 'free' or 'negative' modes")
    return 2.0 - 1.0 / g


@njit(cache=True)
def _grid_log_gamma_sum(a_vals, sizes, mult):
    """sum_k [ln Gamma(n_k - a) - ln Gamma(1 - a)] for each grid value of a."""
    out = np.zeros(a_vals.size)
    small = 0
    while small < sizes.size and sizes[small] <= 64:
        small += 1
    top = sizes[small - 1] if small > 0 else 1
    # c[j] = clusters among the small ones with size > j
    c = np.zeros(top + 1)
    for k in range(small):
        for j in range(1, sizes[k]):
            c[j] += mult[k]
    nbig = 0.0
    for k in range(small, sizes.size):
        nbig += mult[k]
    for g in range(a_vals.size):
        a = a_vals[g]
        acc = 0.0
        for j in range(1, top):
            if c[j] > 0:
                acc += c[j] * math.log(j - a)
        if nbig > 0:
            lg1 = math.lgamma(1.0 - a)
            for k in range(small, sizes.size):
                acc += mult[k] * (math.lgamma(sizes[k] - a) - lg1)
        out[g] = acc
    return out


def a_grid_log_mass(stats, params, a_vals, exposure=1.0):
    """Unnormalized ln P(a | rest) at each value in ``a_vals``."""
    g, p = params.gamma0, params.p
    with np.errstate(over="ignore"):
        expo = exposure * g * np.exp(log_psi(a_vals, p))
    out = -expo - a_vals * stats.l * math.log(p)
    if stats.l:
        out = out + _grid_log_gamma_sum(a_vals, stats.sizes, stats.mult)
    return out


def p_grid_log_mass(stats, params, p_vals, exposure=1.0):
    """Unnormalized ln P(p | rest) at each value in ``p_vals``."""
    g, a = params.gamma0, params.a
    with np.errstate(over="ignore"):
        expo = exposure * g * np.exp(log_psi(a, p_vals))
    return -expo + (stats.n - a * stats.l) * np.log(p_vals)


def sample_gamma0(l, params, cfg, rng, exposure=1.0):
    """gamma0 | rest ~ Gamma(e0 + l, 1 / (f0 + exposure * psi(a, p)))."""
    gen = as_stream(rng)
    rate = cfg.f0 + exposure * params.psi
    return float(gen.gamma(cfg.e0 + l, 1.0 / rate))


def sample_a_griddy(data, params, cfg, rng, mode="free", exposure=1.0):
    """Griddy-Gibbs draw of the discount under a uniform prior on ``a~``."""
    gen = as_stream(rng)
    stats = SuffStats.of(data)
    a_vals = a_grid(cfg, mode)
    logw = a_grid_log_mass(stats, params, a_vals, exposure)
    return float(a_vals[_draw_from_log_mass(logw, gen.random())])


def sample_p(data, params, cfg, rng, exposure=1.0):
    """p | rest: Beta(1 + n, 1 + gamma0) at ``a = 0``, griddy Gibbs otherwise."""
    gen = as_stream(rng)
    stats = SuffStats.of(data)
    if params.a == 0.0:
        return float(gen.beta(1.0 + stats.n, 1.0 + exposure * params.gamma0))
    p_vals = cfg.grid
    logw = p_grid_log_mass(stats, params, p_vals, exposure)
    return float(p_vals[_draw_from_log_mass(logw, gen.random())])


def _log_ecpf_stats(stats, params, exposure=1.0):
    g, a, p = params.gamma0, params.a, params.p
    out = (-math.lgamma(stats.n + 1) - exposure * g * params.psi
           + (stats.n - a * stats.l) * math.log(p))
    if stats.l:
        out += stats.l * math.log(g) + stats.log_gamma_sum(a)
    return out


def gnbp_step(stats, params, cfg, gen, mode="free", exposure=1.0):
    """One gamma0 -> a -> p cycle; returns the new parameters."""
    g = sample_gamma0(stats.l, params, cfg, gen, exposure)
    g = max(g, 1e-300)
    params = GnbpParams(g, params.a, params.p)
    if mode in ("free", "negative"):
        params = GnbpParams(g, sample_a_griddy(stats, params, cfg, gen, mode, exposure), params.p)
    p = sample_p(stats, params, cfg, gen, exposure)
    return GnbpParams(g, params.a, p)


def default_gnbp_init(stats, mode):
    a0 = mode if isinstance(mode, float) else (-0.5 if mode == "negative" else 0.0)
    g0 = max(float(stats.l), 1.0)
    p0 = min(max(stats.n / (stats.n + g0 + 1.0), 0.01), 0.99)
    return GnbpParams(g0, a0, p0)


def fit_gnbp(data, cfg, mode="free", rng=None, init=None, exposure=1.0):
    """Run ``cfg.iterations`` gNBP parameter updates on a fixed partition."""
    mode = parse_a_mode(mode)
    stats = SuffStats.of(data)
    if stats.n == 0:
        raise ValueError("cannot fit an empty partition")
    gen = as_stream(cfg.seed if rng is None else rng)
    params = init or default_gnbp_init(stats, mode)
    if isinstance(mode, float) and params.a != mode:
        params = GnbpParams(params.gamma0, mode, params.p)
    trace = McmcTrace.empty(cfg.iterations)
    for it in range(cfg.iterations):
        params = gnbp_step(stats, params, cfg, gen, mode, exposure)
        trace.record(it, params.gamma0, params.a, params.p, stats.l,
                     _log_ecpf_stats(stats, params, exposure))
    return trace


# ------------------------------------------------------------ Pitman-Yor

def py_log_eppf(data, params):
    """ln P(z | gamma0, a) of the Pitman-Yor EPPF."""
    stats = SuffStats.of(data)
    g, a = params.gamma0, params.a
    if stats.n == 0:
        return 0.0
    k = np.arange(stats.l)
    return float(math.lgamma(g) - math.lgamma(stats.n + g) + stats.log_gamma_sum(a)
                 + np.log(g + k * a).sum())


def _count_b_zeros(stats, a, gen):
    """sum_k sum_{j=2}^{n_k - 1} (1 - b_kj), b_kj ~ Bernoulli((j-1)/(j-a)).

    Grouped by ``j``: ``c_j`` clusters have size > j, and the zeros at level
    ``j`` are Binomial(c_j, (1-a)/(j-a)).
    """
    top = int(stats.sizes[-1]) if stats.l else 0
    if top < 3:
        return 0
    dense = np.zeros(top + 1, dtype=np.int64)
    dense[stats.sizes] = stats.mult
    above = np.cumsum(dense[::-1])[::-1]  # above[j] = clusters with size >= j
    j = np.arange(2, top)
    c_j = above[j + 1]
    return int(gen.binomial(c_j, (1.0 - a) / (j - a)).sum())


def pitman_yor_step(stats, params, cfg, gen, fix_a=None):
    """One auxiliary-variable update of ``(gamma0, a)``.

    ``x ~ Beta(n - 1, gamma0 + 1)`` enters the gamma0 rate as ``-ln(1 - x)``;
    for ``n = 1`` the likelihood is flat and gamma0 is drawn from its prior.
    The discount's beta update counts one ``(1 - a)`` factor per cluster of
    size at least two.
    """
    g, a = params.gamma0, params.a
    n, l = stats.n, stats.l
    rate = cfg.f0
    if n >= 2:
        x = gen.beta(n - 1.0, g + 1.0)
        rate -= math.log1p(-x) if x < 1.0 else -745.0
    k = np.arange(1, l)
    y = gen.random(k.size) < g / (g + k * a)
    sum_y = int(y.sum())
    if fix_a is None:
        zeros_b = _count_b_zeros(stats, a, gen)
    new_g = max(float(gen.gamma(cfg.e0 + sum_y, 1.0 / rate)), 1e-300)
    if fix_a is not None:
        return PyParams(new_g, fix_a)
    multi = l - int(stats.mult[0]) if l and stats.sizes[0] == 1 else l
    new_a = float(gen.beta(1.0 + (k.size - sum_y), 1.0 + multi + zeros_b))
    return PyParams(new_g, min(new_a, 1.0 - 1e-12))


def fit_pitman_yor(data, cfg, rng=None, init=None, fix_a=None):
    """Run ``cfg.iterations`` Pitman-Yor parameter updates on a fixed partition."""
    stats = SuffStats.of(data)
    if stats.n == 0:
        raise ValueError("cannot fit an empty partition")
    gen = as_stream(cfg.seed if rng is None else rng)
    params = init or PyParams(1.0, 0.0 if fix_a is not None else 0.5)
    if fix_a is not None:
        params = PyParams(params.gamma0, fix_a)
    trace = McmcTrace.empty(cfg.iterations)
    for it in range(cfg.iterations):
        params = pitman_yor_step(stats, params, cfg, gen, fix_a)
        trace.record(it, params.gamma0, params.a, math.nan, stats.l,
                     py_log_eppf(stats, params))
    return trace


def fit_crp(data, cfg, rng=None, init=None):
    """Chinese restaurant process: Pitman-Yor with the discount pinned at 0."""
    return fit_pitman_yor(data, cfg, rng=rng, init=init, fix_a=0.0)

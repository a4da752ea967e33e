"""Count distributions of the generalized negative binomial process.

* ``gNB(gamma0, a, p)``: law of the population size ``n``.
* ``TNB(a, p)``: law of a single cluster size on ``{1, 2, ...}``; the
  logarithmic distribution at ``a = 0``.
* Large-``n`` limit laws for the number of clusters and the FoF entries.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .numerics import log_psi
from .params import GnbpParams
from .recursions import build_s_table, log_normalizer
from .rng import as_stream

__all__ = [
    "GnbpParams",
    "gnb_log_pmf",
    "gnb_log_pmf_range",
    "tnb_log_pmf",
    "TnbSampler",
    "tnb_sample",
    "AsymptoticLaw",
    "asymptotic_law",
]


def gnb_log_pmf(n, params, cap=None):
    """ln p_N(n | gamma0, a, p).

    ``a = 0`` is the negative binomial NB(gamma0, p) in closed form; other
    discounts go through the recursion normalizer and obey its size cap.
    """
    n = int(n)
    if n < 0:
        return -math.inf
    g, a, p = params.gamma0, params.a, params.p
    if a == 0.0:
        return (math.lgamma(n + g) - math.lgamma(g) - math.lgamma(n + 1)
                + n * math.log(p) + g * math.log1p(-p))
    return (n * math.log(p) - g * params.psi + log_normalizer(n, params, cap=cap)
            - math.lgamma(n + 1))


def gnb_log_pmf_range(n_max, params, cap=None):
    """``[ln p_N(0), ..., ln p_N(n_max)]`` from a single S table."""
    g, a, p = params.gamma0, params.a, params.p
    ns = np.arange(n_max + 1)
    if a == 0.0:
        return (special.gammaln(ns + g) - math.lgamma(g) - special.gammaln(ns + 1)
                + ns * math.log(p) + g * math.log1p(-p))
    out = np.empty(n_max + 1)
    out[0] = -g * params.psi
    if n_max:
        table = build_s_table(a, n_max, cap=cap)
        for n in range(1, n_max + 1):
            out[n] = (n * math.log(p) - g * params.psi
                      + table.log_weighted_sum(n, params) - math.lgamma(n + 1))
    return out


def _tnb_log_pmf_array(u, a, p):
    u = np.asarray(u, dtype=float)
    log_norm = log_psi(a, p) + a * math.log(p)  # ln[(1 - (1-p)^a) / a]
    return (special.gammaln(u - a) - math.lgamma(1.0 - a) + u * math.log(p)
            - special.gammaln(u + 1.0) - log_norm)


def tnb_log_pmf(u, a, p):
    """ln p_U(u | a, p) of the truncated NB law on ``u >= 1``.

    Written as ``Gamma(u-a) p^u / (u! Gamma(1-a)) / [(1-(1-p)^a)/a]``, which is
    the logarithmic distribution ``p^u / (u (-ln(1-p)))`` at ``a = 0``.
    """
    if np.ndim(u) == 0:
        if int(u) != u or u < 1:
            raise ValueError("TNB support is u = 1, 2, ...")
        return float(_tnb_log_pmf_array(u, a, p))
    u = np.asarray(u)
    if np.any(u < 1):
        raise ValueError("TNB support is u = 1, 2, ...")
    return _tnb_log_pmf_array(u, a, p)


class TnbSampler:
    """Inverse-CDF sampler for TNB(a, p) with a lazily extended CDF table.

    The table grows by doubling until the uncovered tail mass drops below
    ``tail_tol``; uniforms beyond the table are rescaled onto it.
    """

    def __init__(self, a, p, tail_tol=1e-14, max_support=1 << 26):
        if not a < 1 or not 0 < p < 1:
            raise ValueError("need a < 1 and 0 < p < 1")
        self.a = float(a)
        self.p = float(p)
        self.tail_tol = tail_tol
        self.max_support = max_support
        self._cdf = np.zeros(0)
        self._complete = False
        self._extend(64)

    def _extend(self, size):
        size = min(size, self.max_support)
        start = self._cdf.size + 1
        if size < start:
            self._complete = True
            return
        pmf = np.exp(_tnb_log_pmf_array(np.arange(start, size + 1), self.a, self.p))
        base = self._cdf[-1] if self._cdf.size else 0.0
        self._cdf = np.concatenate([self._cdf, base + np.cumsum(pmf)])
        if 1.0 - self._cdf[-1] < self.tail_tol or pmf[-1] == 0.0 or size >= self.max_support:
            self._complete = True

    @property
    def cdf(self):
        return self._cdf

    def sample(self, rng, size=None):
        gen = as_stream(rng)
        u = gen.random(size)
        top = np.max(u)
        while not self._complete and top >= self._cdf[-1]:
            self._extend(2 * self._cdf.size)
        if self._complete:
            u = u * self._cdf[-1]
        idx = np.searchsorted(self._cdf, u, side="right") + 1
        idx = np.minimum(idx, self._cdf.size)
        return int(idx) if size is None else idx.astype(np.int64)


_SAMPLERS = {}


def _sampler(a, p):
    key = (float(a), float(p))
    s = _SAMPLERS.get(key)
    if s is None:
        if len(_SAMPLERS) > 64:
            _SAMPLERS.clear()
        s = _SAMPLERS[key] = TnbSampler(a, p)
    return s


def tnb_sample(a, p, rng, size=None):
    """Draw from TNB(a, p); reuses a cached CDF table per ``(a, p)``."""
    return _sampler(a, p).sample(rng, size)


@dataclass(frozen=True)
class AsymptoticLaw:
    """Large-n limit of a cluster statistic.

    ``kind`` is ``"poisson"`` (``shift + Poisson(rate)``) or ``"scaling"``
    (``statistic / scale(n) -> constant``).
    """

    kind: str
    rate: float = math.nan
    shift: int = 0
    constant: float = math.nan
    exponent: float = math.nan
    log_scale: bool = False

    def pmf(self, k):
        if self.kind != "poisson":
            raise ValueError("pmf only defined for Poisson limits")
        return stats.poisson.pmf(np.asarray(k) - self.shift, self.rate)

    def scale(self, n):
        if self.kind != "scaling":
            raise ValueError("scale only defined for scaling limits")
        return math.log(n) if self.log_scale else n ** self.exponent


def asymptotic_law(params, which, i=None):
    """Limit law for ``which`` in ``{"cluster_count", "cluster_of_size"}``.

    Covers ``a`` in ``(0, 1)``, ``a = 0`` and negative integer ``a``; any other
    discount raises ``ValueError``.
    """
    g, a, p = params.gamma0, params.a, params.p
    negint = a < 0 and float(a).is_integer()
    if not (0 < a < 1 or a == 0 or negint):
        raise ValueError(f"no large-n limit tabulated for a = {a}")
    if which == "cluster_count":
        if a > 0:
            return AsymptoticLaw("poisson", rate=g / (a * p ** a), shift=1)
        if a == 0:
            return AsymptoticLaw("scaling", constant=g, log_scale=True)
        return AsymptoticLaw("scaling", constant=(g * p ** (-a)) ** (1 / (1 - a)) / (-a),
                             exponent=-a / (1 - a))
    if which == "cluster_of_size":
        if i is None or i < 1:
            raise ValueError("cluster_of_size needs a size i >= 1")
        if a == 0:
            return AsymptoticLaw("poisson", rate=g / i)
        lrate = (math.lgamma(i - a) - math.lgamma(1 - a) - math.lgamma(i + 1)
                 + math.log(g) - a * math.log(p))
        return AsymptoticLaw("poisson", rate=math.exp(lrate))
    raise ValueError(f"unknown statistic {which!r}")

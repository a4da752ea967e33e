"""Power-law tail fit, the least-squares refit baseline, and FoF error metrics."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .numerics import hurwitz_zeta, hurwitz_zeta_dalpha

__all__ = [
    "PowerLawFit",
    "DegenerateTailError",
    "powerlaw_log_lik",
    "powerlaw_score",
    "fit_alpha",
    "fit_powerlaw_tail",
    "LsRefit",
    "ls_refit_baseline",
    "rmse",
    "chi_squared",
    "fit_report",
    "plot_rows",
]

ALPHA_BOUNDS = (1.01, 6.0)
RMSE_MAX_SIZE = 100
CHI2_TAIL = 50


class DegenerateTailError(ValueError):
    """Fewer than two distinct sizes available for the tail fit."""


@dataclass(frozen=True)
class PowerLawFit:
    i_min: int
    alpha: float
    alpha_h: float
    head_intercept: float = math.nan
    tail_intercept: float = math.nan
    ks_distance: float = math.nan


def _arrays(fof):
    if hasattr(fof, "items"):
        items = sorted((int(k), float(v)) for k, v in fof.items() if v > 0)
    else:
        arr = np.asarray(fof, dtype=float)
        items = [(int(k), float(v)) for k, v in enumerate(arr) if k > 0 and v > 0]
    if not items:
        return np.zeros(0, np.int64), np.zeros(0)
    i, m = zip(*items)
    return np.array(i, dtype=np.int64), np.array(m, dtype=float)


def powerlaw_log_lik(alpha, sizes, counts, i_min):
    """L(alpha) = -sum_{i >= i_min} m_i [ln zeta(alpha, i_min) + alpha ln i]."""
    sel = sizes >= i_min
    m, i = counts[sel], sizes[sel]
    return float(-(m.sum() * math.log(hurwitz_zeta(alpha, i_min)) + alpha * (m * np.log(i)).sum()))


def powerlaw_score(alpha, sizes, counts, i_min):
    """dL/dalpha."""
    sel = sizes >= i_min
    m, i = counts[sel], sizes[sel]
    z = hurwitz_zeta(alpha, i_min)
    return float(-(m.sum() * hurwitz_zeta_dalpha(alpha, i_min) / z + (m * np.log(i)).sum()))


def fit_alpha(sizes, counts, i_min):
    """Maximize L(alpha) on ``(1.01, 6)``.

    L is concave in alpha, so the maximizer is the root of the score when it
    changes sign on the interval and the nearer bound otherwise.
    """
    lo, hi = ALPHA_BOUNDS
    s_lo = powerlaw_score(lo, sizes, counts, i_min)
    s_hi = powerlaw_score(hi, sizes, counts, i_min)
    if s_lo <= 0:
        return lo
    if s_hi >= 0:
        return hi
    return float(optimize.brentq(powerlaw_score, lo, hi, args=(sizes, counts, i_min),
                                 xtol=1e-14, rtol=1e-15))


def _ks_distance(sizes, counts, i_min, alpha):
    sel = sizes >= i_min
    i, m = sizes[sel], counts[sel]
    emp = np.cumsum(m) / m.sum()
    # model CDF at each observed size: 1 - zeta(alpha, i + 1) / zeta(alpha, i_min)
    model = 1.0 - hurwitz_zeta(alpha, i + 1.0) / hurwitz_zeta(alpha, i_min)
    emp_before = np.concatenate(([0.0], emp[:-1]))
    model_before = 1.0 - hurwitz_zeta(alpha, i.astype(float)) / hurwitz_zeta(alpha, i_min)
    return float(max(np.abs(emp - model).max(), np.abs(emp_before - model_before).max()))


def _ols(x, y):
    if x.size < 2 or np.ptp(x) == 0:
        return math.nan, math.nan
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_powerlaw_tail(fof):
    """Discrete power-law tail fit with a KS-selected lower cutoff.

    For each candidate ``i_min`` leaving at least two distinct tail sizes,
    alpha maximizes the zeta likelihood; the cutoff with the smallest KS
    distance wins. ``alpha_h`` is minus the OLS slope of ``ln m_i`` on
    ``ln i`` over the head ``i < i_min``; it is NaN when the head has fewer
    than two points.
    """
    sizes, counts = _arrays(fof)
    if sizes.size < 2:
        raise DegenerateTailError("need at least two distinct sizes for a tail fit")
    best = None
    for i_min in sizes[:-1]:
        alpha = fit_alpha(sizes, counts, int(i_min))
        ks = _ks_distance(sizes, counts, int(i_min), alpha)
        if best is None or ks < best[2]:
            best = (int(i_min), alpha, ks)
    i_min, alpha, ks = best
    head = sizes < i_min
    slope_h, icpt_h = _ols(np.log(sizes[head]), np.log(counts[head]))
    tail = sizes >= i_min
    icpt_t = float(np.mean(np.log(counts[tail]) + alpha * np.log(sizes[tail])))
    return PowerLawFit(i_min, alpha, -slope_h, icpt_h, icpt_t, ks)


@dataclass(frozen=True)
class LsRefit:
    """Piecewise log-linear predictor; ``single_line`` flags the fallback."""

    fit: PowerLawFit
    head_intercept: float
    tail_intercept: float
    single_line: bool = False

    def predict(self, i):
        i = np.asarray(i, dtype=float)
        li = np.log(i)
        tail = self.tail_intercept - self.fit.alpha * li
        if self.single_line:
            return np.exp(tail)
        head = self.head_intercept - self.fit.alpha_h * li
        return np.exp(np.where(i < self.fit.i_min, head, tail))

    def as_dict(self, max_size):
        i = np.arange(1, max_size + 1)
        return dict(zip(i.tolist(), self.predict(i).tolist()))


def ls_refit_baseline(sample_fof, population_fof, fit=None):
    """Refit the sample's power-law shape to the population's intercepts.

    Slopes ``-alpha_h`` (head) and ``-alpha`` (tail) come from the sample;
    each intercept is the mean of ``ln m_i + slope_abs * ln i`` over the
    population sizes ``i < i_min`` with ``m_i >= 1`` (head) and ``i >= i_min``
    with ``m_i >= 3`` (tail). If either set is empty, or the head slope is
    undefined, a single tail line is fitted over all usable sizes.
    """
    fit = fit or fit_powerlaw_tail(sample_fof)
    sizes, counts = _arrays(population_fof)
    if sizes.size == 0:
        raise ValueError("population FoF is empty")
    ln_i, ln_m = np.log(sizes), np.log(counts)
    head = (sizes < fit.i_min) & (counts >= 1)
    tail = (sizes >= fit.i_min) & (counts >= 3)
    if head.any() and tail.any() and not math.isnan(fit.alpha_h):
        return LsRefit(fit,
                       float(np.mean(ln_m[head] + fit.alpha_h * ln_i[head])),
                       float(np.mean(ln_m[tail] + fit.alpha * ln_i[tail])))
    usable = counts >= 1
    return LsRefit(fit, math.nan, float(np.mean(ln_m[usable] + fit.alpha * ln_i[usable])),
                   single_line=True)


def _dense(fof, length):
    out = np.zeros(length + 1)
    if hasattr(fof, "items"):
        for k, v in fof.items():
            if 1 <= int(k) <= length:
                out[int(k)] = float(v)
    else:
        arr = np.asarray(fof, dtype=float)[:length + 1]
        out[:arr.size] = arr
        out[0] = 0.0
    return out


def rmse(pop, pred):
    """Root mean squared log error over sizes ``1..100`` with ``m_i > 0``."""
    m = _dense(pop, RMSE_MAX_SIZE)[1:]
    mh = _dense(pred, RMSE_MAX_SIZE)[1:]
    sel = m > 0
    if not sel.any():
        return 0.0
    d = np.log(m[sel]) - np.log(np.maximum(mh[sel], 1e-12))
    return float(math.sqrt(np.mean(d * d)))


def _tail_sum(fof):
    if hasattr(fof, "items"):
        return float(sum(v for k, v in fof.items() if int(k) >= CHI2_TAIL))
    arr = np.asarray(fof, dtype=float)
    return float(arr[CHI2_TAIL:].sum())


def chi_squared(pop, pred):
    """Chi-squared statistic with sizes ``>= 50`` pooled into one bucket."""
    m = _dense(pop, CHI2_TAIL - 1)[1:]
    mh = _dense(pred, CHI2_TAIL - 1)[1:]
    head = float(((m - mh) ** 2 / np.maximum(mh, 1e-8)).sum())
    t, th = _tail_sum(pop), _tail_sum(pred)
    tail = 0.0 if t == th == 0 else (t - th) ** 2 / max(th, 1e-8)
    return head + tail


def fit_report(fit):
    """key: value text block for a power-law fit."""
    rows = [("i_min", fit.i_min), ("alpha", fit.alpha), ("alpha_h", fit.alpha_h),
            ("head_intercept", fit.head_intercept), ("tail_intercept", fit.tail_intercept),
            ("ks_distance", fit.ks_distance)]
    return "".join(f"{k}: {v:.10g}\n" if isinstance(v, float) else f"{k}: {v}\n"
                   for k, v in rows)


def plot_rows(fof, fit):
    """(ln i, ln m_i, fitted head, fitted tail) for each positive FoF entry."""
    sizes, counts = _arrays(fof)
    ln_i = np.log(sizes)
    head = fit.head_intercept - fit.alpha_h * ln_i
    tail = fit.tail_intercept - fit.alpha * ln_i
    return list(zip(ln_i.tolist(), np.log(counts).tolist(), head.tolist(), tail.tolist()))

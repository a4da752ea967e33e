"""Special functions and log-space primitives.

Zero is represented in log space as ``-inf`` throughout the package.
"""
import math

import numpy as np
from scipy import special

__all__ = [
    "log_gamma",
    "log_sum_exp",
    "log_factorial",
    "hurwitz_zeta",
    "hurwitz_zeta_dalpha",
    "log_psi",
    "psi",
]

# Euler-Maclaurin closes the sum after this many explicit terms.
_N_DIRECT = 64
# B_{2j} / (2j)!  for j = 1..8
_B2J_OVER_FACT = np.array([
    1.0 / 6 / 2,
    -1.0 / 30 / 24,
    1.0 / 42 / 720,
    -1.0 / 30 / 40320,
    5.0 / 66 / 3628800,
    -691.0 / 2730 / 479001600,
    7.0 / 6 / 87178291200,
    -3617.0 / 510 / 20922789888000,
])


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``.

    Accepts scalars or arrays; raises ``ValueError`` outside the domain.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("log_gamma requires x > 0")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_factorial(n):
    """ln n! for nonnegative integers (scalar or array)."""
    return special.gammaln(np.asarray(n, dtype=float) + 1.0)


def log_sum_exp(values):
    """ln(sum(exp(values))), with an empty input giving ``-inf``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return -math.inf
    m = v.max()
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    return float(m + math.log(np.exp(v - m).sum()))


def _em_terms(alpha, x):
    # tail sum_{k>=0} (x+k)^-alpha by Euler-Maclaurin at x = q + N
    tail = x ** (1.0 - alpha) / (alpha - 1.0) + 0.5 * x ** (-alpha)
    rising = alpha
    xpow = x ** (-alpha - 1.0)
    for j, coef in enumerate(_B2J_OVER_FACT):
        tail = tail + coef * rising * xpow
        rising = rising * (alpha + 2 * j + 1) * (alpha + 2 * j + 2)
        xpow = xpow / (x * x)
    return tail


def hurwitz_zeta(alpha, q):
    """Hurwitz zeta function ``sum_{j>=0} (q + j)^-alpha``.

    Sums the first 64 terms directly and closes with an Euler-Maclaurin
    correction. ``q`` may be an array; ``alpha`` must be a scalar > 1.
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise ValueError("hurwitz_zeta requires alpha > 1")
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 1.0):
        raise ValueError("hurwitz_zeta requires q >= 1")
    k = np.arange(_N_DIRECT, dtype=float)
    head = ((q_arr[..., None] + k) ** (-alpha)).sum(axis=-1)
    out = head + _em_terms(alpha, q_arr + _N_DIRECT)
    return float(out) if out.ndim == 0 else out


def hurwitz_zeta_dalpha(alpha, q):
    """Derivative of :func:`hurwitz_zeta` with respect to ``alpha``."""
    alpha = float(alpha)
    if not alpha > 1.0:
        raise ValueError("hurwitz_zeta_dalpha requires alpha > 1")
    q_arr = np.asarray(q, dtype=float)
    k = np.arange(_N_DIRECT, dtype=float)
    base = q_arr[..., None] + k
    head = -(np.log(base) * base ** (-alpha)).sum(axis=-1)
    x = q_arr + _N_DIRECT
    lx = np.log(x)
    am1 = alpha - 1.0
    tail = -lx * x ** (1.0 - alpha) / am1 - x ** (1.0 - alpha) / am1 ** 2
    tail = tail - 0.5 * lx * x ** (-alpha)
    # d/dalpha of coef * P(alpha) * x^(-alpha-2j+1), P the rising product
    rising = alpha
    drising = 1.0
    xpow = x ** (-alpha - 1.0)
    for j, coef in enumerate(_B2J_OVER_FACT):
        tail = tail + coef * (drising - lx * rising) * xpow
        f1, f2 = alpha + 2 * j + 1, alpha + 2 * j + 2
        drising = drising * f1 * f2 + rising * (f1 + f2)
        rising = rising * f1 * f2
        xpow = xpow / (x * x)
    out = head + tail
    return float(out) if out.ndim == 0 else out


def log_psi(a, p):
    """ln of the exposure factor ``(1 - (1-p)^a) / (a p^a)``.

    Broadcasts over ``a`` and ``p``; ``a == 0`` uses the exact limit
    ``-ln(1-p)``. Large negative ``a`` stays finite in log space even when
    the factor itself overflows.
    """
    a_arr = np.asarray(a, dtype=float)
    p_arr = np.asarray(p, dtype=float)
    l1mp = np.log1p(-p_arr)
    lp = np.log(p_arr)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        x = a_arr * l1mp
        # a > 0: x < 0, numerator -expm1(x); a < 0: x > 0, numerator expm1(x)
        ax = np.abs(x)
        lnum = np.where(
            ax > 30.0,
            np.where(x > 0, x, 0.0) + np.log1p(-np.exp(-ax)),
            np.log(np.abs(np.expm1(x))),
        )
        out = lnum - np.log(np.abs(a_arr)) - a_arr * lp
        out = np.where(a_arr == 0.0, np.log(-l1mp), out)
    return float(out) if out.ndim == 0 else out


def psi(a, p):
    """Exposure factor ``(1 - (1-p)^a) / (a p^a)``; ``-ln(1-p)`` at ``a = 0``."""
    with np.errstate(over="ignore"):
        return np.exp(log_psi(a, p))

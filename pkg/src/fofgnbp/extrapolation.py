"""Population FoF extrapolation from a without-replacement sample.

The observed labels ``z_1..z_i`` stay frozen; the latent suffix
``z_{i+1}..z_n`` is initialized by the proportional prediction rule and then
refreshed by ``T`` random-order Gibbs sweeps per iteration, each followed by
one parameter update on the full (observed + imputed) assignment.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cluster_structure import _sweep_inplace
from .inference import (
    McmcConfig,
    McmcTrace,
    SuffStats,
    _log_ecpf_stats,
    default_gnbp_init,
    fit_gnbp,
    fit_pitman_yor,
    gnbp_step,
    parse_a_mode,
    pitman_yor_step,
    py_log_eppf,
)
from .params import GnbpParams, PyParams
from .partitions import ClusterAssignment, FoFVector
from .rng import as_stream

__all__ = [
    "MODELS",
    "ExtrapolationJob",
    "PosteriorFoF",
    "subsample_without_replacement",
    "run_extrapolation",
]

MODELS = ("gnbp", "pitman_yor", "crp")


@dataclass
class ExtrapolationJob:
    observed: ClusterAssignment
    population_size: int
    model: str = "gnbp"
    a_mode: object = "free"
    cfg: McmcConfig = None
    # fixed parameters: skip all parameter updates (GnbpParams or PyParams)
    fixed_params: object = None
    keep_samples: bool = False
    keep_assignments: bool = False

    def __post_init__(self):
        if self.cfg is None:
            self.cfg = McmcConfig()
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if not isinstance(self.observed, ClusterAssignment):
            self.observed = ClusterAssignment(self.observed)
        i = self.observed.n
        if not 1 <= i <= self.population_size:
            raise ValueError(
                f"need 1 <= sample size ({i}) <= population size ({self.population_size})")
        self.a_mode = parse_a_mode(self.a_mode)


@dataclass
class PosteriorFoF:
    """Posterior mean FoF ``mean[i]`` for sizes ``i = 0..n`` (index 0 unused)."""

    mean: np.ndarray
    kept_samples: int

    def as_dict(self):
        idx = np.nonzero(self.mean)[0]
        return {int(i): float(self.mean[i]) for i in idx if i > 0}

    @property
    def n(self):
        return float((np.arange(self.mean.size) * self.mean).sum())

    def get(self, size, default=0.0):
        if 0 < size < self.mean.size:
            return float(self.mean[size])
        return default


def subsample_without_replacement(population, size=None, ratio=None, rng=None):
    """Uniform random subset of the population's elements, relabeled canonically.

    Give either ``size`` (``1 <= size <= n``) or ``ratio`` in ``(0, 1]``. The
    chosen indices keep their original order, so the result is the prefix
    an observer would see after a random permutation of the population.
    """
    gen = as_stream(rng)
    n = population.n
    if (size is None) == (ratio is None):
        raise ValueError("give exactly one of size or ratio")
    if size is None:
        if not 0 < ratio <= 1:
            raise ValueError("ratio must lie in (0, 1]")
        size = max(1, int(round(ratio * n)))
    if not 1 <= size <= n:
        raise ValueError("need 1 <= size <= n")
    idx = np.sort(gen.choice(n, size=size, replace=False))
    return ClusterAssignment(population.labels[idx])


def _gibbs_coefs(model, params):
    """(a, c0, c1) of the proportional rule ``n_k - a`` vs ``c0 + c1 l``."""
    if model == "gnbp":
        return params.a, math.exp(params.log_new_weight), 0.0
    return params.a, params.gamma0, params.a


def _initial_params(job, gen):
    if job.fixed_params is not None:
        return job.fixed_params
    cfg = job.cfg
    init_cfg = McmcConfig(iterations=max(cfg.init_iterations, 1), burn_in=0,
                          e0=cfg.e0, f0=cfg.f0, grid_step=cfg.grid_step)
    if job.model == "gnbp":
        tr = fit_gnbp(job.observed, init_cfg, job.a_mode, rng=gen)
        return GnbpParams(tr.gamma0[-1], tr.a[-1], tr.p[-1])
    fix_a = 0.0 if job.model == "crp" else None
    tr = fit_pitman_yor(job.observed, init_cfg, rng=gen, fix_a=fix_a)
    return PyParams(tr.gamma0[-1], tr.a[-1])


def _param_step(job, stats, params, gen):
    if job.model == "gnbp":
        return gnbp_step(stats, params, job.cfg, gen, job.a_mode)
    fix_a = 0.0 if job.model == "crp" else None
    return pitman_yor_step(stats, params, job.cfg, gen, fix_a)


def _log_lik(job, stats, params):
    if job.model == "gnbp":
        return _log_ecpf_stats(stats, params)
    return py_log_eppf(stats, params)


def run_extrapolation(job, rng=None):
    """Impute the unobserved suffix and average the population FoF vectors.

    Returns ``(PosteriorFoF, McmcTrace)``. The trace records the parameters
    after each iteration's update and the population cluster count ``l``;
    with ``job.keep_samples`` every kept population FoF is attached too, and
    with ``job.keep_assignments`` every kept canonical assignment.
    """
    cfg = job.cfg
    gen = as_stream(cfg.seed if rng is None else rng)
    n, i = job.population_size, job.observed.n
    params = _initial_params(job, gen)

    z = np.zeros(n, dtype=np.int64)
    z[:i] = job.observed.labels
    a, c0, c1 = _gibbs_coefs(job.model, params)
    if n > i:
        _kernels.sequential_fill(z, i, a, c0, c1, gen.random(n - i))

    acc = np.zeros(n + 1)
    kept = 0
    trace = McmcTrace.empty(cfg.iterations)
    for it in range(cfg.iterations):
        if n > i:
            a, c0, c1 = _gibbs_coefs(job.model, params)
            _sweep_inplace(z, i, a, c0, c1, cfg.inner_sweeps, gen)
        cl = np.bincount(z)[1:]
        stats = SuffStats.from_cluster_sizes(cl)
        if job.fixed_params is None:
            params = _param_step(job, stats, params, gen)
        p = params.p if job.model == "gnbp" else math.nan
        trace.record(it, params.gamma0, params.a, p, stats.l, _log_lik(job, stats, params))
        if it >= cfg.burn_in:
            fof = np.bincount(cl, minlength=n + 1)
            acc += fof
            kept += 1
            if job.keep_samples:
                trace.fofs.append(FoFVector.from_sizes(cl))
            if job.keep_assignments:
                trace.assignments.append(ClusterAssignment(z.copy()))
    return PosteriorFoF(acc / kept, kept), trace

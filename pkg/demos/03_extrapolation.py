"""Extrapolating a population FoF vector from a small sample.

Draws a heavy-tailed gNBP population of about 20000 elements, observes 1/8
of it without replacement, and predicts the population FoF vector with the
gNBP, Pitman-Yor and CRP samplers and with the least-squares power-law
baseline. Run with ``python3 demos/03_extrapolation.py`` (a few minutes).
"""
import numpy as np

from fofgnbp import GnbpParams, RngStream
from fofgnbp.baselines import chi_squared, fit_powerlaw_tail, ls_refit_baseline, plot_rows, rmse
from fofgnbp.cluster_structure import simulate_compound
from fofgnbp.extrapolation import ExtrapolationJob, run_extrapolation, subsample_without_replacement
from fofgnbp.inference import McmcConfig
from fofgnbp.io import write_plot
from fofgnbp.partitions import ClusterAssignment

# %% Population: gamma0 picked so that E[n] = 20000
a, p = 0.5, 0.999
gamma0 = 20_000 / (p / (1 - p)) ** (1 - a)
gen = RngStream(11)
pop = simulate_compound(GnbpParams(gamma0, a, p), gen)
pop = ClusterAssignment(gen.permutation(pop.labels))
sample = subsample_without_replacement(pop, ratio=1 / 8, rng=gen)
print(f"population n={pop.n} l={pop.l}; sample n={sample.n} l={sample.l}")

# %% Power-law view of the sample
fit = fit_powerlaw_tail(sample.fof())
print(f"sample tail: i_min={fit.i_min} alpha={fit.alpha:.3f} head slope {fit.alpha_h:.3f}")

# %% Model-based extrapolation
cfg = McmcConfig(iterations=300, burn_in=150)
preds = {}
for model in ("gnbp", "pitman_yor", "crp"):
    post, trace = run_extrapolation(ExtrapolationJob(sample, pop.n, model=model, cfg=cfg), gen)
    m = trace.posterior_means(cfg.burn_in)
    preds[model] = post.mean
    print(f"{model:10s} posterior a {m['a']:6.3f}  predicted l {m['l']:8.1f}")

# %% Least-squares baseline: sample shape, population intercepts (it peeks at
# the population, so it is an optimistic reference rather than a predictor)
ls = ls_refit_baseline(sample.fof(), pop.fof(), fit=fit)
preds["ls_refit"] = ls.as_dict(pop.n)

print("\nmodel       RMSE     chi2")
for name, pred in preds.items():
    print(f"{name:10s} {rmse(pop.fof(), pred):6.3f} {chi_squared(pop.fof(), pred):9.1f}")

print("\n size  population  gnbp    crp")
for i in (1, 2, 3, 5, 10, 20, 50):
    print(f"{i:5d} {pop.fof().get(i):9d} {preds['gnbp'][i]:7.1f} {preds['crp'][i]:7.1f}")

# %% Log-log plot data for an external plotting tool
write_plot(plot_rows(pop.fof(), fit_powerlaw_tail(pop.fof())), "population_loglog.tsv")
print("\nwrote population_loglog.tsv")

"""Cluster structure of the generalized negative binomial process.

Walks through the three ways of drawing a gNBP population, the law of the
population size, and how the partition law changes with the population size.
Run with ``python3 demos/01_cluster_structure.py``.
"""
import numpy as np

from fofgnbp import GnbpParams, RngStream
from fofgnbp.cluster_structure import (
    cluster_count_log_pmf_all,
    log_prefix_cluster_count_pmf,
    sequential_sample,
    simulate_compound,
    simulate_fof_poisson,
    simulate_fof_stickbreak,
)
from fofgnbp.distributions import asymptotic_law, gnb_log_pmf

# %% Three constructions of the same random FoF vector
params = GnbpParams(gamma0=5.0, a=0.5, p=0.9)
gens = RngStream(1).split(3)
draws = 20_000
poisson = simulate_fof_poisson(params, gens[0], size=draws)
stick = simulate_fof_stickbreak(params, gens[1], size=draws)
compound = [z.fof() for z in simulate_compound(params, gens[2], size=draws)]

print("construction   mean n    mean l   mean m1")
for name, fofs in (("poisson", poisson), ("stickbreak", stick), ("compound", compound)):
    n = np.mean([f.n for f in fofs])
    l = np.mean([f.l for f in fofs])
    m1 = np.mean([f.get(1) for f in fofs])
    print(f"{name:12s} {n:8.2f} {l:9.3f} {m1:9.3f}")
print(f"expected l = gamma0 * psi = {params.gamma0 * params.psi:.3f}")

# %% The population size is generalized negative binomial
ns = np.array([f.n for f in compound])
print("\n n   empirical   exact")
for n in range(6):
    print(f"{n:2d} {np.mean(ns == n):10.4f} {np.exp(gnb_log_pmf(n, params)):8.4f}")

# %% Given n, the number of clusters has an exact law; for 0 < a < 1 it
# settles to 1 + Poisson(gamma0 / (a p^a)) as n grows
for n in (50, 500, 2000):
    pmf = np.exp(cluster_count_log_pmf_all(n, params))
    print(f"n={n:5d}: E[l] = {(np.arange(pmf.size) * pmf).sum():7.3f}")
law = asymptotic_law(params, "cluster_count")
print(f"limit: 1 + Poisson({law.rate:.3f}) has mean {1 + law.rate:.3f}")

# %% Size dependence: the first i elements of a size-n population are not a
# size-i population. Compare the law of the number of clusters among the
# first 20 elements inside populations of increasing size.
print("\nP(l_20 = j) within populations of size n")
for n in (20, 200, 2000):
    probs = [np.exp(log_prefix_cluster_count_pmf(j, 20, n, params)) for j in range(1, 8)]
    print(f"n={n:5d}: " + " ".join(f"{q:.3f}" for q in probs))

# %% Exact sequential draws at fixed n
zs = sequential_sample(300, params, RngStream(2), size=5)
for z in zs:
    print(f"n={z.n} l={z.l} largest clusters {np.sort(z.sizes)[::-1][:5].tolist()}")

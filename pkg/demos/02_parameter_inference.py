"""Posterior inference for the gNBP and the Pitman-Yor process.

Simulates data with known parameters, runs the samplers and compares
posterior means with the truth. Run with
``python3 demos/02_parameter_inference.py``.
"""
import numpy as np

from fofgnbp import GnbpParams, PyParams, RngStream
from fofgnbp.cluster_structure import simulate_compound, simulate_pitman_yor
from fofgnbp.inference import McmcConfig, fit_crp, fit_gnbp, fit_pitman_yor

cfg = McmcConfig(iterations=1000, burn_in=500)

# %% gNBP. One draw at (3, 0.25, 0.6) holds only a handful of elements, so
# we pool many independent populations; the exposure factor tells the
# sampler how many were pooled.
truth = GnbpParams(3.0, 0.25, 0.6)
k = 2000
sizes = np.concatenate([z.sizes for z in simulate_compound(truth, RngStream(1), size=k)])
trace = fit_gnbp(sizes, cfg, rng=RngStream(2), exposure=k)
means = trace.posterior_means(cfg.burn_in)
print(f"gNBP on {sizes.sum()} pooled elements")
for name in ("gamma0", "a", "p"):
    print(f"  {name:6s} truth {getattr(truth, name):6.3f}  posterior mean {means[name]:6.3f}")

# %% Restricted discount modes
for mode in ("negative", 0.0, -1.0):
    m = fit_gnbp(sizes, cfg, mode=mode, rng=RngStream(3), exposure=k).posterior_means(cfg.burn_in)
    print(f"  mode {str(mode):8s}: gamma0 {m['gamma0']:7.3f}  a {m['a']:6.3f}  p {m['p']:6.3f}")

# %% Pitman-Yor. The discount is well identified from n=5000 elements; the
# concentration is not, and the default Gamma(0.01, 1/0.01) prior pulls it
# toward zero.
z = simulate_pitman_yor(5000, PyParams(1.0, 0.5), RngStream(4))
py = fit_pitman_yor(z, cfg, rng=RngStream(5))
m = py.posterior_means(cfg.burn_in)
print(f"\nPitman-Yor on n={z.n}, l={z.l}: gamma0 {m['gamma0']:.4f} (truth 1), a {m['a']:.3f} (truth 0.5)")
q = np.quantile(py.gamma0[cfg.burn_in:], [0.1, 0.5, 0.9])
print(f"  gamma0 posterior deciles 10/50/90%: {q[0]:.2e} {q[1]:.2e} {q[2]:.2e}")

# %% CRP (Pitman-Yor with a = 0)
z = simulate_pitman_yor(5000, PyParams(4.0, 0.0), RngStream(6))
m = fit_crp(z, cfg, rng=RngStream(7)).posterior_means(cfg.burn_in)
print(f"\nCRP on n={z.n}, l={z.l}: gamma0 {m['gamma0']:.3f} (truth 4)")

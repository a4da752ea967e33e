import math

import numpy as np
import pytest

from fofgnbp.partitions import ClusterAssignment, enumerate_partitions


def all_partitions(n):
    return [ClusterAssignment(z, canonical=True) for z in enumerate_partitions(n)]


def tv_distance(p, q):
    """Total variation between two histograms given as dicts or aligned arrays."""
    if isinstance(p, dict):
        keys = set(p) | set(q)
        return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical(items):
    out = {}
    for x in items:
        out[x] = out.get(x, 0) + 1
    total = len(items)
    return {k: v / total for k, v in out.items()}


def within_se(freq, prob, draws, k=4.0):
    """|freq - prob| within k binomial standard errors (with a tiny floor)."""
    se = math.sqrt(max(prob * (1 - prob), 1e-12) / draws)
    return abs(freq - prob) <= k * se + 1e-12


@pytest.fixture
def tiny_params():
    from fofgnbp.params import GnbpParams
    return GnbpParams(2.0, 0.5, 0.5)

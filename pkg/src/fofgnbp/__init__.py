"""Frequency-of-frequencies modeling with the generalized negative binomial process."""
from .params import GnbpParams, PyParams
from .partitions import ClusterAssignment, FoFVector
from .rng import RngStream

__all__ = ["GnbpParams", "PyParams", "ClusterAssignment", "FoFVector", "RngStream"]
__version__ = "0.1.0"

"""Parameter containers for the gNBP and Pitman-Yor models."""
import math
from dataclasses import dataclass

from .numerics import log_psi

__all__ = ["GnbpParams", "PyParams"]


@dataclass(frozen=True)
class GnbpParams:
    """Mass ``gamma0 > 0``, discount ``a < 1`` and probability ``0 < p < 1``."""

    gamma0: float
    a: float
    p: float

    def __post_init__(self):
        g, a, p = float(self.gamma0), float(self.a), float(self.p)
        if not (0.0 < g < math.inf):
            raise ValueError(f"gamma0 must be positive and finite, got {self.gamma0}")
        if not a < 1.0:
            raise ValueError(f"discount a must be < 1, got {self.a}")
        if not (0.0 < p < 1.0):
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        object.__setattr__(self, "gamma0", g)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)

    @property
    def log_psi(self):
        return log_psi(self.a, self.p)

    @property
    def psi(self):
        """Expected number of clusters per unit mass."""
        return math.exp(self.log_psi)

    @property
    def log_new_weight(self):
        """ln(gamma0 * p^-a), the unnormalized weight of opening a cluster."""
        return math.log(self.gamma0) - self.a * math.log(self.p)


@dataclass(frozen=True)
class PyParams:
    """Pitman-Yor concentration ``gamma0 > 0`` and discount ``0 <= a < 1``."""

    gamma0: float
    a: float

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not 0.0 <= self.a < 1.0:
            raise ValueError("Pitman-Yor discount must lie in [0, 1)")
        object.__setattr__(self, "gamma0", float(self.gamma0))
        object.__setattr__(self, "a", float(self.a))

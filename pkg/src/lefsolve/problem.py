"""The system  -Lap u = p v^alpha,  -Lap v = q u^beta  on |x| > A."""

from dataclasses import dataclass

from .coeff import CoefficientField, DEFAULT_N_THETA, majorant_field


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    beta: float
    c: float
    A: float
    p: CoefficientField
    q: CoefficientField

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not self.alpha + self.beta < 1:
            raise ValueError("alpha+beta must be < 1")
        if not self.c >= 1:
            raise ValueError("c must be >= 1")
        if not self.A > 0:
            raise ValueError("A must be positive")

    @property
    def radial(self):
        return self.p.radial and self.q.radial

    @property
    def kappa(self):
        """The invariance factor 1 + 2^(alpha+beta)."""
        return 1.0 + 2.0 ** (self.alpha + self.beta)

    def majorized(self, n_theta=DEFAULT_N_THETA):
        """Same problem with p, q replaced by their radial majorants."""
        if self.radial:
            return self
        return ProblemSpec(
            self.alpha, self.beta, self.c, self.A,
            majorant_field(self.p, n_theta), majorant_field(self.q, n_theta),
        )

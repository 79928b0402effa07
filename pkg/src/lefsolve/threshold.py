"""Smallest starting point T with (1 + 2^(alpha+beta)) psi(T) <= c for p and q."""

from dataclasses import dataclass
import math

from . import quad
from .errors import NonIntegrable, ThresholdBracketError

BISECT_WIDTH = 1e-10
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class ThresholdResult:
    T: float
    B_c: float
    psi_p_at_T: float
    psi_q_at_T: float
    margin: float
    kappa: float
    T_floor: float


def check_integrable(fld, lower, rel_tol):
    res = quad.weighted_log_integral(fld, lower, rel_tol)
    if not res.converged:
        raise NonIntegrable(
            f"tail integral of {fld.describe()} did not settle (tail bound {res.tail_bound!r})"
        )
    return res


def _psi_value(fld, T, rel_tol):
    res = quad.psi(fld, T, rel_tol)
    if not res.converged:
        raise NonIntegrable(f"psi({T!r}) of {fld.describe()} did not settle")
    return res.value


def _smallest_admissible(fld, floor, bound, rel_tol):
    """Smallest T >= floor with psi(T) <= bound, to within BISECT_WIDTH (upper end)."""
    if _psi_value(fld, floor, rel_tol) <= bound:
        return floor
    lo, step = floor, 1.0
    for _ in range(MAX_DOUBLINGS):
        hi = floor + step
        if hi > quad.MAX_S:
            break
        if _psi_value(fld, hi, rel_tol) <= bound:
            break
        lo, step = hi, 2.0 * step
    else:
        raise ThresholdBracketError(f"no admissible T found for {fld.describe()}")
    if hi > quad.MAX_S:
        raise ThresholdBracketError(f"no admissible T below s={quad.MAX_S} for {fld.describe()}")
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if _psi_value(fld, mid, rel_tol) <= bound:
            hi = mid
        else:
            lo = mid
    return hi


def compute_threshold(spec, rel_tol=1e-10):
    """Threshold T and inner radius B_c = e^T for a radial (or majorized) problem."""
    if not spec.radial:
        spec = spec.majorized()
    floor = math.log(spec.A + 1.0)
    for fld in (spec.p, spec.q):
        check_integrable(fld, spec.A + 1.0, rel_tol)
    kappa = spec.kappa
    bound = spec.c / kappa
    T = max(_smallest_admissible(fld, floor, bound, rel_tol) for fld in (spec.p, spec.q))
    psi_p = _psi_value(spec.p, T, rel_tol)
    psi_q = _psi_value(spec.q, T, rel_tol)
    margin = spec.c - kappa * max(psi_p, psi_q)
    return ThresholdResult(T, math.exp(T), psi_p, psi_q, margin, kappa, floor)

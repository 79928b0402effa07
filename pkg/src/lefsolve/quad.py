"""Semi-infinite quadrature for the tail integrals of a radial coefficient.

All integrals here have nonnegative integrands.  They are summed over
panels of geometrically growing length, each panel integrated by a
129-node composite Simpson rule (bisected while the 65/129-node estimates
disagree), and the remainder past the last panel is extrapolated from the
decay ratio of the last two panels.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate

from .errors import NonIntegrable

ABS_FLOOR = 1e-300
PANEL_NODES = 129
DIVERGENCE_RUN = 8
SETTLE_RUN = 3
MAX_S = 350.0  # exp(2 s) stays finite
MAX_R = 1e300
_MAX_BISECT = 20


@dataclass(frozen=True)
class TailIntegralResult:
    value: float
    truncation_point: float
    tail_bound: float
    converged: bool


def _simpson_weights(n):
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


_W129 = _simpson_weights(PANEL_NODES)
_W65 = _simpson_weights((PANEL_NODES + 1) // 2)


def _panel(f, a, b, rel_tol, abs_tol, depth=0):
    x = np.linspace(a, b, PANEL_NODES)
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonIntegrable(f"integrand not finite on [{a!r}, {b!r}]")
    h = (b - a) / (PANEL_NODES - 1)
    fine = h * float(_W129 @ y)
    coarse = 2.0 * h * float(_W65 @ y[::2])
    err = (fine - coarse) / 15.0
    if abs(err) <= max(0.1 * rel_tol * abs(fine), abs_tol) or depth >= _MAX_BISECT:
        return fine + err
    m = 0.5 * (a + b)
    half = 0.5 * abs_tol
    return (_panel(f, a, m, rel_tol, half, depth + 1)
            + _panel(f, m, b, rel_tol, half, depth + 1))


def tail_integral(f, lower, rel_tol, panels="geometric", unit=1.0, what="integral"):
    """Integral of ``f`` over ``[lower, inf)``.

    ``panels="geometric"`` uses ``[lower 2^k, lower 2^(k+1)]`` (lower > 0);
    ``panels="shift"`` uses ``[lower + unit (2^k - 1), lower + unit (2^(k+1) - 1)]``.
    ``f`` must accept numpy arrays.  Raises NonIntegrable when eight
    consecutive panel contributions fail to decrease.
    """
    if not 1e-14 < rel_tol < 1e-2:
        raise ValueError("rel_tol must lie in (1e-14, 1e-2)")
    if panels == "geometric":
        if not lower > 0:
            raise ValueError("geometric panels need a positive lower limit")
        limit = MAX_R
        edge = lambda k: lower * 2.0 ** k
    elif panels == "shift":
        limit = MAX_S
        edge = lambda k: lower + unit * (2.0 ** k - 1.0)
    else:
        raise ValueError(f"unknown panel scheme {panels!r}")

    total = 0.0
    prev = None
    rising = 0
    settled = 0
    k = 0
    tail = math.inf
    b = lower
    while True:
        a, b = edge(k), edge(k + 1)
        last = b >= limit
        if last:
            if a >= limit:
                return TailIntegralResult(total, a, tail, False)
            b = limit
        # pieces far below the running total need no relative accuracy
        contrib = _panel(f, a, b, rel_tol, 0.01 * rel_tol * total)
        total += contrib
        scale = max(total, ABS_FLOOR)

        if prev is not None and contrib > 0.0 and contrib >= prev:
            rising += 1
            if rising >= DIVERGENCE_RUN:
                raise NonIntegrable(
                    f"{what}: panel contributions grew over {DIVERGENCE_RUN} "
                    f"consecutive panels up to {b!r}"
                )
        else:
            rising = 0

        if contrib == 0.0 and prev:
            # floating-point underflow: fine only if the tail was already negligible
            done = settled >= SETTLE_RUN - 1 and tail <= rel_tol * scale
            return TailIntegralResult(total + (tail if done else 0.0), a,
                                      tail if done else math.inf, done)
        if contrib == 0.0:
            tail = 0.0
        elif prev is not None and prev > 0.0 and contrib < prev:
            ratio = contrib / prev
            tail = contrib * ratio / (1.0 - ratio)
        else:
            tail = math.inf

        settled = settled + 1 if contrib <= rel_tol * scale else 0
        prev = contrib
        k += 1
        if settled >= SETTLE_RUN and tail <= rel_tol * scale:
            return TailIntegralResult(total + tail, b, tail, True)
        if last:
            # clipped final panel: accept once the two last pieces are negligible
            done = settled >= 2 and tail <= rel_tol * scale
            return TailIntegralResult(total + tail, b, tail if done else math.inf, done)


def _radial_only(fld):
    if not fld.radial:
        raise ValueError(
            "tail integrals need a radial field; majorize it first (coeff.majorant_field)"
        )


def _s_weight(fld):
    """s -> e^{2s} p(e^s)."""
    def w(s):
        with np.errstate(all="ignore"):
            p = fld.radial_profile(np.exp(s))
            out = np.exp(2.0 * s + np.log(p))
        # p == 0, including underflow far out, contributes exactly 0
        return np.where(p > 0.0, out, np.where(p == 0.0, 0.0, np.nan))
    return w


def weighted_log_integral(fld, lower, rel_tol=1e-10):
    """Integral of s p(s) ln(s) over [lower, inf), lower > 1."""
    _radial_only(fld)
    if not lower > 1.0:
        raise ValueError("lower limit must exceed 1 so that ln is positive")
    if fld.is_zero:
        return TailIntegralResult(0.0, float(lower), 0.0, True)

    def f(s):
        return s * fld.radial_profile(s) * np.log(s)

    return tail_integral(f, float(lower), rel_tol, "geometric", what="int s p(s) ln s")


def log_weighted_s_integral(fld, s_lower, rel_tol=1e-10):
    """Integral of s e^{2s} p(e^s) over [s_lower, inf); equals the r-form above."""
    _radial_only(fld)
    if fld.is_zero:
        return TailIntegralResult(0.0, float(s_lower), 0.0, True)
    w = _s_weight(fld)
    return tail_integral(lambda s: s * w(s), float(s_lower), rel_tol, "shift",
                         what="int s e^2s p(e^s)")


def phi(fld, S, rel_tol=1e-10):
    """Single tail: integral of e^{2s} p(e^s) over [S, inf)."""
    _radial_only(fld)
    if fld.is_zero:
        return TailIntegralResult(0.0, float(S), 0.0, True)
    return tail_integral(_s_weight(fld), float(S), rel_tol, "shift", what="phi")


def psi(fld, T, rel_tol=1e-10):
    """Double tail  int_T^inf int_t^inf e^{2s} p(e^s) ds dt,

    evaluated as the single integral of (s - T) e^{2s} p(e^s) over [T, inf).
    """
    _radial_only(fld)
    T = float(T)
    if fld.is_zero:
        return TailIntegralResult(0.0, T, 0.0, True)
    w = _s_weight(fld)
    return tail_integral(lambda s: (s - T) * w(s), T, rel_tol, "shift", what="psi")


def fubini_identity_check(fld, T, rel_tol=1e-10):
    """Relative gap between nested double quadrature and the weighted single form.

    The nested side uses scipy's QUADPACK, independent of the panel rule.
    """
    single = psi(fld, T, rel_tol)
    if not single.converged:
        raise NonIntegrable(f"psi did not settle at T={T!r}")
    if fld.is_zero:
        return 0.0
    w = _s_weight(fld)
    opts = dict(epsabs=0.0, epsrel=rel_tol / 10, limit=200)

    def scalar_w(s):
        return float(w(np.float64(s)))

    def inner(t):
        return integrate.quad(scalar_w, t, np.inf, **opts)[0]

    with warnings.catch_warnings():
        # QUADPACK complains about the subnormal far tail; the result is unaffected
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        double = integrate.quad(inner, float(T), np.inf, **opts)[0]
    return abs(double - single.value) / max(single.value, ABS_FLOOR)


def ip_tail(fld, r, rel_tol=1e-10):
    """I(r) = integral of rho p(rho) ln(rho) over [r, inf), with extrapolated remainder."""
    res = weighted_log_integral(fld, r, rel_tol)
    if not res.converged:
        raise NonIntegrable(f"tail functional did not settle at r={r!r}")
    return res.value

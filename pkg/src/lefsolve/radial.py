"""Radial solutions through the logarithmic variable s = ln r.

With u(r) = y(ln r) the system becomes  -y'' = e^{2s} p(e^s) z^alpha,
-z'' = e^{2s} q(e^s) y^beta  on [T, inf).  Bounded solutions tending to c
are fixed points of

    F1(y, z)(t) = c - int_t^inf int_s^inf e^{2k} p(e^k) z(k)^alpha dk ds

(and symmetrically F2), which maps the box K = {|y - c| <= c, |z - c| <= c}
into itself once T satisfies the threshold condition.  ``solve_radial``
runs the Picard iteration of F from (c, c) on a uniform s-grid.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels, quad
from .errors import NoConvergence, NonIntegrable
from .problem import ProblemSpec
from .threshold import ThresholdResult, compute_threshold

__all__ = [
    "LogGrid", "LogGridSolution", "RadialProfile", "ProblemSpec", "RadialOperator",
    "apply_F", "solve_radial", "k_membership_margin", "to_physical", "residual_radial",
    "choose_span",
]

MIN_SPAN = 10.0
MAX_S_END = 300.0
K_TOL = 1e-12


@dataclass(frozen=True)
class LogGrid:
    T: float
    S_max: float
    n: int

    def __post_init__(self):
        if self.n < 65:
            raise ValueError("log grid needs n >= 65")
        if not self.S_max > self.T:
            raise ValueError("S_max must exceed T")

    @property
    def h(self):
        return (self.S_max - self.T) / (self.n - 1)

    @property
    def nodes(self):
        return self.T + self.h * np.arange(self.n)


@dataclass
class LogGridSolution:
    grid: LogGrid
    y: np.ndarray
    z: np.ndarray
    c: float
    iterations: int
    sup_step: float
    picard_tol: float = 0.0
    history: list = field(default_factory=list)
    threshold: ThresholdResult = None
    psi_end: tuple = (0.0, 0.0)

    @property
    def s(self):
        return self.grid.nodes


@dataclass(frozen=True)
class RadialProfile:
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray


class RadialOperator:
    """F on a fixed grid: node weights and tail constants computed once."""

    def __init__(self, spec, grid, rel_tol=1e-12, backend=None):
        if not spec.radial:
            raise ValueError("radial operator needs radial p and q; use spec.majorized()")
        self.spec = spec
        self.grid = grid
        self.backend = backend
        s = grid.nodes
        self.w_p = s_weight(spec.p, s)
        self.w_q = s_weight(spec.q, s)
        S = grid.S_max
        self.phi_p = _settled(quad.phi(spec.p, S, rel_tol))
        self.phi_q = _settled(quad.phi(spec.q, S, rel_tol))
        self.psi_p = _settled(quad.psi(spec.p, S, rel_tol))
        self.psi_q = _settled(quad.psi(spec.q, S, rel_tol))

    def deficit(self, w, other, expo, phi_end, psi_end):
        """Double tail integral of w * other^expo; values beyond S_max frozen at the end value."""
        h = self.grid.h
        f = w * np.maximum(other, 0.0) ** expo
        end = max(other[-1], 0.0) ** expo
        # exact integrals of nonnegative data are nonnegative; clip the
        # undershoot that high-order weights can produce on rough input
        g = np.maximum(kernels.cumulative_tail(f, h, self.backend) + end * phi_end, 0.0)
        return np.maximum(kernels.cumulative_tail(g, h, self.backend) + end * psi_end, 0.0)

    def __call__(self, y, z):
        c = self.spec.c
        y_new = c - self.deficit(self.w_p, z, self.spec.alpha, self.phi_p, self.psi_p)
        z_new = c - self.deficit(self.w_q, y, self.spec.beta, self.phi_q, self.psi_q)
        return y_new, z_new


def _settled(res):
    if not res.converged:
        raise NonIntegrable("tail constant beyond the grid end did not settle")
    return res.value


def s_weight(fld, s):
    """e^{2s} p(e^s) on an array of s values, evaluated in log form."""
    r = np.exp(s)
    p = fld.checked(r)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.exp(2.0 * s + np.log(p))
    return np.where(p > 0.0, out, 0.0)


def _check_in_K(y, z, c, tol=K_TOL):
    worst = max(np.max(np.abs(y - c)), np.max(np.abs(z - c)))
    if worst > c * (1.0 + tol):
        raise ValueError(f"input pair leaves K: max |y - c|, |z - c| = {worst!r} > c = {c!r}")


def apply_F(spec, grid, y, z, backend=None, rel_tol=1e-12):
    """One application of the integral operator F to a pair (y, z) in K."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.shape != (grid.n,) or z.shape != (grid.n,):
        raise ValueError("y and z must be sampled on the grid nodes")
    _check_in_K(y, z, spec.c)
    return RadialOperator(spec, grid, rel_tol, backend)(y, z)


def choose_span(spec, T, picard_tol, rel_tol=1e-12):
    """Grid length: at least 10, long enough that psi(T + span) <= picard_tol / 10."""
    tail_tol = picard_tol / 10.0

    def ok(span):
        return all(
            quad.psi(f, T + span, rel_tol).value <= tail_tol for f in (spec.p, spec.q)
        )

    if ok(MIN_SPAN):
        return MIN_SPAN
    lo, hi = MIN_SPAN, 2.0 * MIN_SPAN
    while not ok(hi):
        lo, hi = hi, 2.0 * hi
        if T + hi > MAX_S_END:
            return MAX_S_END - T
    while hi - lo > 0.05:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def solve_radial(spec, n=4097, S_span=None, picard_tol=1e-10, max_iter=200,
                 threshold=None, rel_tol=1e-12, backend=None):
    """Bounded positive radial solution on [B_c, inf) by Picard iteration of F.

    ``threshold`` overrides the computed starting point (a ThresholdResult).
    Raises NoConvergence when ``max_iter`` steps do not bring the sup-norm
    update below ``picard_tol``.
    """
    if not spec.radial:
        raise ValueError("solve_radial needs radial p and q; use spec.majorized()")
    if threshold is None:
        threshold = compute_threshold(spec, rel_tol=max(rel_tol, 1e-12))
    T = threshold.T
    if S_span is None:
        S_span = choose_span(spec, T, picard_tol, rel_tol)
    grid = LogGrid(T, T + S_span, n)
    c = spec.c

    if spec.p.is_zero and spec.q.is_zero:
        const = np.full(n, float(c))
        return LogGridSolution(grid, const, const.copy(), c, 1, 0.0, picard_tol,
                               [0.0], threshold, (0.0, 0.0))

    op = RadialOperator(spec, grid, rel_tol, backend)
    y = np.full(n, float(c))
    z = np.full(n, float(c))
    history = []
    for it in range(1, max_iter + 1):
        y_new, z_new = op(y, z)
        step = max(np.max(np.abs(y_new - y)), np.max(np.abs(z_new - z)))
        history.append(float(step))
        y, z = y_new, z_new
        if step <= picard_tol:
            break
    else:
        raise NoConvergence(
            f"Picard iteration stalled at sup-norm step {history[-1]!r} after {max_iter} steps",
            history,
        )

    sol = LogGridSolution(grid, y, z, c, it, history[-1], picard_tol, history,
                          threshold, (op.psi_p, op.psi_q))

    if min(y.min(), z.min()) <= 0.0:
        # y, z are nondecreasing: restart from the first node where both are positive
        k = int(np.argmax((y > 0.0) & (z > 0.0)))
        if k == 0 or k >= n - 64:
            raise NoConvergence("solution never becomes positive on the grid", history)
        T1 = float(grid.nodes[k])
        shifted = ThresholdResult(T1, math.exp(T1), threshold.psi_p_at_T, threshold.psi_q_at_T,
                                  threshold.margin, threshold.kappa, threshold.T_floor)
        return solve_radial(spec, n, grid.S_max - T1, picard_tol, max_iter, shifted,
                            rel_tol, backend)
    return sol


def k_membership_margin(sol):
    c = sol.c
    return float(min(np.min(c - np.abs(sol.y - c)), np.min(c - np.abs(sol.z - c))))


def to_physical(sol):
    """Back to the radius: r = e^s, u(r) = y(s), v(r) = z(s)."""
    return RadialProfile(np.exp(sol.grid.nodes), sol.y.copy(), sol.z.copy())


def residual_radial(sol, spec):
    """Sup over interior nodes of the three-point residual of the transformed system."""
    s = sol.grid.nodes
    h = sol.grid.h
    y, z = sol.y, sol.z
    if spec.p.is_zero and spec.q.is_zero:
        src_y = src_z = np.zeros(len(s) - 2)
    else:
        src_y = s_weight(spec.p, s[1:-1]) * np.maximum(z[1:-1], 0.0) ** spec.alpha
        src_z = s_weight(spec.q, s[1:-1]) * np.maximum(y[1:-1], 0.0) ** spec.beta
    d2y = (y[:-2] - 2.0 * y[1:-1] + y[2:]) / h ** 2
    d2z = (z[:-2] - 2.0 * z[1:-1] + z[2:]) / h ** 2
    return float(np.max(np.abs(d2y + src_y))), float(np.max(np.abs(d2z + src_z)))

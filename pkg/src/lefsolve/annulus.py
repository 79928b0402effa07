"""Monotone iteration between (0, 0) and a radial supersolution on a truncated annulus.

Unknowns live on a polar grid that is uniform in s = ln r and periodic in
theta.  In these coordinates the Laplacian is e^{-2s} (w_ss + w_thth), so
the five-point operator is symmetric with constant coefficients and is an
M-matrix; the discrete maximum principle then drives the monotonicity of
the iteration

    -Lap u_{n+1} = p v_n^alpha,   -Lap v_{n+1} = q u_n^beta,

with both circles carrying the supersolution's values.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from . import kernels
from .coeff import angle_grid
from .errors import LinearSolveFailure, MaxPrincipleViolation, NoConvergence, VerificationFailure
from .radial import LogGrid, choose_span, solve_radial
from .threshold import compute_threshold

MONOTONE_FLOOR = -1e-8
SUPER_TOL = 1e-8


@dataclass(frozen=True)
class AnnulusGrid:
    r_inner: float
    r_outer: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not self.r_inner > 0:
            raise ValueError("inner radius must be positive")
        if not self.r_outer > self.r_inner:
            raise ValueError("annulus is empty: r_outer must exceed r_inner")
        if self.n_r < 3:
            raise ValueError("n_r must be at least 3")
        if self.n_theta < 4 or self.n_theta % 2:
            raise ValueError("n_theta must be even and at least 4")

    @property
    def s(self):
        return np.linspace(math.log(self.r_inner), math.log(self.r_outer), self.n_r)

    @property
    def r(self):
        r = np.exp(self.s)
        r[0], r[-1] = self.r_inner, self.r_outer
        return r

    @property
    def theta(self):
        return angle_grid(self.n_theta)

    @property
    def h_s(self):
        return math.log(self.r_outer / self.r_inner) / (self.n_r - 1)

    @property
    def h_theta(self):
        return 2.0 * math.pi / self.n_theta

    @property
    def coefs(self):
        """(a, b) = (1/h_s^2, 1/h_theta^2)."""
        return 1.0 / self.h_s ** 2, 1.0 / self.h_theta ** 2

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing="ij")


def build_annulus_grid(B_c, r_outer, n_r, n_theta):
    return AnnulusGrid(float(B_c), float(r_outer), int(n_r), int(n_theta))


def _require_solver_grid(grid):
    if grid.n_r < 17 or grid.n_theta < 16:
        raise ValueError("solves need n_r >= 17 and n_theta >= 16")


@dataclass
class LinearStats:
    iterations: int
    rel_residual: float


@dataclass
class AnnulusSolution:
    grid: AnnulusGrid
    u: np.ndarray
    v: np.ndarray
    outer_iterations: int
    monotonicity_defect: float
    linear_residuals: list = field(default_factory=list)
    updates: list = field(default_factory=list)
    super_u: np.ndarray = None
    super_v: np.ndarray = None
    super_violation: float = 0.0


# ---------------------------------------------------------------------------
# linear algebra

def laplacian_matrix(grid):
    """Interior operator -(D_ss + D_thth) as CSR, Dirichlet rows eliminated."""
    a, b = grid.coefs
    return kernels.stencil_matrix(grid.n_r - 2, grid.n_theta, a, b)


def is_m_matrix(A):
    """Positive diagonal, nonpositive off-diagonal, weakly dominant rows, some strictly."""
    A = sp.csr_matrix(A)
    d = A.diagonal()
    off = A - sp.diags(d)
    if np.any(d <= 0) or (off.data > 0).any():
        return False
    slack = d + np.asarray(off.sum(axis=1)).ravel()
    return bool(np.all(slack >= -1e-12 * d) and np.any(slack > 1e-12 * d))


def default_omega(grid):
    """Relaxation factor for the SSOR preconditioner (tuned for h_s << h_theta)."""
    return 2.0 / (1.0 + math.sin(math.pi / (grid.n_r - 1)))


def _pcg(grid, b, x0, lin_tol, max_iter, backend):
    a, c = grid.coefs
    M = kernels.SSORPreconditioner(b.shape[0], b.shape[1], a, c, default_omega(grid), backend)
    bnorm = float(np.linalg.norm(b))
    x = x0.copy()
    if bnorm == 0.0:
        x[:] = 0.0
        return x, LinearStats(0, 0.0)
    r = b - kernels.apply_stencil(x, a, c, backend)
    rel = float(np.linalg.norm(r)) / bnorm
    if rel <= lin_tol:
        return x, LinearStats(0, rel)
    zv = M(r)
    d = zv.copy()
    rz = float(np.vdot(r, zv))
    for it in range(1, max_iter + 1):
        Ad = kernels.apply_stencil(d, a, c, backend)
        step = rz / float(np.vdot(d, Ad))
        x += step * d
        r -= step * Ad
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= lin_tol:
            return x, LinearStats(it, rel)
        zv = M(r)
        rz_new = float(np.vdot(r, zv))
        d *= rz_new / rz
        d += zv
        rz = rz_new
    raise LinearSolveFailure(
        f"preconditioned CG stopped at relative residual {rel:.3e} after {max_iter} iterations"
    )


def _poisson(grid, rhs, inner_bc, outer_bc, lin_tol, x0, backend, max_iter):
    if not 1e-14 < lin_tol < 1e-4:
        raise ValueError("lin_tol must lie in (1e-14, 1e-4)")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (grid.n_r, grid.n_theta) or not np.all(np.isfinite(rhs)):
        raise ValueError("rhs must be finite with shape (n_r, n_theta)")
    nt = grid.n_theta
    inner = np.broadcast_to(np.asarray(inner_bc, dtype=float), (nt,))
    outer = np.broadcast_to(np.asarray(outer_bc, dtype=float), (nt,))
    a, _ = grid.coefs
    s = grid.s
    b = np.exp(2.0 * s[1:-1])[:, None] * rhs[1:-1]
    b[0] += a * inner
    b[-1] += a * outer
    start = np.zeros_like(b) if x0 is None else np.array(x0[1:-1], dtype=float)
    if max_iter is None:
        max_iter = 20 * (grid.n_r + grid.n_theta) + 1000
    xi, stats = _pcg(grid, b, start, lin_tol, max_iter, backend)
    w = np.empty((grid.n_r, nt))
    w[0], w[-1], w[1:-1] = inner, outer, xi
    return w, stats


def poisson_solve(grid, rhs, inner_bc, outer_bc, lin_tol=1e-10, x0=None, backend=None,
                  max_iter=None):
    """Solve -Lap w = rhs on the annulus with Dirichlet data on both circles.

    ``rhs`` has shape (n_r, n_theta) (boundary rows are ignored); the boundary
    data are scalars or length-n_theta arrays.  Iterates preconditioned CG
    until the relative algebraic residual drops to ``lin_tol``.
    """
    _require_solver_grid(grid)
    return _poisson(grid, rhs, inner_bc, outer_bc, lin_tol, x0, backend, max_iter)[0]


# ---------------------------------------------------------------------------
# supersolution

def discrete_neg_laplacian(grid, w):
    """-(D_ss + D_thth) w at interior nodes, in s-coordinates (no e^{-2s} factor)."""
    a, b = grid.coefs
    d_ss = a * (w[:-2] - 2.0 * w[1:-1] + w[2:])
    mid = w[1:-1]
    d_tt = b * (np.roll(mid, 1, axis=1) - 2.0 * mid + np.roll(mid, -1, axis=1))
    return -(d_ss + d_tt)


def supersolution_defect(spec, grid, super_u, super_v):
    """Least relative slack of the discrete supersolution inequalities (>= -tol required)."""
    R, TH = grid.mesh()
    e2s = np.exp(2.0 * grid.s[1:-1])[:, None]
    P = spec.p.checked(R, TH)[1:-1]
    Q = spec.q.checked(R, TH)[1:-1]
    src_u = e2s * P * np.maximum(super_v[1:-1], 0.0) ** spec.alpha
    src_v = e2s * Q * np.maximum(super_u[1:-1], 0.0) ** spec.beta
    slack_u = discrete_neg_laplacian(grid, super_u) - src_u
    slack_v = discrete_neg_laplacian(grid, super_v) - src_v
    scale = max(float(np.max(np.abs(src_u))), float(np.max(np.abs(src_v))), 1e-300)
    return float(min(slack_u.min(), slack_v.min())) / scale


@dataclass
class RadialSupersolution:
    grid: AnnulusGrid
    u: np.ndarray
    v: np.ndarray
    radial: object
    stride: int


def radial_supersolution(spec, n_r=257, n_theta=64, r_outer=None, stride=4,
                         picard_tol=1e-12, n_theta_majorant=4096, backend=None,
                         dev_target=1e-4):
    """Radial solution of the majorant problem laid onto an annulus grid.

    The radial solve uses spacing h_s / stride so that every annulus ring is
    a radial grid node (no interpolation).  When ``r_outer`` is None it is
    the first radius where both components are within ``dev_target`` of c.
    """
    major = spec.majorized(n_theta_majorant)
    th = compute_threshold(major)
    T = th.T
    span_tail = choose_span(major, T, picard_tol)
    if r_outer is None:
        probe = solve_radial(major, n=4097, S_span=span_tail, picard_tol=picard_tol,
                             threshold=th, backend=backend)
        close = (probe.c - probe.y <= dev_target) & (probe.c - probe.z <= dev_target)
        s_out = float(probe.s[int(np.argmax(close))]) if close.any() else probe.grid.S_max
        r_outer = math.exp(max(s_out, T + 0.5))
    grid = build_annulus_grid(th.B_c, r_outer, n_r, n_theta)
    h = grid.h_s / stride
    n_int = int(math.ceil(max(span_tail, math.log(r_outer / th.B_c)) / h - 1e-9))
    n_int = max(n_int, (n_r - 1) * stride, 64)
    sol = solve_radial(major, n=n_int + 1, S_span=n_int * h, picard_tol=picard_tol,
                       threshold=th, backend=backend)
    idx = stride * np.arange(n_r)
    u = np.repeat(sol.y[idx][:, None], n_theta, axis=1)
    v = np.repeat(sol.z[idx][:, None], n_theta, axis=1)
    return RadialSupersolution(grid, u, v, sol, stride)


# ---------------------------------------------------------------------------
# monotone iteration

def monotone_iterate(spec, grid, super_u, super_v, outer_tol=1e-8, max_outer=500,
                     lin_tol=1e-10, backend=None, tol_super=SUPER_TOL):
    """Monotone iteration from (0, 0), bounded above by (super_u, super_v).

    Both boundary circles carry the supersolution values.  Steps after the
    first solve for the increment u_{n+1} - u_n with zero boundary data.
    Raises MaxPrincipleViolation if an increment turns negative beyond
    -1e-8 and NoConvergence after ``max_outer`` steps.
    """
    _require_solver_grid(grid)
    shape = (grid.n_r, grid.n_theta)
    super_u = np.broadcast_to(np.asarray(super_u, float).reshape(grid.n_r, -1), shape).copy()
    super_v = np.broadcast_to(np.asarray(super_v, float).reshape(grid.n_r, -1), shape).copy()
    defect = supersolution_defect(spec, grid, super_u, super_v)
    if defect < -tol_super:
        raise VerificationFailure(
            f"supplied pair is not a discrete supersolution (relative slack {defect:.3e})"
        )
    R, TH = grid.mesh()
    P = spec.p.checked(R, TH)
    Q = spec.q.checked(R, TH)
    a, b = spec.alpha, spec.beta

    u, ust = _poisson(grid, np.zeros(shape), super_u[0], super_u[-1], lin_tol, None, backend, None)
    v, vst = _poisson(grid, np.zeros(shape), super_v[0], super_v[-1], lin_tol, None, backend, None)
    u_prev = np.zeros(shape)
    v_prev = np.zeros(shape)
    mono = float(min(u.min(), v.min()))
    over = float(max((u - super_u).max(), (v - super_v).max()))
    lin_res = [max(ust.rel_residual, vst.rel_residual)]
    updates = [float(max(np.abs(u).max(), np.abs(v).max()))]
    steps = 1
    zero_bc = np.zeros(grid.n_theta)

    while True:
        rhs_u = P * (np.maximum(v, 0.0) ** a - np.maximum(v_prev, 0.0) ** a)
        rhs_v = Q * (np.maximum(u, 0.0) ** b - np.maximum(u_prev, 0.0) ** b)
        if not rhs_u[1:-1].any() and not rhs_v[1:-1].any():
            break
        if steps >= max_outer:
            raise NoConvergence(
                f"monotone iteration: update {updates[-1]!r} after {steps} steps", updates
            )
        du, ust = _poisson(grid, rhs_u, zero_bc, zero_bc, lin_tol, None, backend, None)
        dv, vst = _poisson(grid, rhs_v, zero_bc, zero_bc, lin_tol, None, backend, None)
        u_prev, v_prev = u, v
        u, v = u + du, v + dv
        steps += 1
        mono = min(mono, float(du.min()), float(dv.min()))
        over = max(over, float((u - super_u).max()), float((v - super_v).max()))
        lin_res.append(max(ust.rel_residual, vst.rel_residual))
        step = float(max(np.abs(du).max(), np.abs(dv).max()))
        updates.append(step)
        if mono < MONOTONE_FLOOR:
            raise MaxPrincipleViolation(
                f"iterates decreased by {-mono:.3e}; refine the grid or tighten lin_tol"
            )
        if step <= outer_tol:
            break

    return AnnulusSolution(grid, u, v, steps, mono, lin_res, updates, super_u, super_v, over)


# ---------------------------------------------------------------------------
# residual

def _lap4(grid, w):
    """Fourth-order Laplacian at nodes 2..n_r-3 (physical units)."""
    hs, ht = grid.h_s, grid.h_theta
    w_ss = (-w[:-4] + 16.0 * w[1:-3] - 30.0 * w[2:-2] + 16.0 * w[3:-1] - w[4:]) / (12.0 * hs ** 2)
    m = w[2:-2]
    w_tt = (-np.roll(m, 2, 1) + 16.0 * np.roll(m, 1, 1) - 30.0 * m
            + 16.0 * np.roll(m, -1, 1) - np.roll(m, -2, 1)) / (12.0 * ht ** 2)
    return np.exp(-2.0 * grid.s[2:-2])[:, None] * (w_ss + w_tt)


def residual_annulus(sol, spec):
    """Sup of |Lap u + p v^alpha| and |Lap v + q u^beta| over nodes two rings inside.

    The Laplacian is the fourth-order one, so the residual measures how well
    the computed fields satisfy the differential equations rather than the
    five-point system they were solved on.
    """
    grid = sol.grid
    R, TH = grid.mesh()
    P = spec.p.checked(R, TH)[2:-2]
    Q = spec.q.checked(R, TH)[2:-2]
    res_u = _lap4(grid, sol.u) + P * np.maximum(sol.v[2:-2], 0.0) ** spec.alpha
    res_v = _lap4(grid, sol.v) + Q * np.maximum(sol.u[2:-2], 0.0) ** spec.beta
    return float(np.abs(res_u).max()), float(np.abs(res_v).max())


def angular_variance(w):
    """Max over rings of the variance across theta."""
    return float(np.var(w, axis=1).max())

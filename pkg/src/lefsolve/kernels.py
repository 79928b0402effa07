"""Hot loops with two interchangeable implementations.

Each kernel exists as a numba ``@njit`` loop and as a pure numpy/scipy
routine.  The active one is picked at import time from the environment
variable ``LEFSOLVE_USE_NUMBA`` (``1`` by default, ``0`` forces numpy).
Every public entry point also takes ``backend="numba" | "numpy"`` so the
two paths can be compared side by side, see ``benchmarks/``.
"""

import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = os.environ.get("LEFSOLVE_USE_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off", "",
) and numba is not None

DEFAULT_BACKEND = "numba" if USE_NUMBA else "numpy"
BACKENDS = ("numba", "numpy") if numba is not None else ("numpy",)


def _resolve(backend):
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {backend!r}")
    return backend


if numba is not None:
    njit = numba.njit(cache=True, nogil=True)
else:  # pragma: no cover
    def njit(f):
        return f


# ---------------------------------------------------------------------------
# cumulative tail integral  out[i] = int_{x_i}^{x_last} f
#
# Per-interval cubic (4-point Lagrange) weights; one-sided at both ends.
# Fourth order globally on a uniform grid.

@njit
def _cumtail_numba(f, h):
    n = f.shape[0]
    out = np.empty(n)
    out[n - 1] = 0.0
    w = h / 24.0
    acc = 0.0
    for k in range(n - 2, -1, -1):
        if k == 0:
            c = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        elif k == n - 2:
            c = f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]
        else:
            c = -f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]
        acc += w * c
        out[k] = acc
    return out


def _cumtail_numpy(f, h):
    n = f.shape[0]
    c = np.empty(n - 1)
    c[0] = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
    c[1:-1] = -f[:-3] + 13.0 * f[1:-2] + 13.0 * f[2:-1] - f[3:]
    c[-1] = f[-4] - 5.0 * f[-3] + 19.0 * f[-2] + 9.0 * f[-1]
    out = np.zeros(n)
    out[:-1] = np.cumsum((h / 24.0 * c)[::-1])[::-1]
    return out


def cumulative_tail(f, h, backend=None):
    """Integral of the sampled function from each node to the last node.

    ``f`` holds samples on a uniform grid of spacing ``h`` (at least 4 nodes).
    """
    f = np.ascontiguousarray(f, dtype=float)
    if f.shape[0] < 4:
        raise ValueError("cumulative_tail needs at least 4 nodes")
    if _resolve(backend) == "numba":
        return _cumtail_numba(f, float(h))
    return _cumtail_numpy(f, float(h))


# ---------------------------------------------------------------------------
# five-point operator on the interior of a periodic-in-j strip
#   (A x)_ij = d x_ij - a (x_{i-1,j} + x_{i+1,j}) - b (x_{i,j-1} + x_{i,j+1})
# with x = 0 outside 0 <= i < ni (Dirichlet rows eliminated).

@njit
def _stencil_numba(x, a, b):
    ni, nj = x.shape
    d = 2.0 * a + 2.0 * b
    y = np.empty_like(x)
    for i in range(ni):
        for j in range(nj):
            s = d * x[i, j]
            if i > 0:
                s -= a * x[i - 1, j]
            if i < ni - 1:
                s -= a * x[i + 1, j]
            jl = j - 1 if j > 0 else nj - 1
            jr = j + 1 if j < nj - 1 else 0
            s -= b * (x[i, jl] + x[i, jr])
            y[i, j] = s
    return y


def _stencil_numpy(x, a, b):
    d = 2.0 * a + 2.0 * b
    y = d * x - b * (np.roll(x, 1, axis=1) + np.roll(x, -1, axis=1))
    y[1:, :] -= a * x[:-1, :]
    y[:-1, :] -= a * x[1:, :]
    return y


def apply_stencil(x, a, b, backend=None):
    x = np.ascontiguousarray(x, dtype=float)
    if _resolve(backend) == "numba":
        return _stencil_numba(x, float(a), float(b))
    return _stencil_numpy(x, float(a), float(b))


def stencil_matrix(ni, nj, a, b):
    """The same operator as a scipy CSR matrix, row index ``i * nj + j``."""
    n = ni * nj
    idx = np.arange(n).reshape(ni, nj)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [np.full(n, 2.0 * a + 2.0 * b)]
    for shift, coef in ((1, -b), (-1, -b)):
        rows.append(idx.ravel())
        cols.append(np.roll(idx, shift, axis=1).ravel())
        vals.append(np.full(n, coef))
    rows += [idx[1:].ravel(), idx[:-1].ravel()]
    cols += [idx[:-1].ravel(), idx[1:].ravel()]
    vals += [np.full((ni - 1) * nj, -a)] * 2
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )


# ---------------------------------------------------------------------------
# symmetric SOR preconditioner, lexicographic order (i ascending, then j)
#   z = w (2 - w) (D + w U)^{-1} D (D + w L)^{-1} r

@njit
def _ssor_numba(r, a, b, omega):
    ni, nj = r.shape
    d = 2.0 * a + 2.0 * b
    wa = omega * a
    wb = omega * b
    t = np.empty_like(r)
    for i in range(ni):
        for j in range(nj):
            s = r[i, j]
            if i > 0:
                s += wa * t[i - 1, j]
            if j > 0:
                s += wb * t[i, j - 1]
            if j == nj - 1:
                s += wb * t[i, 0]
            t[i, j] = s / d
    z = np.empty_like(r)
    for i in range(ni - 1, -1, -1):
        for j in range(nj - 1, -1, -1):
            s = d * t[i, j]
            if i < ni - 1:
                s += wa * z[i + 1, j]
            if j < nj - 1:
                s += wb * z[i, j + 1]
            if j == 0:
                s += wb * z[i, nj - 1]
            z[i, j] = s / d
    scale = omega * (2.0 - omega)
    for i in range(ni):
        for j in range(nj):
            z[i, j] *= scale
    return z


class SSORPreconditioner:
    """Symmetric SOR sweep pair for the five-point strip operator."""

    def __init__(self, ni, nj, a, b, omega, backend=None):
        self.shape = (ni, nj)
        self.a, self.b, self.omega = float(a), float(b), float(omega)
        self.backend = _resolve(backend)
        if self.backend == "numpy":
            A = stencil_matrix(ni, nj, a, b)
            d = 2.0 * a + 2.0 * b
            D = sp.identity(ni * nj, format="csr") * d
            self._lower = (D + omega * sp.tril(A, k=-1)).tocsr()
            self._upper = (D + omega * sp.triu(A, k=1)).tocsr()
            self._d = d

    def __call__(self, r):
        r = np.ascontiguousarray(r, dtype=float)
        if self.backend == "numba":
            return _ssor_numba(r, self.a, self.b, self.omega)
        t = spsolve_triangular(self._lower, r.ravel(), lower=True)
        z = spsolve_triangular(self._upper, self._d * t, lower=False)
        return (self.omega * (2.0 - self.omega) * z).reshape(self.shape)

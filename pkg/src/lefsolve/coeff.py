"""Coefficient fields p(x), q(x) on the exterior domain.

A field is either a builtin family with analytically known tails or a
parsed expression in ``r`` and ``theta``:

* ``power``      C * r^-sigma
* ``logpower``   C * r^-sigma * ln(e + r)^-tau
* ``angular``    (radial family) * (a + b cos(k theta)),  a > |b|
* ``zero``       identically 0
* ``majorant``   max over a uniform angle grid of another field
"""

from dataclasses import dataclass, field as dc_field
import math
import re

import numpy as np

from . import expr as _expr
from .errors import NegativeCoefficient

DEFAULT_N_THETA = 4096

_FAMILY_PARAMS = {
    "power": ("C", "sigma"),
    "logpower": ("C", "sigma", "tau"),
    "zero": (),
}


@dataclass(frozen=True)
class CoefficientField:
    family: str
    params: tuple = ()
    tree: object = None
    base: "CoefficientField" = None
    holder: float = None
    source: str = dc_field(default=None, compare=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def power(cls, C=1.0, sigma=4.0):
        return cls("power", (float(C), float(sigma)))

    @classmethod
    def logpower(cls, C=1.0, sigma=2.0, tau=3.0):
        return cls("logpower", (float(C), float(sigma), float(tau)))

    @classmethod
    def angular(cls, base, a, b, k=1):
        if not base.radial or base.family in ("angular", "majorant"):
            raise ValueError("angular modulation needs a radial builtin base family")
        if not a > abs(b):
            raise ValueError("angular modulation requires a > |b|")
        return cls("angular", (float(a), float(b), int(k)), base=base)

    @classmethod
    def from_expr(cls, source, holder=None):
        tree = _expr.parse_expr(source)
        if _expr.is_zero_constant(tree):
            return cls("zero", holder=holder, source=source)
        return cls("expr", tree=tree, holder=holder, source=source)

    def with_holder(self, holder):
        if holder is not None and not 0.0 < holder < 1.0:
            raise ValueError("Hoelder exponent must lie in (0, 1)")
        return CoefficientField(
            self.family, self.params, self.tree, self.base, holder, self.source
        )

    # -- properties ---------------------------------------------------------

    @property
    def radial(self):
        if self.family == "angular":
            return self.params[1] == 0.0
        if self.family == "expr":
            return "theta" not in _expr.variables(self.tree)
        return True

    @property
    def is_zero(self):
        return self.family == "zero" or (
            self.family in ("power", "logpower") and self.params[0] == 0.0
        ) or (self.family == "majorant" and self.base.is_zero)

    def describe(self):
        if self.family == "expr":
            return self.source if self.source is not None else _expr.to_source(self.tree)
        if self.family == "majorant":
            return f"majorant[{self.params[0]}]({self.base.describe()})"
        if self.family == "angular":
            a, b, k = self.params
            return f"angular({self.base.describe()}; a={a!r}, b={b!r}, k={k})"
        names = _FAMILY_PARAMS[self.family]
        args = ", ".join(f"{n}={v!r}" for n, v in zip(names, self.params))
        return f"{self.family}({args})"

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, r, theta=0.0):
        """Vectorised evaluation without sign checks (broadcasts r, theta)."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        fam = self.family
        with np.errstate(all="ignore"):
            if fam == "zero":
                return np.zeros(np.broadcast(r, theta).shape)
            if fam == "power":
                C, sigma = self.params
                return C * r ** -sigma + 0.0 * theta
            if fam == "logpower":
                C, sigma, tau = self.params
                return C * r ** -sigma * np.log(math.e + r) ** -tau + 0.0 * theta
            if fam == "angular":
                a, b, k = self.params
                return self.base.evaluate(r) * (a + b * np.cos(k * theta))
            if fam == "expr":
                out = np.asarray(_expr.evaluate(self.tree, r, theta), dtype=float)
                shape = np.broadcast(r, theta).shape
                return out if out.shape == shape else np.broadcast_to(out, shape).copy()
            if fam == "majorant":
                angles = angle_grid(self.params[0])
                vals = self.base.evaluate(r[..., None], angles)
                return vals.max(axis=-1) + 0.0 * theta
        raise ValueError(f"unknown coefficient family {fam!r}")

    def radial_profile(self, r):
        """Values along theta = 0; only meaningful for radial fields."""
        return self.evaluate(r, 0.0)

    def checked(self, r, theta=0.0):
        """Evaluate and reject negative or non-finite values with their location."""
        vals = self.evaluate(r, theta)
        bad = ~(np.isfinite(vals) & (vals >= 0.0))
        if np.any(bad):
            rr, tt, vv = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float), vals)
            k = int(np.flatnonzero(bad.ravel())[0])
            raise NegativeCoefficient(float(vv.ravel()[k]), float(rr.ravel()[k]), float(tt.ravel()[k]))
        return vals


def angle_grid(n_theta):
    """Uniform angles 2*pi*j/n; the grid for 2n contains the grid for n."""
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def eval_coeff(fld, r, theta=0.0):
    """Value of the field at one point (r > 0); negative values are rejected."""
    if not r > 0:
        raise ValueError("r must be positive")
    return float(fld.checked(float(r), float(theta)))


def radial_majorant(fld, r, n_theta=DEFAULT_N_THETA):
    """Max of the field over ``n_theta`` uniformly spaced angles on the circle |x| = r."""
    if n_theta < 16:
        raise ValueError("n_theta must be at least 16")
    if fld.radial:
        return eval_coeff(fld, r)
    vals = fld.checked(float(r), angle_grid(n_theta))
    return float(vals.max())


def majorant_field(fld, n_theta=DEFAULT_N_THETA):
    """Radial field r -> max_theta fld(r, theta); radial fields are returned unchanged."""
    if fld.radial:
        return fld
    if n_theta < 16:
        raise ValueError("n_theta must be at least 16")
    if fld.family == "angular":
        # closed form: the modulation peaks at a + |b|
        a, b, _ = fld.params
        base = fld.base
        C = base.params[0] * (a + abs(b))
        return CoefficientField(base.family, (C,) + base.params[1:])
    return CoefficientField("majorant", (int(n_theta),), base=fld)


def check_radial(fld, radii=(1.5, 3.0, 10.0, 100.0), n_theta=64, rtol=1e-12):
    """Sample-based confirmation that evaluation does not depend on theta."""
    r = np.asarray(radii, float)[:, None]
    vals = fld.evaluate(r, angle_grid(n_theta)[None, :])
    spread = vals.max(axis=1) - vals.min(axis=1)
    return bool(np.all(spread <= rtol * np.maximum(np.abs(vals).max(axis=1), 1e-300)))


_BUILTIN = re.compile(r"^\s*builtin:\s*(?P<body>.*)$", re.S)


def parse_field(text, holder=None):
    """Build a field from config text.

    Plain text is an expression (``"(2+cos(theta))/r^4"``).  Builtin
    families use ``builtin:<name> key=value ...``, e.g.
    ``builtin:logpower C=1 sigma=3 tau=2`` or
    ``builtin:angular base=power C=1 sigma=4 a=2 b=1 k=1``.
    """
    m = _BUILTIN.match(text)
    if m is None:
        return CoefficientField.from_expr(text, holder=holder)
    words = m.group("body").split()
    if not words:
        raise ValueError("empty builtin field specification")
    name, kv = words[0], {}
    for w in words[1:]:
        if "=" not in w:
            raise ValueError(f"builtin parameter {w!r} is not key=value")
        k, v = w.split("=", 1)
        kv[k] = v
    if name == "angular":
        base_name = kv.pop("base", "power")
        a = float(kv.pop("a"))
        b = float(kv.pop("b"))
        k = int(kv.pop("k", 1))
        base = _family(base_name, kv)
        return CoefficientField.angular(base, a, b, k).with_holder(holder)
    return _family(name, kv).with_holder(holder)


def _family(name, kv):
    if name not in _FAMILY_PARAMS:
        raise ValueError(f"unknown builtin family {name!r}")
    names = _FAMILY_PARAMS[name]
    extra = set(kv) - set(names)
    if extra:
        raise ValueError(f"unknown parameters {sorted(extra)} for family {name!r}")
    missing = [n for n in names if n not in kv]
    if missing:
        raise ValueError(f"missing parameters {missing} for family {name!r}")
    return CoefficientField(name, tuple(float(kv[n]) for n in names))

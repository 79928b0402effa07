import math

import numpy as np
import pytest

from lefsolve.coeff import CoefficientField, parse_field
from lefsolve.errors import NonIntegrable
from lefsolve.quad import (fubini_identity_check, ip_tail, log_weighted_s_integral, phi, psi,
                           tail_integral, weighted_log_integral)

R4 = CoefficientField.power(1.0, 4.0)
ZERO = CoefficientField.zero()


def closed_ip_r4(r):
    # antiderivative of rho^-3 ln(rho) is -ln(rho)/(2 rho^2) - 1/(4 rho^2)
    return math.log(r) / (2 * r * r) + 1 / (4 * r * r)


@pytest.mark.parametrize("lower", [2.0, 1.5, 10.0, 1e3])
def test_weighted_log_integral_closed_form(lower):
    res = weighted_log_integral(R4, lower)
    assert res.converged
    assert res.value == pytest.approx(closed_ip_r4(lower), rel=1e-10)
    assert 0 <= res.tail_bound <= 1e-10 * res.value


def test_weighted_log_integral_value_at_two():
    assert weighted_log_integral(R4, 2.0).value == pytest.approx(math.log(2) / 8 + 1 / 16, rel=1e-12)


def test_weighted_log_integral_zero_field():
    res = weighted_log_integral(ZERO, 2.0)
    assert res.value == 0.0 and res.converged


def test_divergent_tail_detected():
    with pytest.raises(NonIntegrable):
        weighted_log_integral(CoefficientField.power(1.0, 2.0), 2.0)


def test_lower_limit_must_exceed_one():
    with pytest.raises(ValueError):
        weighted_log_integral(R4, 1.0)


def test_non_radial_field_refused():
    with pytest.raises(ValueError):
        weighted_log_integral(parse_field("(2+cos(theta))/r^4"), 2.0)


@pytest.mark.parametrize("T", [0.0, math.log(2.0), 2.0, 5.0])
def test_psi_closed_form(T):
    assert psi(R4, T).value == pytest.approx(math.exp(-2 * T) / 4, rel=1e-12)


@pytest.mark.parametrize("S", [0.0, 1.0, 7.5])
def test_phi_closed_form(S):
    assert phi(R4, S).value == pytest.approx(math.exp(-2 * S) / 2, rel=1e-12)


def test_psi_zero_field():
    assert psi(ZERO, 3.0).value == 0.0


def test_psi_r3_at_one():
    # e^{2s} p(e^s) = e^{-s}, so psi(T) = e^{-T}
    assert psi(CoefficientField.power(1.0, 3.0), 1.0).value == pytest.approx(math.exp(-1.0), rel=1e-12)


@pytest.mark.parametrize("fld, T", [
    (R4, 0.0), (R4, math.log(2.0)), (R4, 2.0),
    (CoefficientField.power(1.0, 3.0), 1.0),
    (CoefficientField.logpower(1.0, 2.5, 2.0), 0.5),
])
def test_fubini_identity(fld, T):
    assert fubini_identity_check(fld, T) <= 1e-9


def test_fubini_zero_field():
    assert fubini_identity_check(ZERO, 1.0) == 0.0


def test_psi_r3_against_trapezoid_oracle():
    # plain trapezoid on a long uniform grid; the tail past 40 is below 1e-16
    T = 1.0
    s = np.linspace(T, 40.0, 2_000_001)
    f = (s - T) * np.exp(-s)
    oracle = float(np.trapezoid(f, s)) if hasattr(np, "trapezoid") else float(np.trapz(f, s))
    assert psi(CoefficientField.power(1.0, 3.0), T).value == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("r", [2.0, 10.0, 64.0])
def test_change_of_variables_identity(r):
    s_form = log_weighted_s_integral(R4, math.log(r)).value
    r_form = weighted_log_integral(R4, r).value
    assert s_form == pytest.approx(r_form, rel=1e-10)


def test_change_of_variables_logpower():
    fld = CoefficientField.logpower(1.0, 3.0, 2.0)
    assert log_weighted_s_integral(fld, math.log(3.0)).value == pytest.approx(
        weighted_log_integral(fld, 3.0).value, rel=1e-9)


def test_ip_tail_examples():
    assert ip_tail(R4, 2.0) == pytest.approx(0.149143397570, rel=1e-10)
    assert ip_tail(R4, 10.0) == pytest.approx(math.log(10) / 200 + 1 / 400, rel=1e-10)
    assert ip_tail(ZERO, 5.0) == 0.0


def test_ip_tail_decreases():
    vals = [ip_tail(R4, r) for r in (2, 4, 8, 16, 32)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_tail_integral_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        tail_integral(lambda x: np.exp(-x), 1.0, 0.5)


def test_tail_integral_exponential():
    res = tail_integral(lambda x: np.exp(-x), 0.0, 1e-12, panels="shift")
    assert res.converged and res.value == pytest.approx(1.0, rel=1e-12)

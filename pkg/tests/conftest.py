import math

import numpy as np
import pytest

from lefsolve import CoefficientField, ProblemSpec, parse_field, solve_radial

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        )
        return passed
    return record


R4 = CoefficientField.power(1.0, 4.0)
ZERO = CoefficientField.zero()


def make_spec(p=R4, q=R4, alpha=0.3, beta=0.2, c=1.0, A=1.0):
    if isinstance(p, str):
        p = parse_field(p)
    if isinstance(q, str):
        q = parse_field(q)
    return ProblemSpec(alpha, beta, c, A, p, q)


@pytest.fixture(scope="session")
def coupled_spec():
    return make_spec()


@pytest.fixture(scope="session")
def decoupled_spec():
    return make_spec(q=ZERO)


@pytest.fixture(scope="session")
def zero_spec():
    return make_spec(ZERO, ZERO)


@pytest.fixture(scope="session")
def decoupled_solution(decoupled_spec):
    return solve_radial(decoupled_spec, n=4097, S_span=10.0, picard_tol=1e-12)


@pytest.fixture(scope="session")
def coupled_solution(coupled_spec):
    return solve_radial(coupled_spec, n=4097, picard_tol=1e-12)


def decoupled_u(r):
    return 1.0 - 0.25 / np.asarray(r) ** 2


LN2 = math.log(2.0)


@pytest.fixture(scope="session")
def radial_annulus(coupled_spec):
    from lefsolve.annulus import monotone_iterate, radial_supersolution
    sup = radial_supersolution(coupled_spec, n_r=257, n_theta=64, r_outer=64.0)
    sol = monotone_iterate(coupled_spec, sup.grid, sup.u, sup.v)
    return sup, sol


@pytest.fixture(scope="session")
def angular_annulus():
    from lefsolve.annulus import monotone_iterate, radial_supersolution
    spec = make_spec("(2+cos(theta))/r^4", R4)
    sup = radial_supersolution(spec, n_r=257, n_theta=64, r_outer=64.0)
    sol = monotone_iterate(spec, sup.grid, sup.u, sup.v)
    return spec, sup, sol

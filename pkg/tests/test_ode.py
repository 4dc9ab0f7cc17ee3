import numpy as np
import pytest

from sbmexit.constants import exponents
from sbmexit.ode import (BoundaryDatum, comparison_checks, dU_dlambda, solve_U, solve_U_infinity, solve_V)
from sbmexit.results import all_passed


@pytest.mark.parametrize("d", [1, 2, 3])
def test_closed_form_at_lambda_d(d):
    lam = exponents(d).lambda_d
    sol = solve_U(d, lam, 1.0)
    r = np.linspace(1, 50, 500)
    assert np.max(np.abs(sol.at(r) - lam / r**2)) < 1e-8
    assert sol.residual() < 1e-8


@pytest.mark.parametrize("lam", [0.5, 20.0])
def test_profile_shape(lam):
    sol = solve_U(3, lam, 1.0)
    assert sol.at(1.0) == pytest.approx(lam, rel=1e-10)
    r = np.geomspace(1, 500, 200)
    u = sol.at(r)
    assert np.all(u > 0) and np.all(np.diff(u) < 0)
    assert sol.farfield_error() < 1e-4


def test_scaling_against_direct_shooting():
    lam, eps, r = 3.0, 0.4, 1.3
    direct = solve_U(3, lam, eps, rescale=False).at(r)
    assert direct == pytest.approx(solve_U(3, lam * eps**2, 1.0).at(r / eps) / eps**2, rel=1e-8)


def test_comparison_principle():
    assert all_passed(comparison_checks(3))


def test_infinite_datum_dominates():
    uinf = solve_U_infinity(3, 1.0)
    r = np.array([1.5, 2.0, 5.0])
    assert np.all(uinf.at(r) > solve_U(3, 1e4, 1.0).at(r))
    assert uinf.at(2.0) == pytest.approx(4.6435, abs=2e-3)


def test_dU_dlambda_at_lambda_d_is_power_law():
    # at lambda_d the derivative is r^-p exactly (unit radius)
    p = exponents(3).p
    for r in (1.5, 3.0, 10.0):
        assert dU_dlambda(3, 2.0, 1.0, r) == pytest.approx(r ** (-p), rel=1e-6)


def test_solve_V_and_errors():
    v = solve_V(3, 1.0)
    assert v.residual() < 1e-6
    with pytest.raises(ValueError):
        solve_U(3, -1.0, 1.0)
    with pytest.raises(ValueError):
        solve_U(3, 1.0, 0.0)
    with pytest.raises(ValueError):
        solve_V(1, 1.0)
    with pytest.raises(ValueError):
        BoundaryDatum.finite(-1.0)


def test_csv_header():
    text = solve_U(3, 2.0, 1.0).to_csv()
    assert text.splitlines()[0] == "r,U,Uprime"

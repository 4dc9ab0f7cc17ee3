import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbmexit.constants import (ball_volume, check_dimension, exponents, green_half_laplacian, psi0,
                               v_infinity)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_exponent_identities(d):
    e = exponents(d)
    assert e.p == pytest.approx(e.mu + e.nu, abs=1e-14)
    assert e.nu == pytest.approx(math.sqrt(e.mu**2 + 4 * (4 - d)), abs=1e-14)
    assert e.alpha == pytest.approx((e.p - 2) / (4 - d), abs=1e-14)
    assert e.lambda_d == 2 * (4 - d)
    # p solves p(p - mu) ... equivalently p^2 - 2 mu p = 2 lambda_d
    assert e.p * (e.p - 2 * e.mu) == pytest.approx(2 * e.lambda_d, rel=1e-13)


def test_d3_values():
    e = exponents(3)
    assert e.p == pytest.approx((1 + math.sqrt(17)) / 2, abs=1e-14)
    assert e.nu == pytest.approx(math.sqrt(17) / 2, abs=1e-14)


@pytest.mark.parametrize("d", [0, 4, 2.5, True, "3"])
def test_bad_dimension(d):
    with pytest.raises(ValueError):
        check_dimension(d)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_psi0_d3_times_hit_probability_is_green(eps):
    # psi0(eps) * (eps/|x|) does not depend on eps
    assert psi0(3, eps) * eps == pytest.approx(1 / (2 * math.pi), rel=1e-12)


def test_psi0_d2_and_errors():
    assert psi0(2, 0.1) == pytest.approx(math.log(10) / math.pi)
    assert psi0(2, 2.0) == 0.0
    with pytest.raises(ValueError):
        psi0(1, 0.1)
    with pytest.raises(ValueError):
        psi0(3, 0.0)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_v_infinity_solves_ode(r):
    # V = lambda_d / r^2 solves V'' + (d-1)/r V' = V^2 for each d
    for d in (1, 2, 3):
        lam = exponents(d).lambda_d
        v = v_infinity(d, r)
        lhs = 6 * lam / r**4 - (d - 1) * 2 * lam / r**4
        assert lhs == pytest.approx(v * v, rel=1e-12)


def test_v_infinity_arrays_and_errors():
    r = np.array([1.0, 2.0])
    assert np.allclose(v_infinity(3, r), [2.0, 0.5])
    with pytest.raises(ValueError):
        v_infinity(3, 0.0)
    with pytest.raises(ValueError):
        v_infinity(3, np.array([1.0, -1.0]))


def test_green_and_volume():
    assert green_half_laplacian(3, 2.0) == pytest.approx(1 / (4 * math.pi))
    with pytest.raises(ValueError):
        green_half_laplacian(2, 1.0)
    assert ball_volume(3, 2.0) == pytest.approx(4 / 3 * math.pi * 8)
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(1, 0.5) == pytest.approx(1.0)

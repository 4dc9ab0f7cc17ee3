import math

import numpy as np
import pytest

from sbmexit import bessel
from sbmexit.constants import exponents
from sbmexit.rng import stream

NU = exponents(3).nu


def test_hit_probability():
    assert bessel.hit_probability(NU, 2.0, 1.0) == pytest.approx(2 ** (-2 * NU))
    assert bessel.hit_probability(NU, 1.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        bessel.hit_probability(NU, 0.5, 1.0)
    with pytest.raises(ValueError):
        bessel.hit_probability(-1.0, 2.0, 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        bessel.BesselParams(3.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        bessel.BesselParams(3.0, 2.0, 1.0, dt=0.0)


@pytest.mark.parametrize("method", ["lamperti", "euler"])
def test_conditioned_path_ends_on_sphere(method):
    p = bessel.BesselParams(2 + 2 * NU, 2.0, 1.0, dt=1e-3)
    t, rho = bessel.sample_conditioned_path(p, NU, stream(1, "bessel", 0), method=method)
    assert rho[0] == pytest.approx(2.0) and rho[-1] == pytest.approx(1.0)
    assert np.all(np.diff(t) > 0) and np.all(rho >= 1.0 - 1e-12)


def test_lemma41_target_formula():
    assert bessel.lemma41_target(NU, 2.0, 2.0) == pytest.approx(2 ** ((math.sqrt(17) - 1) / 2), rel=1e-12)


def test_lemma41_small():
    assert bessel.lemma41_check(NU, 2.0, n=5000).passed


def test_hitting_small():
    assert bessel.hitting_check(NU, 2.0, 1.0, n=20_000).passed


def test_prop43_small():
    res = bessel.prop43_two_sided(3, 1.0, 0.5, n=5000, dt=1e-2)
    assert all(r.passed for r in res if "truncation" not in r.name)


def test_feynman_kac_small():
    assert bessel.feynman_kac_check(n=5000, dt=1e-2).passed


def test_f_lambda_is_one_at_lambda_d():
    est = bessel.f_lambda(3, 2.0, 3.0, n=200)
    assert est.mean == pytest.approx(1.0, abs=1e-9)


def test_f_lambda_direction():
    # above lambda_d the factor is below 1, below lambda_d above 1
    assert bessel.f_lambda(3, 8.0, 3.0, n=2000).mean < 1.0
    assert bessel.f_lambda(3, 0.5, 3.0, n=2000).mean > 1.0


def test_reproducible():
    a = bessel.f_lambda(3, 8.0, 3.0, n=500, seed=3)
    b = bessel.f_lambda(3, 8.0, 3.0, n=500, seed=3)
    assert a == b

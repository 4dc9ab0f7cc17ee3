import pytest

from sbmexit import verify
from sbmexit.ode import dU_dlambda


def test_preconditions():
    with pytest.raises(ValueError):
        verify.check_prop44(verify.VerifyConfig(x=0.2, eps=(0.3,)))
    with pytest.raises(ValueError):
        verify.check_theorem14(verify.VerifyConfig(kappa=-1.0))
    with pytest.raises(ValueError):
        verify.run_experiment("nope")
    with pytest.raises(ValueError):
        verify.check_theorem13(verify.VerifyConfig(d=1))


def test_finite_n_inner_mean_limits():
    # as N grows the estimator mean approaches the N = infinity value at lam_eff(N)
    big = verify.finite_n_inner_mean(3, 10**7, 2.0, 0.3, 1.0)
    small = verify.finite_n_inner_mean(3, 600, 2.0, 0.3, 1.0)
    assert 0 < big < small < 1


def test_martingales_small():
    res, dumps = verify.check_martingales(verify.VerifyConfig(scale=0.1))
    assert all(r.passed for r in res)
    assert dumps["martingale_samples.csv"].startswith("replicate,Z_eps1,Z_eps2")


def test_ae10_small():
    res, _ = verify.cross_method_ae10(verify.VerifyConfig(scale=0.2))
    assert all(r.passed for r in res)
    # below the closed form for lam > lambda_d
    assert dU_dlambda(3, 4.0, 0.5, 2.0) * 0.5 ** (2 - 2.5615528128088303) < 2 ** -2.5615528128088303


def test_densities_small():
    res, dumps = verify.boundary_measure_densities(verify.VerifyConfig(scale=0.1))
    assert all(r.passed for r in res)
    assert "densities.csv" in dumps

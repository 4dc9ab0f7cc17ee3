import math

import numpy as np
import pytest

from sbmexit import particle
from sbmexit.ode import solve_U
from sbmexit.results import MCEstimate

C = np.array([1.0, 0.0, 0.0])


def test_initial_measure():
    m = particle.InitialMeasure([((0, 0, 0), 1.0), ((0, 1, 0), 2.0)])
    assert m.total_mass == 3.0 and m.dim == 3
    with pytest.raises(ValueError):
        particle.InitialMeasure.dirac((0, 0, 0), -1.0)


def test_sphere_family():
    s = particle.SphereFamily(C, (0.3, 0.2), track_inner=True)
    assert s.all_radii == (0.3, 0.2, 0.15, 0.1)
    with pytest.raises(ValueError):
        particle.SphereFamily(C, (0.2, 0.3))
    with pytest.raises(ValueError):
        s.check_admissible([[0.9, 0, 0]])


def test_reproducible_and_thread_independent():
    s = particle.SphereFamily(C, (0.3,))
    kw = dict(h=0, r_kill=2.0, seed=5)
    a = particle.simulate_cluster(3, np.zeros(3), 50, s, 600, threads=1, **kw)
    b = particle.simulate_cluster(3, np.zeros(3), 50, s, 600, threads=3, **kw)
    assert np.array_equal(a.counts, b.counts)
    assert np.array_equal(a.completions[("mean",)], b.completions[("mean",)])


def test_laplace_identity_exact_at_small_n():
    # N (1 - E[s^Z]) = U^{N(1-s), eps}(|x|) at every N
    N, lam, eps = 20, 1.0, 0.3
    s = particle.SphereFamily(C, (eps,))
    out = particle.simulate_cluster(3, np.zeros(3), N, s, 40_000, h=0, r_kill=2.0,
                                    functionals=particle.Functionals(laplace=(lam,)), seed=11)
    est = MCEstimate.from_samples(N * (1 - out.laplace_samples(lam)))
    theta = N * (1 - math.exp(-lam / N))
    target = solve_U(3, theta, eps).at(1.0)
    assert abs(est.mean - target) <= 4 * est.stderr


def test_exit_mean_small():
    assert particle.exit_mean_check(n=2000).passed


def test_tilted_requires_large_n():
    s = particle.SphereFamily(C, (0.2,))
    with pytest.raises(ValueError):      # q = 2/(10*0.04) > 1
        particle.simulate_cluster(3, np.zeros(3), 10, s, 10, h=0, r_kill=2.0,
                                  functionals=particle.Functionals(tilted=(2.0,)), seed=1)
    out = particle.simulate_cluster(3, np.zeros(3), 10, s, 10, h=0, r_kill=2.0, seed=1)
    with pytest.raises(ValueError):
        out.tilted_samples(0.1)           # not requested for the completion


def test_local_time_mean_d3():
    # E N0(L^x) = G(0, x) = 1/(2 pi |x|)
    s = particle.SphereFamily(C, (0.2,))
    out = particle.simulate_cluster(3, np.zeros(3), 100, s, 20_000, r_kill=2.0, seed=2)
    est = MCEstimate.from_samples(100 * out.local_time_samples())
    assert abs(est.mean - 1 / (2 * math.pi)) <= 4 * est.stderr


def test_null_cluster_far_away():
    s = particle.SphereFamily(np.array([50.0, 0, 0]), (0.1,))
    out = particle.simulate_cluster(3, np.zeros(3), 50, s, 200, h=0, r_kill=55.0, seed=3)
    assert out.exit_mass.sum() < 0.1


def test_population_cap():
    s = particle.SphereFamily(C, (0.3,))
    with pytest.raises(particle.PopulationCapError):
        particle.simulate_cluster(3, np.zeros(3), 1000, s, 400, h=0, r_kill=2.0, seed=4, max_events=5)


def test_preconditions():
    s = particle.SphereFamily(C, (0.3,))
    with pytest.raises(ValueError):
        particle.simulate_cluster(3, np.zeros(3), 0, s, 1)
    with pytest.raises(ValueError):
        particle.simulate_cluster(3, np.zeros(3), 10, s, 1, r_kill=0.5)
    with pytest.raises(ValueError):
        particle.local_time_estimate(1.0, 10, 3, 0.0)


def test_csv_and_summary():
    s = particle.SphereFamily(C, (0.3,))
    out = particle.simulate_superposition(3, particle.InitialMeasure.dirac(np.zeros(3)), 20, s, 5, seed=6)
    assert out.to_csv().splitlines()[0] == "replicate,eps_0,exit_mass_0,local_time,range_hit_0"
    assert particle.summary(out)["n"] == 5

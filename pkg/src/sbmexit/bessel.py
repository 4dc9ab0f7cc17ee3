"""Bessel processes, their conditioned versions, and exponential path functionals.

Paths are simulated on the Lamperti clock by default: log(rho/R) is a
Brownian motion with constant drift delta/2 - 1, so there is no stiffness
near the inner sphere and first passage is detected with an exact
Brownian-bridge test.  An Euler-Maruyama scheme on rho itself is kept as
an alternative (``method="euler"``).

Conditioning on {tau_R < inf} is the h-transform with h(r) = r^{-2 nu},
which turns dimension 2 + 2 nu into 2 - 2 nu (drift -nu on the clock).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _paths
from .constants import check_dimension, exponents, v_infinity
from .results import CheckResult, MCEstimate, at_least, at_most, within_stderr
from .rng import DEFAULT_SEED, stream

DEFAULT_DT = 1e-3
DEFAULT_MAX_STEPS = 10_000_000
TABLE_POINTS = 8001


class PathBudgetError(RuntimeError):
    """A simulated path used up its step budget before terminating."""


@dataclass(frozen=True)
class BesselParams:
    dim_param: float
    start: float
    inner_radius: float
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not self.inner_radius > 0:
            raise ValueError("inner_radius must be positive")
        if not self.start >= self.inner_radius:
            raise ValueError("start must be >= inner_radius")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class Integrand:
    """h(x) = g(R e^x) R^2 e^{2x}: a uniform table on [0, dx*(len-1)] plus a*exp(b*x) beyond."""

    table: np.ndarray
    dx: float
    tail_a: float
    tail_b: float

    @classmethod
    def power(cls, a: float, b: float) -> "Integrand":
        """h(x) = a e^{b x}, i.e. g(rho) = a R^{-2} (rho/R)^{b-2}."""
        return cls(np.zeros(0), 1.0, float(a), float(b))

    @classmethod
    def from_function(cls, g: Callable, R: float, x_max: float, points: int = TABLE_POINTS,
                      tail: tuple[float, float] | None = None) -> "Integrand":
        xs = np.linspace(0.0, x_max, points)
        rho = R * np.exp(xs)
        tab = np.asarray(g(rho), dtype=float) * rho * rho
        if tail is None:
            # continue with the power law through the last two nodes
            b = (math.log(abs(tab[-1]) + 1e-300) - math.log(abs(tab[-2]) + 1e-300)) / (xs[-1] - xs[-2])
            a = tab[-1] * math.exp(-b * xs[-1])
            tail = (a, b)
        return cls(np.ascontiguousarray(tab), float(xs[1] - xs[0]), float(tail[0]), float(tail[1]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(lambda v: _paths._h(v, self.table, self.dx, self.tail_a, self.tail_b))(x)


ZERO = Integrand.power(0.0, 0.0)


def _run(x0, drift, dI, n, integrand, seed, module_key, k, *, x_cap=np.inf, kill_tol=0.0, t_horizon=0.0,
         scale2=1.0, max_steps=DEFAULT_MAX_STEPS):
    rng = stream(seed, module_key, k)
    out = _paths.lamperti_paths(float(x0), float(drift), float(dI), int(n), integrand.table, integrand.dx,
                                integrand.tail_a, integrand.tail_b, float(x_cap), float(kill_tol),
                                float(t_horizon), float(scale2), int(max_steps), rng)
    if np.any(out[0] == _paths.BUDGET):
        raise PathBudgetError(f"{int(np.sum(out[0] == _paths.BUDGET))} path(s) exceeded {max_steps} steps")
    return out


def hit_probability(nu: float, r: float, R: float) -> float:
    """P_r(tau_R < inf) for a Bessel process of dimension 2 + 2 nu."""
    if not R > 0:
        raise ValueError("R must be positive")
    if r < R:
        raise ValueError("need r >= R")
    if not nu > 0:
        raise ValueError("nu must be positive")
    return (R / r) ** (2.0 * nu)


def sample_conditioned_path(params: BesselParams, nu: float, rng_stream: np.random.Generator, *,
                            method: str = "lamperti", max_steps: int = DEFAULT_MAX_STEPS,
                            c_cap: float = 0.01):
    """One path of the (2+2nu)-Bessel process conditioned to hit the inner sphere.

    Returns arrays (t, rho); the last entry is at the inner radius.  With
    the Lamperti scheme the clock step is dt / R^2, so real-time steps near
    the target are about dt.
    """
    R = params.inner_radius
    if params.start == R:
        return np.zeros(1), np.array([R])
    if method == "lamperti":
        ok, ts, xs = _paths.lamperti_trace(math.log(params.start / R), -float(nu), params.dt / R**2, max_steps,
                                           rng_stream)
        if not ok:
            raise PathBudgetError(f"conditioned path did not hit within {max_steps} steps")
        e2 = np.exp(2 * xs)
        real = np.concatenate(([0.0], np.cumsum(0.5 * (e2[1:] + e2[:-1]) * np.diff(ts)))) * R * R
        return real, R * np.exp(xs)
    if method == "euler":
        rho = [params.start]
        t = [0.0]
        dim = 2.0 - 2.0 * nu
        b = 0.5 * (dim - 1.0)
        r = params.start
        for _ in range(max_steps):
            h = min(params.dt, c_cap * r * r)
            rn = abs(r + b / r * h + math.sqrt(h) * rng_stream.standard_normal())
            cross = rn <= R or rng_stream.random() < math.exp(-2.0 * (r - R) * (rn - R) / h)
            t.append(t[-1] + h)
            if cross:
                rho.append(R)
                return np.array(t), np.array(rho)
            rho.append(rn)
            r = rn
        raise PathBudgetError(f"conditioned path did not hit within {max_steps} steps")
    raise ValueError(f"unknown method {method!r}")


def conditioned_functional(nu: float, r: float, integrand: Integrand, n: int, *, R: float = 1.0,
                           dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, k: int = 0, sign: float = -1.0,
                           tilt: float | None = None, method: str = "lamperti", c_cap: float = 0.01):
    """Samples of exp(sign * int_0^{tau_R} g(rho_s) ds) under P_r^{(2+2nu)}( . | tau_R < inf).

    ``tilt`` runs the clock drift at -tilt instead of -nu and multiplies by
    the Girsanov likelihood ratio (importance sampling).
    """
    x0 = math.log(r / R)
    dI = dt / R**2
    if method == "euler":
        if tilt is not None:
            raise ValueError("tilted sampling is only available on the Lamperti clock")
        rng = stream(seed, "bessel", k)
        out = _paths.euler_paths(float(r), float(R), 2.0 - 2.0 * nu, float(dt), float(c_cap), int(n),
                                 integrand.table, integrand.dx, integrand.tail_a, integrand.tail_b, np.inf,
                                 DEFAULT_MAX_STEPS, rng)
        if np.any(out[0] == _paths.BUDGET):
            raise PathBudgetError("Euler path exceeded its step budget")
        return np.exp(sign * out[1])
    if method != "lamperti":
        raise ValueError(f"unknown method {method!r}")
    drift = -nu if tilt is None else -float(tilt)
    status, acc, clock, _, _ = _run(x0, drift, dI, n, integrand, seed, "bessel", k)
    vals = sign * acc
    if tilt is not None:
        # dP_nu/dP_tilt on the path up to the hit of 0 from x0
        vals = vals + (nu - tilt) * x0 - 0.5 * (nu * nu - tilt * tilt) * clock
    return np.exp(vals)


def auto_tilt(nu: float, gamma: float) -> float | None:
    """Drift for importance sampling of exp(gamma * tau) on the clock.

    The plain estimator has finite variance only when 4 gamma <= nu^2;
    otherwise pick the midpoint between the zero-variance drift
    sqrt(nu^2 - 2 gamma) and the largest drift with finite variance.
    """
    if 4.0 * gamma <= nu * nu:
        return None
    lo = math.sqrt(nu * nu - 2.0 * gamma)
    hi = min(nu, math.sqrt(2.0 * (nu * nu - 2.0 * gamma)))
    return 0.5 * (lo + hi)


def lemma41_target(nu: float, gamma: float, r: float) -> float:
    return r ** (nu - math.sqrt(nu * nu - 2.0 * gamma))


def lemma41_check(nu: float, gamma: float, q: float = 2.0, r: float = 2.0, n: int = 100_000, *,
                  dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, tilt="auto", method: str = "lamperti",
                  r_grid=(1.5, 2.0, 4.0, 8.0, 16.0), k: int = 0) -> CheckResult:
    """Monte Carlo check of the exponential functionals of int gamma / rho^q.

    q == 2: E_r(exp(int gamma/rho^2) | tau_1 < inf) = r^{nu - sqrt(nu^2 - 2 gamma)} at 3 stderr.
    q > 2:  ``gamma > 0`` checks the supremum over ``r_grid`` of the + functional is
            finite and attained in the tail (plateau); ``gamma < 0`` checks the
            infimum of exp(-|gamma| int rho^-q) stays bounded away from 0.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    if q == 2.0:
        if not 0 <= 2 * gamma <= nu * nu:
            raise ValueError("need 0 <= 2*gamma <= nu^2")
        target = lemma41_target(nu, gamma, r)
        if gamma == 0:
            return within_stderr(f"bessel.lemma41[nu={nu:.6g},gamma=0,r={r:g}]", 1.0, 0.0, target, note="empty integrand")
        if tilt == "auto":
            tilt = auto_tilt(nu, gamma) if method == "lamperti" else None
        if tilt is not None and not 0 < tilt:
            raise ValueError("tilt must be positive")
        if tilt is not None and 2.0 * gamma == nu * nu:
            raise ValueError("importance sampling needs 2*gamma < nu^2")
        samples = conditioned_functional(nu, r, Integrand.power(gamma, 0.0), n, dt=dt, seed=seed, k=k, sign=1.0,
                                         tilt=tilt, method=method)
        est = MCEstimate.from_samples(samples)
        return within_stderr(f"bessel.lemma41[nu={nu:.6g},gamma={gamma:g},r={r:g}]", est.mean, est.stderr, target,
                             n=n, dt=dt, tilt=-1.0 if tilt is None else tilt, method=method)
    if not q > 2:
        raise ValueError("q must be 2 (closed form) or > 2 (bounds)")
    sign = 1.0 if gamma > 0 else -1.0
    ests = []
    for j, rr in enumerate(r_grid):
        # h(x) = |gamma| e^{(2-q) x} for R = 1
        s = conditioned_functional(nu, rr, Integrand.power(abs(gamma), 2.0 - q), n, dt=dt, seed=seed,
                                   k=k + j, sign=sign, method=method)
        ests.append(MCEstimate.from_samples(s))
    means = np.array([e.mean for e in ests])
    ses = np.array([e.stderr for e in ests])
    tag = f"nu={nu:.6g},gamma={gamma:g},q={q:g}"
    if sign > 0:
        i = int(np.argmax(means))
        # bounded: the largest value is not growing at the end of the grid
        res = at_most(f"bessel.lemma41.sup[{tag}]", float(means[-1] - means[-2]), 0.0,
                      se=float(math.hypot(ses[-1], ses[-2])), r_grid=list(r_grid), values=list(means),
                      sup=float(means[i]))
    else:
        i = int(np.argmin(means))
        res = at_least(f"bessel.lemma41.inf[{tag}]", float(means[i]), 0.0, se=0.0, slack=-1e-12,
                       r_grid=list(r_grid), values=list(means))
    return res


def hitting_check(nu: float, r: float, R: float, n: int = 100_000, *, dt: float = DEFAULT_DT,
                  cap_factor: float = 1e3, seed: int = DEFAULT_SEED, k: int = 0) -> CheckResult:
    """Empirical P_r(tau_R < inf) for the unconditioned (2+2nu)-Bessel process.

    Paths that reach r_cap = cap_factor * r are stopped; their later hitting
    probability (R/r_cap)^{2 nu} is added exactly by the strong Markov property.
    """
    target = hit_probability(nu, r, R)
    x_cap = math.log(cap_factor * r / R)
    status, _, _, _, _ = _run(math.log(r / R), nu, dt / R**2, n, ZERO, seed, "bessel", k, x_cap=x_cap)
    tail = (1.0 / (cap_factor * r / R)) ** (2 * nu)
    samples = np.where(status == _paths.HIT, 1.0, tail)
    est = MCEstimate.from_samples(samples)
    return within_stderr(f"bessel.hit[nu={nu:.6g},r={r:g},R={R:g}]", est.mean, est.stderr, target,
                         cap_correction=tail, n=n)


def killed_functional(d: int, x_norm: float, eps: float, integrand: Integrand, n: int, *,
                      dt: float = DEFAULT_DT, kill_tol: float = 1e-10, cap_factor: float = 1e4,
                      seed: int = DEFAULT_SEED, k: int = 0):
    """Samples of 1(tau_eps < inf) exp(-int_0^{tau_eps} g(|B_s|) ds) for d-dim BM from |x| = x_norm.

    Returns (samples, bias_bound).  A path is stopped when its weight falls
    below ``kill_tol`` or it reaches cap_factor * x_norm; for g >= 0 the
    mass dropped is at most kill_tol + (eps / r_cap)^{d-2} in d = 3.
    """
    d = check_dimension(d)
    mu = exponents(d).mu
    x_cap = math.log(cap_factor * x_norm / eps)
    status, acc, _, _, _ = _run(math.log(x_norm / eps), mu, dt / eps**2, n, integrand, seed, "bessel", k,
                                x_cap=x_cap, kill_tol=kill_tol)
    samples = np.where(status == _paths.HIT, np.exp(-acc), 0.0)
    escape = (eps / (cap_factor * x_norm)) ** max(d - 2, 0) if d == 3 else 1.0
    bound = kill_tol + escape * float(np.mean(np.where(status == _paths.HIT, 0.0, np.exp(-acc))))
    return samples, bound


def prop43_two_sided(d: int, x_norm: float, eps: float, g: Callable | None = None, n: int = 100_000, *,
                     dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, k: int = 0, tol_factor: float = 0.1):
    """Both sides of the killed-BM / conditioned-Bessel identity for a radial rate g.

    ``g`` is a vectorized function of the radius (default V^inf).  Returns a
    list of CheckResults: the killed-BM side against the conditioned side
    (combined 3 stderr), the truncation bias bound, and for g = V^inf the
    killed side against the closed form eps^p |x|^{-p}.
    """
    d = check_dimension(d)
    if not 0 < eps <= x_norm:
        raise ValueError("need 0 < eps <= x_norm")
    ex = exponents(d)
    vinf = g is None
    if vinf:
        g = lambda rho: v_infinity(d, rho)  # noqa: E731
    x0 = math.log(x_norm / eps)
    lhs_int = Integrand.power(ex.lambda_d, 0.0) if vinf else Integrand.from_function(g, eps, x0 + 12.0)
    lhs_s, bound = killed_functional(d, x_norm, eps, lhs_int, n, dt=dt, seed=seed, k=k)
    lhs = MCEstimate.from_samples(lhs_s)
    if vinf:
        rhs_int = ZERO
    else:
        rhs_int = Integrand.from_function(lambda rho: g(rho) - v_infinity(d, rho), eps, x0 + 12.0)
    scale = (eps / x_norm) ** ex.p
    rhs_s = conditioned_functional(ex.nu, x_norm, rhs_int, n, R=eps, dt=dt, seed=seed, k=k + 1)
    rhs = MCEstimate.from_samples(rhs_s).scaled(scale)
    tag = f"d={d},x={x_norm:g},eps={eps:g}"
    se = math.hypot(lhs.stderr, rhs.stderr)
    out = [within_stderr(f"bessel.prop43.two_sided[{tag}]", lhs.mean - rhs.mean, se, 0.0,
                         lhs=lhs.mean, lhs_stderr=lhs.stderr, rhs=rhs.mean, rhs_stderr=rhs.stderr)]
    out.append(at_most(f"bessel.prop43.truncation[{tag}]", bound, tol_factor * max(lhs.stderr, 1e-300),
                       note="horizon truncation bias bound vs tol_factor*stderr"))
    if vinf:
        out.append(within_stderr(f"bessel.prop43.closed_form[{tag}]", lhs.mean, lhs.stderr, scale))
    return out


def girsanov_check(lam: float, mu: float, r: float, R: float, t: float, n: int = 50_000, *,
                   dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, k: int = 0) -> CheckResult:
    """E^{(2+2mu)}_r[exp(-lam^2/2 int_0^{t^tau_R} rho^-2 ds)] = r^{nu-mu} E^{(2+2nu)}_r[rho_{t^tau_R}^{mu-nu}],
    nu = sqrt(lam^2 + mu^2), both sides by independent Monte Carlo."""
    if not (r > R > 0 and t > 0 and lam >= 0):
        raise ValueError("need r > R > 0, t > 0, lam >= 0")
    nu = math.hypot(lam, mu)
    x0 = math.log(r / R)
    dI = dt / R**2
    _, acc, _, _, _ = _run(x0, mu, dI, n, Integrand.power(0.5 * lam * lam, 0.0), seed, "bessel", k,
                           t_horizon=t, scale2=R * R)
    left = MCEstimate.from_samples(np.exp(-acc))
    _, _, _, xend, _ = _run(x0, nu, dI, n, ZERO, seed, "bessel", k + 1, t_horizon=t, scale2=R * R)
    right = MCEstimate.from_samples((R * np.exp(xend)) ** (mu - nu)).scaled(r ** (nu - mu))
    se = math.hypot(left.stderr, right.stderr)
    return within_stderr(f"bessel.girsanov[lam={lam:g},mu={mu:g},r={r:g},R={R:g},t={t:g}]",
                         left.mean - right.mean, se, 0.0, left=left.mean, right=right.mean)


def _u_minus_v_integrand(sol, x_max: float = 14.0) -> Integrand:
    ex = exponents(sol.d)
    # (U - V^inf)(r) r^2 = c r^{2-p} beyond the solved range
    c = (sol.values[-1] - ex.lambda_d / sol.grid[-1] ** 2) * sol.grid[-1] ** ex.p
    x_max = min(x_max, math.log(sol.grid[-1]))
    return Integrand.from_function(lambda rho: sol.at(rho) - ex.lambda_d / rho**2, 1.0, x_max,
                                   tail=(c, 2.0 - ex.p))


def f_lambda(d: int, lam: float, r: float, U1=None, n: int = 20_000, *, dt: float = DEFAULT_DT,
             seed: int = DEFAULT_SEED, k: int = 0, method: str = "lamperti") -> MCEstimate:
    """f^lam(r) = E_r^{(2+2nu)}(exp(-int_0^{tau_1} (U^{lam,1} - V^inf)(rho_s) ds) | tau_1 < inf)."""
    from .ode import solve_U

    d = check_dimension(d)
    if not r >= 1:
        raise ValueError("r must be >= 1")
    if U1 is None:
        U1 = solve_U(d, lam, 1.0)
    integrand = _u_minus_v_integrand(U1)
    s = conditioned_functional(exponents(d).nu, r, integrand, n, dt=dt, seed=seed, k=k, method=method)
    return MCEstimate.from_samples(s)


@dataclass(frozen=True)
class KEstimate:
    estimate: MCEstimate
    r_grid: tuple
    values: tuple
    stderrs: tuple
    monotone: bool
    direction: int  # -1 nonincreasing expected (lam > lambda_d), +1 nondecreasing, 0 constant


def estimate_K(d: int, lam: float, r_grid=(4.0, 8.0, 16.0, 32.0, 64.0), n: int = 20_000, *,
               dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, k: int = 0, U1=None) -> KEstimate:
    """K(lam) as the plateau of f^lam on an increasing r grid (value at the last point).

    The sequence must be monotone in the direction fixed by the sign of
    lam - lambda_d, up to 3 combined stderr between neighbours.
    """
    from .ode import solve_U

    d = check_dimension(d)
    lam_d = exponents(d).lambda_d
    if U1 is None:
        U1 = solve_U(d, lam, 1.0)
    ests = [f_lambda(d, lam, r, U1, n, dt=dt, seed=seed, k=k + j) for j, r in enumerate(r_grid)]
    means = [e.mean for e in ests]
    ses = [e.stderr for e in ests]
    direction = 0 if lam == lam_d else (-1 if lam > lam_d else 1)
    ok = True
    for a, b in zip(ests[:-1], ests[1:]):
        step = b.mean - a.mean
        tol = 3.0 * math.hypot(a.stderr, b.stderr) + 1e-12
        if direction < 0 and step > tol or direction > 0 and step < -tol or direction == 0 and abs(step) > tol:
            ok = False
    return KEstimate(ests[-1], tuple(r_grid), tuple(means), tuple(ses), ok, direction)


def feynman_kac_check(d: int = 3, lam: float = 4.0, x_norm: float = 3.0, R: float = 1.5, n: int = 50_000, *,
                      dt: float = DEFAULT_DT, seed: int = DEFAULT_SEED, k: int = 0) -> CheckResult:
    """(U^{lam,1} - V^inf)(x) = (U^{lam,1} - V^inf)(R) E_x[1(tau_R<inf) exp(-int (U+V^inf)/2 (|B_s|) ds)]."""
    from .ode import solve_U

    d = check_dimension(d)
    if not x_norm >= R > 1:
        raise ValueError("need x_norm >= R > 1")
    sol = solve_U(d, lam, 1.0)
    ex = exponents(d)
    x0 = math.log(x_norm / R)
    integrand = Integrand.from_function(lambda rho: 0.5 * (sol.at(rho) + ex.lambda_d / rho**2), R,
                                        min(x0 + 12.0, math.log(sol.grid[-1] / R)))
    samples, bound = killed_functional(d, x_norm, R, integrand, n, dt=dt, seed=seed, k=k)
    est = MCEstimate.from_samples(samples).scaled(float(sol.at(R) - ex.lambda_d / R**2))
    target = float(sol.at(x_norm) - ex.lambda_d / x_norm**2)
    return within_stderr(f"bessel.feynman_kac[d={d},lam={lam:g},x={x_norm:g},R={R:g}]", est.mean, est.stderr,
                         target, truncation_bound=bound)

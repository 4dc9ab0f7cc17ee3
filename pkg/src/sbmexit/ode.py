"""Radial exterior solutions of Delta U = U**2.

Three boundary data are supported on the sphere |x| = eps:

* a finite constant ``lam``            -> U^{lam,eps}
* ``+inf`` (blow-up at the sphere)     -> U^{inf,eps}
* a point source ``-lam*delta_0``      -> V^lam (eps = 0)

Every profile is found by shooting from the inner radius and bisecting on
the one free initial parameter until the trajectory lands on the far-field
condition U(rmax) = lambda_d / rmax**2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _rk
from .constants import check_dimension, exponents, psi0
from .results import CheckResult, at_least, at_most, within_abs

DEFAULT_RMAX = 1e3
DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-300
RESIDUAL_TOL = 1e-8
FARFIELD_TOL = 1e-4
BISECT_RTOL = 0.0  # bisect to adjacent floats; the separatrix is unstable
MAX_BISECT = 200
MAX_STEPS = 200_000


class ShootingError(RuntimeError):
    """Bisection on the shooting parameter could not be bracketed or converged."""


@dataclass(frozen=True)
class BoundaryDatum:
    kind: str  # "finite", "infinite" or "dirac"
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in ("finite", "infinite", "dirac"):
            raise ValueError(f"unknown boundary datum kind {self.kind!r}")
        if self.kind != "infinite" and not (self.lam is not None and self.lam > 0):
            raise ValueError(f"{self.kind} boundary datum needs lam > 0")

    @classmethod
    def finite(cls, lam: float) -> "BoundaryDatum":
        return cls("finite", float(lam))

    @classmethod
    def infinite(cls) -> "BoundaryDatum":
        return cls("infinite")

    @classmethod
    def dirac(cls, lam: float) -> "BoundaryDatum":
        return cls("dirac", float(lam))


def _hermite5(t, h, p0, m0, a0, p1, m1, a1):
    """Quintic Hermite value, first and second derivative on [0, h]."""
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h1 = t - 6 * t3 + 8 * t4 - 3 * t5
    h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
    h4 = -4 * t3 + 7 * t4 - 3 * t5
    h5 = 0.5 * t3 - t4 + 0.5 * t5
    val = h0 * p0 + h1 * h * m0 + h2 * h * h * a0 + (1 - h0) * p1 + h4 * h * m1 + h5 * h * h * a1
    d0 = -30 * t2 + 60 * t3 - 30 * t4
    d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4
    d2 = t - 4.5 * t2 + 6 * t3 - 2.5 * t4
    d4 = -12 * t2 + 28 * t3 - 15 * t4
    d5 = 1.5 * t2 - 4 * t3 + 2.5 * t4
    der = (d0 * (p0 - p1)) / h + d1 * m0 + d2 * h * a0 + d4 * m1 + d5 * h * a1
    s0 = -60 * t + 180 * t2 - 120 * t3
    s1 = -36 * t + 96 * t2 - 60 * t3
    s2 = 1 - 9 * t + 18 * t2 - 10 * t3
    s4 = -24 * t + 84 * t2 - 60 * t3
    s5 = 3 * t - 12 * t2 + 10 * t3
    sec = (s0 * (p0 - p1)) / (h * h) + s1 * m0 / h + s2 * a0 + s4 * m1 / h + s5 * a1
    return val, der, sec


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """A solved radial profile; immutable once built."""

    d: int
    eps: float
    datum: BoundaryDatum
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    shoot_slope: float
    rmax: float
    shoot_param: float = math.nan
    bisect_iterations: int = 0
    junctions: tuple = ()  # grid indices where a restarted shot begins
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in (self.grid, self.values, self.derivs):
            a.setflags(write=False)

    @property
    def lambda_d(self) -> float:
        return exponents(self.d).lambda_d

    def second_derivs(self, r=None, u=None, v=None):
        r = self.grid if r is None else r
        u = self.values if u is None else u
        v = self.derivs if v is None else v
        return u * u - (self.d - 1) * v / r

    @property
    def _tail_coef(self) -> float:
        # read at rmax/10: the shot is pinned to V^inf at rmax, which bends
        # the last decade by the growing mode (relative error ~1e-4 here)
        ex = exponents(self.d)
        i = min(int(np.searchsorted(self.grid, self.grid[-1] / 10.0)), self.grid.size - 1)
        r, u = self.grid[i], self.values[i]
        return (u - ex.lambda_d / r**2) * r**ex.p

    def _eval(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        val = np.empty_like(r)
        der = np.empty_like(r)
        g = self.grid
        inside = (r >= g[0]) & (r <= g[-1])
        if np.any(inside):
            rr = r[inside]
            i = np.clip(np.searchsorted(g, rr, side="right") - 1, 0, g.size - 2)
            h = g[i + 1] - g[i]
            t = (rr - g[i]) / h
            a = self.second_derivs()
            v, dv, _ = _hermite5(t, h, self.values[i], self.derivs[i], a[i],
                                 self.values[i + 1], self.derivs[i + 1], a[i + 1])
            val[inside] = v
            der[inside] = dv
        beyond = r > g[-1]
        if np.any(beyond):
            ex = exponents(self.d)
            rb = r[beyond]
            c = self._tail_coef
            val[beyond] = ex.lambda_d / rb**2 + c * rb ** (-ex.p)
            der[beyond] = -2 * ex.lambda_d / rb**3 - ex.p * c * rb ** (-ex.p - 1)
        below = r < g[0]
        if np.any(below):
            if self.datum.kind != "dirac":
                raise ValueError(f"r={r[below].min():g} is inside the inner radius {g[0]:g}")
            rb = r[below]
            vb, db = _dirac_expansion(self.d, self.datum.lam, self.shoot_param, rb)
            val[below] = vb
            der[below] = db
        if scalar:
            return float(val[0]), float(der[0])
        return val, der

    def at(self, r):
        """U(r); beyond rmax uses the lambda_d/r^2 + c r^-p tail."""
        return self._eval(r)[0]

    def deriv(self, r):
        return self._eval(r)[1]

    def residual(self) -> float:
        """Max relative ODE residual of the interpolant at step midpoints.

        Steps that bridge a restart junction are skipped; the size of the
        slope mismatch there is reported by ``junction_jump``.
        """
        g = self.grid
        h = np.diff(g)
        a = self.second_derivs()
        u, du, d2u = _hermite5(0.5, h, self.values[:-1], self.derivs[:-1], a[:-1],
                               self.values[1:], self.derivs[1:], a[1:])
        rm = g[:-1] + 0.5 * h
        lap = d2u + (self.d - 1) * du / rm
        scale = np.abs(d2u) + np.abs((self.d - 1) * du / rm) + u * u
        scale = np.where(scale > 0, scale, 1.0)
        res = np.abs(lap - u * u) / scale
        if self.junctions:
            res[np.asarray(self.junctions) - 1] = 0.0
        return float(np.max(res))

    def junction_jump(self) -> float:
        """Largest relative jump in U' across a restart junction."""
        return float(self.meta.get("junction_jump", 0.0))

    def farfield_error(self) -> float:
        """|U(rmax) rmax^2 - lambda_d| / lambda_d."""
        lam = self.lambda_d
        return abs(self.values[-1] * self.grid[-1] ** 2 - lam) / lam

    def rescaled(self, eps: float) -> "RadialSolution":
        """Map a unit-radius profile to inner radius eps: U(r) -> eps^-2 U(r/eps)."""
        if self.eps != 1.0:
            raise ValueError("only unit-radius profiles can be rescaled")
        datum = self.datum
        if datum.kind == "finite":
            datum = BoundaryDatum.finite(datum.lam / eps**2)
        return RadialSolution(
            d=self.d, eps=eps, datum=datum, grid=self.grid * eps, values=self.values / eps**2,
            derivs=self.derivs / eps**3, shoot_slope=self.shoot_slope / eps**3, rmax=self.rmax * eps,
            shoot_param=self.shoot_param, bisect_iterations=self.bisect_iterations, junctions=self.junctions,
            meta=dict(self.meta),
        )

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "U", "Uprime"])
        for r, u, v in zip(self.grid, self.values, self.derivs):
            w.writerow([repr(float(r)), repr(float(u)), repr(float(v))])
        return buf.getvalue() if fh is None else ""


def _classify(d, r0, u0, v0, r_end, lam_d, rtol):
    status, r, u, _, _, _, _ = _rk.integrate(d, r0, u0, v0, r_end, lam_d, rtol, DEFAULT_ATOL, False, MAX_STEPS, True)
    if status == _rk.STEP_FAILURE:
        raise ShootingError(f"integrator failed at r={r:g}")
    if status != _rk.REACHED_END:
        return status
    w = r * r * u
    return 1 if w > lam_d else (-1 if w < lam_d else 0)


def _bisect(g, lo, hi, widen, bisect_rtol):
    k = 0
    while g(lo) >= 0:
        k += 1
        if k > 60:
            raise ShootingError(f"no low bracket found (last tried {lo!r})")
        lo = widen(lo, -k)
    k = 0
    while g(hi) <= 0:
        k += 1
        if k > 60:
            raise ShootingError(f"no high bracket found (last tried {hi!r}); bracket=({lo!r}, {hi!r})")
        hi = widen(hi, k)
    it = 0
    mid = 0.5 * (lo + hi)
    while it < MAX_BISECT:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= bisect_rtol * (1.0 + abs(mid)):
            break
        it += 1
        s = g(mid)
        if s > 0:
            hi = mid
        elif s < 0:
            lo = mid
        else:
            lo = hi = mid
            break
    if not hi - lo <= max(bisect_rtol * (1.0 + abs(mid)), 4 * np.spacing(abs(mid) + 1e-300)):
        raise ShootingError(f"bisection did not converge in {MAX_BISECT} iterations; bracket=({lo!r}, {hi!r})")
    return lo, hi, it


MAX_RESTARTS = 12
SPLIT_RTOL = 1e-9   # bracket ends still agree to this relative level at a restart point
BLEND_RTOL = 1e-5   # bracket ends close enough that blending them is exact to O(1e-10)


def _shoot(d, r0, init, lo, hi, r_end, rtol, widen, bisect_rtol):
    """Bisect on the scalar parameter passed to ``init`` (monotone: larger -> higher).

    ``widen(x, k)`` proposes the k-th wider guess when an end of the bracket
    does not classify on the expected side.  Because the separatrix is
    unstable, one float of initial slope may not pin the far field; the
    shot is then restarted from the last radius where both bracket ends
    still agree, bisecting on U' there.
    """
    lam_d = exponents(d).lambda_d
    parts = []
    pending = []
    total_it = 0
    first = None
    start = r0
    for _ in range(MAX_RESTARTS + 1):
        def g(theta, init=init, start=start):
            u0, v0 = init(theta)
            return _classify(d, start, u0, v0, r_end, lam_d, rtol)

        lo, hi, it = _bisect(g, lo, hi, widen, bisect_rtol)
        total_it += it
        rs, us, vs, theta, rel = _blend_bracket(d, start, init, lo, hi, r_end, lam_d, rtol)
        if first is None:
            first = lo + theta * (hi - lo)
        reached = rs[-1] >= r_end * (1 - 1e-12)
        if (reached and rel.max() <= BLEND_RTOL) or not np.any(rel > SPLIT_RTOL):
            parts.append((rs, us, vs))
            break
        j = int(np.argmax(rel > SPLIT_RTOL))
        j = max(j - 1, 1)
        if j >= rs.size - 2:
            parts.append((rs, us, vs))
            break
        parts.append((rs[:j], us[:j], vs[:j]))
        start, uj, vj = rs[j], us[j], vs[j]
        pending.append(vj)
        span = max(abs(vj) * 1e-6, 1e-300)

        def init(v, uj=uj):
            return uj, v

        lo, hi = vj - span, vj + span

        def widen(x, k, vj=vj, span=span):
            return vj - span * 2.0**abs(k) if k < 0 else vj + span * 2.0**k
    rs = np.concatenate([p[0] for p in parts])
    us = np.concatenate([p[1] for p in parts])
    vs = np.concatenate([p[2] for p in parts])
    junctions = tuple(int(x) for x in np.cumsum([p[0].size for p in parts])[:-1])
    jump = max([abs(vs[j] - v) / max(abs(v), 1e-300) for j, v in zip(junctions, pending)], default=0.0)
    return first, total_it, rs, us, vs, (junctions, jump)


def _run(d, r0, init, theta, r_end, lam_d, rtol):
    u0, v0 = init(theta)
    return _rk.integrate(d, r0, u0, v0, r_end, lam_d, rtol, DEFAULT_ATOL, True, MAX_STEPS, False)


def _blend_bracket(d, r0, init, lo, hi, r_end, lam_d, rtol):
    """Final profile from the two bracketing trajectories.

    Near rmax the bracket ends differ only by the growing linear mode.  The
    profile is the combination of the two runs that meets the far-field
    condition exactly; nonlinear corrections are O(difference^2).  Also
    returns the pointwise relative gap between the two ends.
    """
    st_lo, _, _, _, r_lo, u_lo, v_lo = _run(d, r0, init, lo, r_end, lam_d, rtol)
    r_lo, u_lo, v_lo = np.array(r_lo), np.array(u_lo), np.array(v_lo)
    zero = np.zeros_like(r_lo)
    if hi == lo:
        return r_lo, u_lo, v_lo, 0.0, zero
    st_hi, _, _, _, r_hi, u_hi, v_hi = _run(d, r0, init, hi, r_end, lam_d, rtol)
    r_hi, u_hi, v_hi = np.array(r_hi), np.array(u_hi), np.array(v_hi)
    if st_lo != _rk.REACHED_END or st_hi != _rk.REACHED_END:
        # at least one end peels off before rmax: return the lo run on the
        # common range so the caller can restart where the two separate
        n = int(np.searchsorted(r_lo, min(r_lo[-1], r_hi[-1]), side="right"))
        r_lo, u_lo, v_lo = r_lo[:n], u_lo[:n], v_lo[:n]
        uh, _ = _interp(d, r_hi, u_hi, v_hi, r_lo)
        rel = np.abs(uh - u_lo) / np.maximum(np.abs(u_lo), 1e-300)
        if not np.any(rel > SPLIT_RTOL):
            r_lo, u_lo, v_lo = _truncate_departure(r_lo, u_lo, v_lo, lam_d)
            rel = np.zeros_like(r_lo)
        return r_lo, u_lo, v_lo, 0.0, rel
    uh, vh = _interp(d, r_hi, u_hi, v_hi, r_lo)
    rel = np.abs(uh - u_lo) / np.maximum(np.abs(u_lo), 1e-300)
    w_lo = r_lo[-1] ** 2 * u_lo[-1]
    w_hi = r_hi[-1] ** 2 * u_hi[-1]
    if w_hi == w_lo:
        return r_lo, u_lo, v_lo, 0.0, rel
    theta = min(1.0, max(0.0, (lam_d - w_lo) / (w_hi - w_lo)))
    return r_lo, u_lo + theta * (uh - u_lo), v_lo + theta * (vh - v_lo), theta, rel


def _interp(d, rs, us, vs, x):
    """Quintic Hermite interpolation of a raw trajectory at points x in its range."""
    a = us * us - (d - 1) * vs / rs
    i = np.clip(np.searchsorted(rs, x, side="right") - 1, 0, rs.size - 2)
    h = rs[i + 1] - rs[i]
    t = np.clip((x - rs[i]) / h, 0.0, 1.0)
    u, v, _ = _hermite5(t, h, us[i], vs[i], a[i], us[i + 1], vs[i + 1], a[i + 1])
    return u, v


def _truncate_departure(rs, us, vs, lam_d):
    w = rs * rs * us
    wt = rs * rs * (2 * us + rs * vs)
    # last point where the trajectory still approaches lambda_d monotonically
    ok = (w - lam_d) * wt <= 0
    bad = np.nonzero(~ok)[0]
    stop = bad[0] if bad.size else rs.size
    stop = max(stop, 2)
    return np.array(rs[:stop]), np.array(us[:stop]), np.array(vs[:stop])


def _check_solution(sol: RadialSolution, residual_tol: float, farfield_tol: float):
    res = sol.residual()
    far = sol.farfield_error()
    sol.meta.update(residual=res, farfield_error=far)
    if res > residual_tol:
        raise ShootingError(f"ODE residual {res:.3g} exceeds {residual_tol:g}")
    if far > farfield_tol and sol.grid[-1] >= sol.rmax * (1 - 1e-12):
        raise ShootingError(f"far-field mismatch {far:.3g} exceeds {farfield_tol:g}")


@lru_cache(maxsize=4096)
def _solve_unit(d: int, lam: float, rmax: float, rtol: float, bisect_rtol: float) -> RadialSolution:
    lam_d = exponents(d).lambda_d

    def init(s):
        return lam, s

    # slope 0 always blows up; slope -2*lam leaves w = r^2 U stationary at r=1
    if lam < lam_d:
        lo, hi = -2.0 * lam, 0.0
    else:
        lo, hi = -2.0 * lam - 1.0, -2.0 * lam + (1e-300 if lam == lam_d else 0.0)
        if lam == lam_d:
            lo, hi = -2.0 * lam - 1.0, -2.0 * lam + 1.0

    def widen(x, k):
        return x - 2.0**abs(k) * (1.0 + lam) if k < 0 else x + 2.0**k * (1.0 + lam)

    s, it, rs, us, vs, junc = _shoot(d, 1.0, init, lo, hi, rmax, rtol, widen, bisect_rtol)
    return RadialSolution(d=d, eps=1.0, datum=BoundaryDatum.finite(lam), grid=rs, values=us, derivs=vs,
                          shoot_slope=s, rmax=rmax, shoot_param=s, bisect_iterations=it,
                          junctions=junc[0], meta={"junction_jump": junc[1]})


def solve_U(d: int, lam: float, eps: float, rmax: float = DEFAULT_RMAX, *, rescale: bool = True,
            rtol: float = DEFAULT_RTOL, residual_tol: float = RESIDUAL_TOL, farfield_tol: float = FARFIELD_TOL,
            bisect_rtol: float = BISECT_RTOL) -> RadialSolution:
    """U^{lam,eps}: Delta U = U^2 for r > eps, U(eps) = lam, U -> 0.

    By default the unit-radius problem with datum lam*eps^2 is solved and
    rescaled; ``rescale=False`` shoots directly from r = eps (used to check
    the scaling relation independently).  ``rmax`` is relative to eps.
    """
    d = check_dimension(d)
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if rescale:
        unit = _solve_unit(d, float(lam * eps * eps), float(rmax), rtol, bisect_rtol)
        _check_solution(unit, residual_tol, farfield_tol)
        return unit if eps == 1.0 else unit.rescaled(eps)
    lam_d = exponents(d).lambda_d

    def init(s):
        return lam, s

    if lam * eps * eps < lam_d:
        lo, hi = -2.0 * lam / eps, 0.0
    else:
        lo, hi = -2.0 * lam / eps - 1.0 / eps**3, -2.0 * lam / eps + 1.0 / eps**3

    def widen(x, k):
        step = 2.0**abs(k) * (1.0 + lam) / eps
        return x - step if k < 0 else x + step

    s, it, rs, us, vs, junc = _shoot(d, eps, init, lo, hi, rmax * eps, rtol, widen, bisect_rtol)
    sol = RadialSolution(d=d, eps=eps, datum=BoundaryDatum.finite(lam), grid=rs, values=us, derivs=vs,
                         shoot_slope=s, rmax=rmax * eps, shoot_param=s, bisect_iterations=it,
                         junctions=junc[0], meta={"junction_jump": junc[1]})
    sol.meta["direct"] = True
    _check_solution(sol, residual_tol, farfield_tol)
    return sol


def _blowup_coefficients(d: int, C: float):
    """Coefficients (c_n, l_n), n = -1..7, of the blow-up series

        U = 6/s^2 + sum_n (c_n + l_n log s) s^n,   s = r - 1,

    for a profile that is infinite on the unit sphere.  The only free
    constant is C, the s^4 coefficient.
    """
    k = float(d - 1)
    c = [
        -6 / 5 * k,
        -1 / 50 * k**2 + k,
        -1 / 250 * k**3 + 1 / 10 * k**2 - k,
        -7 / 5000 * k**4 + 19 / 500 * k**3 - 8 / 25 * k**2 + 6 / 5 * k,
        -79 / 75000 * k**5 + 229 / 7500 * k**4 - 437 / 1500 * k**3 + 59 / 50 * k**2 - 2 * k,
        C,
        (-4 / 5 * C * k + 3383 / 5250000 * k**7 - 35027 / 1750000 * k**6 + 152157 / 700000 * k**5
         - 463007 / 420000 * k**4 + 484 / 175 * k**3 - 883 / 280 * k**2 + 3 / 2 * k),
        (49 / 150 * C * k**2 + 1 / 3 * C * k - 529241 / 1350000000 * k**8 + 2812871 / 236250000 * k**7
         - 4680833 / 37800000 * k**6 + 21900467 / 37800000 * k**5 - 1153991 / 945000 * k**4
         + 295457 / 378000 * k**3 + 2489 / 6300 * k**2 - 2 / 3 * k),
        (-34 / 375 * C * k**3 - 41 / 150 * C * k**2 - 1 / 5 * C * k + 6254803 / 47250000000 * k**9
         - 2242571 / 590625000 * k**8 + 2364721 / 67500000 * k**7 - 23666161 / 189000000 * k**6
         + 633121 / 7560000 * k**5 + 401329 / 945000 * k**4 - 10477 / 18000 * k**3 + 1 / 84 * k**2 + 2 / 5 * k),
    ]
    l5 = 18 / 21875 * k**6 - 108 / 4375 * k**5 + 44 / 175 * k**4 - 8 / 7 * k**3 + 82 / 35 * k**2 - 12 / 7 * k
    l = [0.0] * 5 + [
        l5,
        (-72 / 109375 * k**7 + 432 / 21875 * k**6 - 176 / 875 * k**5 + 32 / 35 * k**4 - 328 / 175 * k**3
         + 48 / 35 * k**2),
        (21 / 78125 * k**8 - 852 / 109375 * k**7 + 194 / 2625 * k**6 - 152 / 525 * k**5 + 1009 / 2625 * k**4
         + 116 / 525 * k**3 - 4 / 7 * k**2),
        (-204 / 2734375 * k**9 + 1101 / 546875 * k**8 - 152 / 9375 * k**7 + 2614 / 65625 * k**6
         + 652 / 13125 * k**5 - 673 / 2625 * k**4 + 12 / 35 * k**2),
    ]
    return c, l


def blowup_series(d: int, C: float, s):
    """U and U' from the blow-up series at distance s outside the unit sphere."""
    c, l = _blowup_coefficients(d, C)
    s = np.asarray(s, dtype=float)
    ls = np.log(s)
    u = 6.0 / s**2
    v = -12.0 / s**3
    for i, n in enumerate(range(-1, 8)):
        u = u + (c[i] + l[i] * ls) * s**n
        v = v + (n * (c[i] + l[i] * ls) + l[i]) * s ** (n - 1)
    return u, v


@lru_cache(maxsize=64)
def _solve_unit_infinity(d: int, eta: float, rmax: float, rtol: float, bisect_rtol: float) -> RadialSolution:
    r0 = 1.0 + eta

    def init(C):
        u, v = blowup_series(d, C, eta)
        return float(u), float(v)

    def widen(x, k):
        return x - 2.0**abs(k) if k < 0 else x + 2.0**k

    C, it, rs, us, vs, junc = _shoot(d, r0, init, -1.0, 1.0, rmax, rtol, widen, bisect_rtol)
    return RadialSolution(d=d, eps=1.0, datum=BoundaryDatum.infinite(), grid=rs, values=us, derivs=vs,
                          shoot_slope=float(vs[0]), rmax=rmax, shoot_param=C, bisect_iterations=it,
                          junctions=junc[0], meta={"eta": eta, "junction_jump": junc[1]})


def solve_U_infinity(d: int, eps: float, rmax: float = DEFAULT_RMAX, *, eta: float = 0.05,
                     rtol: float = DEFAULT_RTOL, residual_tol: float = RESIDUAL_TOL,
                     farfield_tol: float = FARFIELD_TOL, bisect_rtol: float = BISECT_RTOL) -> RadialSolution:
    """U^{inf,eps}: blows up at r = eps, decays at infinity.

    Seeded at r = eps*(1+eta) from the blow-up series, bisecting on its one
    free coefficient.  That coefficient only enters at relative order
    eta^6, so eta must not be tiny: at eta = 1e-4 it is below double
    precision, while at the default the neglected terms are O(eta^8).
    """
    d = check_dimension(d)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 0.5)")
    unit = _solve_unit_infinity(d, float(eta), float(rmax), rtol, bisect_rtol)
    _check_solution(unit, residual_tol, farfield_tol)
    return unit if eps == 1.0 else unit.rescaled(eps)


def _dirac_expansion(d: int, lam: float, a: float, r):
    """Small-r expansion of V^lam with additive constant a."""
    r = np.asarray(r, dtype=float)
    if d == 3:
        c = lam / (2.0 * math.pi)
        lr = np.log(r)
        u = c / r + c * c * lr + a + c * a * r + c**3 * (r * lr - 1.5 * r)
        v = -c / r**2 + c * c / r + c * a + c**3 * (lr - 0.5)
        return u, v
    if d == 2:
        c = lam / math.pi
        return c * np.log(1.0 / r) + a, -c / r
    raise ValueError("V^lam is only solved for d=2 and d=3")


@lru_cache(maxsize=256)
def _solve_dirac(d: int, lam: float, r0: float, rmax: float, rtol: float, bisect_rtol: float) -> RadialSolution:
    def init(a):
        u, v = _dirac_expansion(d, lam, a, r0)
        return float(u), float(v)

    def widen(x, k):
        return x - 2.0**abs(k) * (1.0 + lam) if k < 0 else x + 2.0**k * (1.0 + lam)

    base = -lam * psi0(d, r0) if d == 3 else 0.0
    a, it, rs, us, vs, junc = _shoot(d, r0, init, base - 1.0, base + 1.0, rmax, rtol, widen, bisect_rtol)
    return RadialSolution(d=d, eps=0.0, datum=BoundaryDatum.dirac(lam), grid=rs, values=us, derivs=vs,
                          shoot_slope=float(vs[0]), rmax=rmax, shoot_param=a, bisect_iterations=it,
                          junctions=junc[0], meta={"r0": r0, "junction_jump": junc[1]})


def solve_V(d: int, lam: float, *, r0: float = 1e-4, rmax: float = DEFAULT_RMAX, rtol: float = DEFAULT_RTOL,
            residual_tol: float = RESIDUAL_TOL, farfield_tol: float = FARFIELD_TOL,
            bisect_rtol: float = BISECT_RTOL) -> RadialSolution:
    """V^lam: Delta V / 2 = V^2 / 2 - lam delta_0 on R^d, radial, positive."""
    d = check_dimension(d)
    if d == 1:
        raise ValueError("solve_V is provided for d=2 and d=3")
    if not lam > 0:
        raise ValueError("lam must be positive")
    sol = _solve_dirac(d, float(lam), float(r0), float(rmax), rtol, bisect_rtol)
    _check_solution(sol, residual_tol, farfield_tol)
    return sol


def _richardson(f, x, h):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3, abs(d2 - d1)


def dU_dlambda(d: int, lam: float, eps: float, r: float, *, rel_step: float = 1e-3, **solver_kw) -> float:
    """U_1^{lam eps^-2, eps}(r) = d/dlam U^{lam eps^-2, eps}(r) by central differences.

    Differences are taken on the unit problem, since
    U^{lam eps^-2, eps}(r) = eps^-2 U^{lam,1}(r/eps); the step is halved until
    two Richardson-extrapolated estimates agree.
    """
    d = check_dimension(d)
    r = np.asarray(r, dtype=float)
    if not (eps > 0 and np.all(r > eps)):
        raise ValueError("need r > eps > 0")
    if not lam > 0:
        raise ValueError("lam must be positive")
    x = r / eps

    def f(lv):
        return solve_U(d, lv, 1.0, **solver_kw).at(x)

    h = rel_step * lam
    est, diff = _richardson(f, lam, h)
    for _ in range(4):
        est2, diff2 = _richardson(f, lam, h / 2)
        if np.all(np.abs(est2 - est) <= 1e-7 * (np.abs(est2) + 1e-300)):
            est = est2
            break
        est, h = est2, h / 2
    est = np.asarray(est) / eps**2
    return float(est) if est.ndim == 0 else est


def comparison_checks(d: int, lams=None, grid=None, tol: float = 1e-7) -> list[CheckResult]:
    """Sign comparisons of U^{lam,1} against V^inf on either side of lambda_d,
    the quantitative bound (U^{lam,1} - V^inf)(r) <= (lam - lambda_d) r^-p for
    lam > lambda_d, and equality at lam = lambda_d."""
    d = check_dimension(d)
    ex = exponents(d)
    lam_d = ex.lambda_d
    if lams is None:
        lams = [0.25 * lam_d, 0.5 * lam_d, 0.9 * lam_d, lam_d, 1.5 * lam_d, 2.0 * lam_d, 4.0 * lam_d]
    r = np.geomspace(1.0, 100.0, 400) if grid is None else np.asarray(grid, dtype=float)
    vinf = lam_d / r**2
    out = []
    for lam in lams:
        u = solve_U(d, lam, 1.0).at(r)
        diff = u - vinf
        if lam > lam_d:
            out.append(at_least(f"ode.compare.above_vinf[d={d},lam={lam:g}]", float(diff.min()), 0.0, slack=tol,
                                note="U^{lam,1} >= V^inf for lam > lambda_d"))
            excess = diff - (lam - lam_d) * r ** (-ex.p)
            out.append(at_most(f"ode.compare.bound[d={d},lam={lam:g}]", float(excess.max()), 0.0, slack=tol,
                               note="U^{lam,1} - V^inf <= (lam - lambda_d) r^-p"))
        elif lam < lam_d:
            out.append(at_most(f"ode.compare.below_vinf[d={d},lam={lam:g}]", float(diff.max()), 0.0, slack=tol,
                               note="U^{lam,1} <= V^inf for lam < lambda_d"))
        else:
            out.append(within_abs(f"ode.compare.equal[d={d}]", float(np.abs(diff).max()), 0.0, tol,
                                  note="U^{lambda_d,1} = V^inf"))
    return out

"""Branching Brownian particle approximation of super-Brownian motion.

Each particle carries mass 1/N, branches at rate N into 0 or 2 children
(critical, unit variance, so X_t = (1/N) sum of point masses solves the
martingale problem for the branching mechanism u^2/2 as N grows).  A
cluster is the progeny of one particle: functionals F of the canonical
measure are estimated by N * mean(F(cluster)) for F vanishing on the null
cluster.  A superposition starts from Poisson(N X0(1)) particles.

For the exit functionals of balls the particle system is exact at every
N: with Z the number of ancestral lines entering the closed ball of
radius eps,

    N (1 - E_r[s^Z]) = U^{N(1-s), eps}(r),

the exterior solution of Delta U = U^2 with constant datum N(1-s).  This
gives unbiased finite-N estimators (used by ``verify``) and exact
conditional expectations for particles removed at the kill radius.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _bbm
from .constants import ball_volume, check_dimension, exponents
from .results import CheckResult, MCEstimate, within_stderr
from .rng import DEFAULT_SEED, stream

DEFAULT_N = 10_000
DEFAULT_LEAF_FACTOR = 1e-5       # leaf bridge duration / eps_min^2
DEFAULT_MAX_EVENTS = 10_000_000  # branch events per replicate
DEFAULT_MAX_POP = 1_000_000      # pending particles per replicate
BLOCK = 256                      # replicates per RNG stream
TABLE_POINTS = 4097


class PopulationCapError(RuntimeError):
    """A replicate exceeded the event or population cap."""


@dataclass(frozen=True)
class InitialMeasure:
    """A finite atomic measure sum_i m_i delta_{x_i}."""

    points: np.ndarray
    masses: np.ndarray

    def __init__(self, atoms):
        pts = np.array([np.asarray(p, dtype=float) for p, _ in atoms], dtype=float)
        ms = np.array([float(m) for _, m in atoms], dtype=float)
        if len(atoms) and (pts.ndim != 2):
            raise ValueError("atoms must be (point, mass) pairs with points of equal dimension")
        if np.any(~np.isfinite(ms)) or np.any(ms <= 0):
            raise ValueError("atom masses must be finite and positive")
        object.__setattr__(self, "points", pts.reshape(len(atoms), -1))
        object.__setattr__(self, "masses", ms)

    @classmethod
    def dirac(cls, point, mass: float = 1.0) -> "InitialMeasure":
        return cls([(point, mass)])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def dim(self) -> int:
        return self.points.shape[1] if self.points.size else 0


@dataclass(frozen=True)
class SphereFamily:
    """Nested spheres around ``center`` with strictly decreasing radii.

    ``track_inner`` also follows the spheres of radius eps_i / 2, which
    gives the indicator that nothing exits the smaller ball.
    """

    center: np.ndarray
    radii: tuple
    track_inner: bool = False

    def __init__(self, center, radii, track_inner: bool = False):
        c = np.asarray(center, dtype=float).ravel()
        r = tuple(float(x) for x in np.atleast_1d(radii))
        if not r:
            raise ValueError("need at least one radius")
        if any(not x > 0 for x in r):
            raise ValueError("radii must be positive")
        if any(a <= b for a, b in zip(r[:-1], r[1:])):
            raise ValueError("radii must be strictly decreasing")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "track_inner", bool(track_inner))

    @property
    def all_radii(self) -> tuple:
        """Tracked radii (with the inner halves), strictly decreasing."""
        rs = set(self.radii)
        if self.track_inner:
            rs |= {x / 2 for x in self.radii}
        return tuple(sorted(rs, reverse=True))

    def check_admissible(self, points) -> None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.center.size:
            raise ValueError("sphere centre and initial points differ in dimension")
        dist = np.linalg.norm(pts - self.center, axis=1)
        if np.any(dist <= self.radii[0]):
            raise ValueError(f"every initial atom must lie farther than eps_1={self.radii[0]:g} from the centre")


@dataclass(frozen=True)
class Functionals:
    """Exit functionals to estimate exactly through the kill-radius completion.

    laplace: lambdas for E exp(-lam X_eps(1)).
    empty: the probability that nothing exits, P(X_eps = 0).
    tilted: lambdas for N0(X e^{-lam X / eps^2}), per sphere.
    inner: kappas for N0(X e^{-kappa X / eps^2} 1(X_{eps/2} = 0)) (needs track_inner).
    extra: custom rows (key, column, mask, pattern, fn) with fn(r) the value
        added for each removed child whose bits b satisfy (b & mask) == pattern;
        bit j refers to ``spheres.all_radii[j]``.
    """

    laplace: tuple = ()
    empty: bool = False
    tilted: tuple = ()
    inner: tuple = ()
    extra: tuple = ()


@dataclass
class SimulationOutput:
    """Per-replicate outputs (rows = replicates, columns = ``spheres.radii``)."""

    d: int
    N: int
    spheres: SphereFamily
    counts: np.ndarray             # first-crossing lines per tracked radius (all_radii order)
    exit_mass: np.ndarray          # counts / N at the user radii
    exit_empty_inner: np.ndarray   # Z at eps_i/2 is 0 (False where untracked)
    range_hit: np.ndarray
    local_time: np.ndarray | None
    total_mass_path: np.ndarray | None
    mass_times: np.ndarray | None
    events: np.ndarray
    r_kill: float
    functionals: Functionals
    completions: dict = field(default_factory=dict)
    h: float = 0.0

    @property
    def n(self) -> int:
        return self.exit_mass.shape[0]

    def _col(self, radius):
        return self.spheres.all_radii.index(radius)

    def _mean_row(self, key, i):
        c = self.completions.get(key)
        return 0.0 if c is None else c[:, i]

    # unbiased per-replicate samples -------------------------------------------------
    def exit_mass_samples(self, i: int = 0) -> np.ndarray:
        """X_eps_i(1) plus the expected exit mass of removed particles."""
        return self.exit_mass[:, i] + self._mean_row(("mean",), self._col(self.spheres.radii[i]))

    def local_time_samples(self) -> np.ndarray:
        """L^x estimate plus the expected local time of removed particles (d=3 only;
        in d <= 2 the removed particles' local time is dropped)."""
        if self.local_time is None:
            raise ValueError("local time was not tracked")
        extra = self.completions.get(("lt",))
        return self.local_time + (0.0 if extra is None else extra[:, 0])

    def _gen(self, key, i):
        if np.isfinite(self.r_kill) and key not in self.completions:
            raise ValueError(f"functional {key} was not requested for the kill-radius completion")
        if key not in self.completions:
            return np.zeros(self.n), np.zeros(self.n)
        c = self.completions[key]
        return c[:, 2 * i], c[:, 2 * i + 1]

    def laplace_samples(self, lam: float, i: int = 0) -> np.ndarray:
        """exp(-lam X_eps_i(1)) (conditional expectation given the removed particles)."""
        j = self._col(self.spheres.radii[i])
        logg, _ = self._gen(("laplace", float(lam)), j)
        return np.exp(-lam * self.counts[:, j] / self.N + logg)

    def empty_samples(self, i: int = 0) -> np.ndarray:
        """1(X_eps_i = 0), completed."""
        j = self._col(self.spheres.radii[i])
        logg, _ = self._gen(("empty",), j)
        return np.where(self.counts[:, j] == 0, np.exp(logg), 0.0)

    def tilted_samples(self, lam: float, i: int = 0) -> np.ndarray:
        """N X e^{-lam X/eps^2} in its exact finite-N form Z (1-q)^{Z-1}, q = lam/(N eps^2).

        Its mean is N0(X e^{-lam X/eps^2}) for the particle system, which
        equals d/dtheta U^{theta, eps} at theta = lam/eps^2.
        """
        eps = self.spheres.radii[i]
        j = self._col(eps)
        q = lam / (self.N * eps * eps)
        _check_q(q)
        logg, dlog = self._gen(("tilted", float(lam)), j)
        return _derivative_sample(self.counts[:, j], 1.0 - q, logg, dlog)

    def inner_samples(self, kappa: float, i: int = 0) -> np.ndarray:
        """As ``tilted_samples`` times the indicator that nothing exits B(x, eps_i/2)."""
        if not self.spheres.track_inner:
            raise ValueError("inner spheres are not tracked")
        eps = self.spheres.radii[i]
        j, jin = self._col(eps), self._col(eps / 2)
        q = kappa / (self.N * eps * eps)
        _check_q(q)
        logg, dlog = self._gen(("inner", float(kappa)), j)
        val = _derivative_sample(self.counts[:, j], 1.0 - q, logg, dlog)
        return np.where(self.counts[:, jin] == 0, val, 0.0)

    # output ------------------------------------------------------------------------
    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        m = len(self.spheres.radii)
        cols = ["replicate"]
        for i in range(m):
            cols += [f"eps_{i}", f"exit_mass_{i}"]
        cols.append("local_time")
        cols += [f"range_hit_{i}" for i in range(m)]
        buf.write(",".join(cols) + "\n")
        lt = self.local_time if self.local_time is not None else np.full(self.n, np.nan)
        for k in range(self.n):
            row = [str(k)]
            for i in range(m):
                row += [repr(self.spheres.radii[i]), repr(float(self.exit_mass[k, i]))]
            row.append(repr(float(lt[k])))
            row += [str(int(self.range_hit[k, i])) for i in range(m)]
            buf.write(",".join(row) + "\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _check_q(q):
    if not 0 <= q <= 1:
        raise ValueError(f"need N >= lam / eps^2 for the finite-N estimator (q={q:g})")


def _derivative_sample(Z, s, logg, dlog):
    """d/ds of s^Z * exp(logg(s)) with dlog = d logg / ds: Z s^{Z-1} G + s^Z G dlog."""
    Z = np.asarray(Z, dtype=float)
    G = np.exp(logg)
    with np.errstate(divide="ignore", invalid="ignore"):
        if s == 0.0:
            a = np.where(Z == 1, 1.0, 0.0)
            b = np.where(Z == 0, 1.0, 0.0)
        else:
            a = Z * s ** (Z - 1.0)
            b = s**Z
    return G * (a + b * dlog)


# completion tables -----------------------------------------------------------------
def _u_grid(r_kill):
    u = np.linspace(0.0, 1.0 / r_kill, TABLE_POINTS)
    r = 1.0 / np.maximum(u, 1e-12)
    return u, r


def _green(d, r):
    if d != 3:
        raise ValueError("local-time completion needs the d=3 Green function")
    return 1.0 / (2.0 * math.pi * r)


def _U(d, theta, eps, r):
    from .ode import solve_U

    return solve_U(d, float(theta), float(eps)).at(r)


def _U1(d, theta, eps, r):
    from .ode import dU_dlambda

    return eps * eps * dU_dlambda(d, float(theta) * eps * eps, float(eps), r)


def _build_rows(d, N, spheres: SphereFamily, f: Functionals, h, r_kill):
    """Rows (key, column, mask, pattern, values on the u grid), keyed for SimulationOutput."""
    u, r = _u_grid(r_kill)
    rad = spheres.all_radii
    rows = []

    def add(key, col, mask, pattern, vals):
        rows.append((key, col, mask, pattern, np.asarray(vals, dtype=float)))

    for j, eps in enumerate(rad):
        bit = 1 << j
        # expected exit mass of one removed particle: P_r(BM hits B(eps)) / N
        add(("mean",), j, bit, 0, (eps / r if d == 3 else np.ones_like(r)) / N)
    if h > 0 and d == 3:
        add(("lt",), 0, 0, 0, _green(d, r) / N)
    for lam in f.laplace:
        for j, eps in enumerate(rad):
            theta = N * (1.0 - math.exp(-lam / N))
            add(("laplace", float(lam)), 2 * j, 1 << j, 0, np.log1p(-_U(d, theta, eps, r) / N))
            add(("laplace", float(lam)), 2 * j + 1, 1 << j, 0, np.zeros_like(r))
    if f.empty:
        for j, eps in enumerate(rad):
            add(("empty",), 2 * j, 1 << j, 0, np.log1p(-_U(d, N, eps, r) / N))
            add(("empty",), 2 * j + 1, 1 << j, 0, np.zeros_like(r))
    for lam in f.tilted:
        for eps in spheres.radii:
            j = rad.index(eps)
            q = lam / (N * eps * eps)
            _check_q(q)
            theta = lam / (eps * eps)
            g = 1.0 - _U(d, theta, eps, r) / N
            add(("tilted", float(lam)), 2 * j, 1 << j, 0, np.log(g))
            add(("tilted", float(lam)), 2 * j + 1, 1 << j, 0, _U1(d, theta, eps, r) / g)
    for kappa in f.inner:
        if not spheres.track_inner:
            raise ValueError("inner functionals need track_inner=True")
        for eps in spheres.radii:
            j, jin = rad.index(eps), rad.index(eps / 2)
            bj, bin_ = 1 << j, 1 << jin
            q = kappa / (N * eps * eps)
            _check_q(q)
            s = 1.0 - q
            a = _U(d, N, eps / 2, eps) / N
            theta = N * (1.0 - s * (1.0 - a))
            gA = 1.0 - _U(d, theta, eps, r) / N
            add(("inner", float(kappa)), 2 * j, bj | bin_, 0, np.log(gA))
            add(("inner", float(kappa)), 2 * j + 1, bj | bin_, 0, (1.0 - a) * _U1(d, theta, eps, r) / gA)
            gB = 1.0 - _U(d, N, eps / 2, r) / N
            add(("inner", float(kappa)), 2 * j, bj | bin_, bj, np.log(gB))
    for key, col, mask, pattern, fn in f.extra:
        add(key, col, int(mask), int(pattern), fn(r))
    return u[1] - u[0], rows


def _assemble(rows, n_spheres):
    """Stack rows into kernel tables and record where each key lands."""
    if not rows:
        return np.zeros((0, 2)), np.zeros(0, np.int64), np.zeros(0, np.int64), {}
    tabs = np.ascontiguousarray(np.stack([r[4] for r in rows]))
    masks = np.array([r[2] for r in rows], np.int64)
    pats = np.array([r[3] for r in rows], np.int64)
    layout = {}
    for k, (key, col, *_rest) in enumerate(rows):
        layout.setdefault(key, []).append((k, col))
    return tabs, masks, pats, layout


# simulation ------------------------------------------------------------------------
def _run_blocks(d, N, spheres, init_fn, n_rep, h, leaf, r_kill, tabs, du, masks, pats, drop_full, mass_times,
                max_events, max_pop, seed, key, threads):
    radii = np.array(spheres.all_radii, dtype=float)
    center = np.ascontiguousarray(spheres.center, dtype=float)
    nblocks = (n_rep + BLOCK - 1) // BLOCK

    def job(b):
        rng = stream(seed, "particle", (key, b))
        lo, hi = b * BLOCK, min(n_rep, (b + 1) * BLOCK)
        pos, off = init_fn(rng, hi - lo)
        return _bbm.run_replicates(pos, off, int(N), center, radii, float(h), float(leaf), float(r_kill), tabs,
                                   float(du), masks, pats, bool(drop_full), mass_times, int(max_events),
                                   int(max_pop), rng)

    if threads and threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, range(nblocks)))
    else:
        parts = [job(b) for b in range(nblocks)]
    out = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    status = out[5]
    if np.any(status == _bbm.EVENT_CAP):
        raise PopulationCapError(f"a replicate exceeded {max_events} branch events; increase the cap or reduce N")
    if np.any(status == _bbm.POP_CAP):
        raise PopulationCapError(f"a replicate exceeded {max_pop} pending particles; increase the cap or reduce N")
    return out


def _simulate(d, N, spheres, init_fn, n_rep, *, h, dt, r_kill, functionals, mass_times, max_events, max_pop,
              seed, key, threads):
    d = check_dimension(d)
    if spheres.center.size != d:
        raise ValueError("sphere centre has the wrong dimension")
    if int(N) < 1:
        raise ValueError("N must be a positive integer")
    rad = spheres.all_radii
    if len(rad) > 62:
        raise ValueError("at most 62 tracked radii")
    if h is None:
        h = rad[-1] / 4 if d == 3 else 0.0
    if h < 0:
        raise ValueError("bandwidth must be nonnegative")
    if h > 0 and h >= rad[-1]:
        raise ValueError("bandwidth must be smaller than every tracked radius")
    leaf = DEFAULT_LEAF_FACTOR * rad[-1] ** 2 if dt is None else float(dt)
    if not leaf > 0:
        raise ValueError("dt must be positive")
    r_kill = math.inf if r_kill is None else float(r_kill)
    mass_times = np.zeros(0) if mass_times is None else np.asarray(mass_times, dtype=float)
    if mass_times.size and math.isfinite(r_kill):
        raise ValueError("the total-mass path needs r_kill=None")
    f = functionals or Functionals()
    if math.isfinite(r_kill):
        du, rows = _build_rows(d, int(N), spheres, f, h, r_kill)
    else:
        du, rows = 1.0, []
    tabs, masks, pats, layout = _assemble(rows, len(rad))
    drop_full = h == 0 and mass_times.size == 0 and not any(m & ((1 << len(rad)) - 1) == p
                                                             for m, p in zip(masks, pats))
    Z, occ, comp, alive, events, _ = _run_blocks(d, N, spheres, init_fn, n_rep, h, leaf, r_kill, tabs, du,
                                                 masks, pats, drop_full, mass_times, max_events, max_pop, seed,
                                                 key, threads)
    completions = {}
    for k, entries in layout.items():
        width = max(c for _, c in entries) + 1
        arr = np.zeros((Z.shape[0], width))
        for row, col in entries:
            arr[:, col] += comp[:, row]
        completions[k] = arr
    idx = [rad.index(e) for e in spheres.radii]
    exit_mass = Z[:, idx] / N
    inner = np.zeros_like(exit_mass, dtype=bool)
    if spheres.track_inner:
        inner = np.stack([Z[:, rad.index(e / 2)] == 0 for e in spheres.radii], axis=1)
    lt = occ / (N * ball_volume(d, h)) if h > 0 else None
    return SimulationOutput(d=d, N=int(N), spheres=spheres, counts=Z, exit_mass=exit_mass, exit_empty_inner=inner,
                            range_hit=Z[:, idx] > 0, local_time=lt,
                            total_mass_path=alive / N if mass_times.size else None,
                            mass_times=mass_times if mass_times.size else None, events=events, r_kill=r_kill,
                            functionals=f, completions=completions, h=float(h))


def simulate_cluster(d: int, ancestor, N: int, spheres: SphereFamily, n_clusters: int = 1, *, h: float | None = None,
                     dt: float | None = None, r_kill: float | None = None, functionals: Functionals | None = None,
                     mass_times=None, seed: int = DEFAULT_SEED, key: int = 0, threads: int = 1,
                     max_events: int = DEFAULT_MAX_EVENTS, max_pop: int = DEFAULT_MAX_POP) -> SimulationOutput:
    """Independent clusters, each from a single particle of mass 1/N at ``ancestor``.

    N times the sample mean of a functional vanishing on the null cluster
    estimates its canonical-measure integral.  ``h`` is the local-time
    bandwidth (default eps_min/4 in d=3, off otherwise; 0 turns it off);
    ``dt`` the leaf bridge duration (default 1e-5 eps_min^2); ``r_kill``
    optionally removes children born farther than r_kill from the centre
    and adds the exact conditional expectations requested in ``functionals``.
    """
    a = np.asarray(ancestor, dtype=float).reshape(1, -1)
    spheres.check_admissible(a)
    if r_kill is not None and np.linalg.norm(a - spheres.center) >= r_kill:
        raise ValueError("the ancestor must lie inside the kill radius")

    def init(rng, n):
        return np.repeat(a, n, axis=0), np.arange(n + 1, dtype=np.int64)

    return _simulate(d, N, spheres, init, int(n_clusters), h=h, dt=dt, r_kill=r_kill, functionals=functionals,
                     mass_times=mass_times, max_events=max_events, max_pop=max_pop, seed=seed, key=key,
                     threads=threads)


def simulate_superposition(d: int, X0: InitialMeasure, N: int, spheres: SphereFamily, n_replicates: int = 1, *,
                           h: float | None = None, dt: float | None = None, r_kill: float | None = None,
                           functionals: Functionals | None = None, mass_times=None, seed: int = DEFAULT_SEED,
                           key: int = 0, threads: int = 1, max_events: int = DEFAULT_MAX_EVENTS,
                           max_pop: int = DEFAULT_MAX_POP) -> SimulationOutput:
    """Replicates of the population started from Poisson(N X0(1)) particles distributed as X0 / X0(1)."""
    npts = len(X0.masses)
    if npts:
        if X0.dim != d:
            raise ValueError("initial measure has the wrong dimension")
        spheres.check_admissible(X0.points)
        if r_kill is not None and np.any(np.linalg.norm(X0.points - spheres.center, axis=1) >= r_kill):
            raise ValueError("initial atoms must lie inside the kill radius")
    total = X0.total_mass
    probs = X0.masses / total if npts else np.zeros(0)

    def init(rng, n):
        if not npts:
            return np.zeros((0, d)), np.zeros(n + 1, dtype=np.int64)
        counts = rng.poisson(N * total, size=n)
        which = rng.choice(npts, size=int(counts.sum()), p=probs)
        off = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        return np.ascontiguousarray(X0.points[which]), off

    return _simulate(d, N, spheres, init, int(n_replicates), h=h, dt=dt, r_kill=r_kill, functionals=functionals,
                     mass_times=mass_times, max_events=max_events, max_pop=max_pop, seed=seed, key=key,
                     threads=threads)


def local_time_estimate(occupation: float, N: int, d: int, h: float) -> float:
    """(1 / vol B(x, h)) * (1/N) * total particle time spent in B(x, h)."""
    if not h > 0:
        raise ValueError("h must be positive")
    return occupation / (N * ball_volume(d, h))


def summary(out: SimulationOutput) -> dict:
    """Means and stderrs of the completed per-replicate samples, for the JSON summary."""
    res = {"n": out.n, "N": out.N, "radii": list(out.spheres.radii), "exit_mass": [], "range_hit": []}
    for i in range(len(out.spheres.radii)):
        e = MCEstimate.from_samples(out.exit_mass_samples(i))
        res["exit_mass"].append({"mean": e.mean, "stderr": e.stderr})
        if not math.isfinite(out.r_kill):
            rh = MCEstimate.from_samples(out.range_hit[:, i].astype(float))
            res["range_hit"].append({"mean": rh.mean, "stderr": rh.stderr})
    if out.local_time is not None:
        e = MCEstimate.from_samples(out.local_time_samples())
        res["local_time"] = {"mean": e.mean, "stderr": e.stderr}
    return res


def _offset_spheres(d, dist, eps):
    c = np.zeros(d)
    c[0] = dist
    return SphereFamily(c, (eps,))


def exit_mean_check(d: int = 3, dist: float = 1.0, eps: float = 0.2, N: int = 50, n: int = 10_000, *,
                    r_kill: float | None = 2.0, seed: int = DEFAULT_SEED, threads: int = 1) -> CheckResult:
    """E_{delta_x0} X_eps(1) against its exact value: eps/|x - x0| in d = 3, 1 in d <= 2.

    The mean is linear, so the kill-radius completion keeps it exact at any N.
    """
    if not 0 < eps < dist:
        raise ValueError("eps < |x - x0| required")
    out = simulate_superposition(d, InitialMeasure.dirac(np.zeros(d)), N, _offset_spheres(d, dist, eps), n, h=0,
                                 r_kill=r_kill, seed=seed, key=1, threads=threads, max_events=10**10)
    est = MCEstimate.from_samples(out.exit_mass_samples(0))
    target = eps / dist if d == 3 else 1.0
    return within_stderr(f"particle.exit_mean[d={d},|x-x0|={dist:g},eps={eps:g},N={N}]", est.mean, est.stderr,
                         target, n=n)


def laplace_check(lam: float, d: int = 3, dist: float = 1.0, eps: float = 0.2, N: int = 1000, n: int = 100_000, *,
                  r_kill: float | None = 2.0, seed: int = DEFAULT_SEED, threads: int = 1) -> CheckResult:
    """E_{delta_x0} exp(-lam X_eps(1)) = exp(-U^{lam, eps}(|x - x0|)) from independent clusters.

    With Poisson(N) ancestors the expectation is exp(-N E_cluster[1 - e^{-lam Z/N}]);
    the stderr follows by the delta method.  The particle value is exactly
    exp(-U^{theta, eps}) with theta = N (1 - e^{-lam/N}), reported as detail.
    """
    if not 0 < eps < dist:
        raise ValueError("eps < |x - x0| required")
    f = Functionals(laplace=(float(lam),))
    out = simulate_cluster(d, np.zeros(d), N, _offset_spheres(d, dist, eps), n, h=0, r_kill=r_kill, functionals=f,
                           seed=seed, key=(2, int(round(lam * 1000))), threads=threads, max_events=10**10)
    m = MCEstimate.from_samples(N * (1.0 - out.laplace_samples(lam, 0)))
    est = math.exp(-m.mean)
    theta = N * (1.0 - math.exp(-lam / N))
    target = math.exp(-float(_U(d, lam, eps, dist)))
    return within_stderr(f"particle.laplace[d={d},|x-x0|={dist:g},eps={eps:g},lam={lam:g},N={N}]", est,
                         est * m.stderr, target, finite_N_target=math.exp(-float(_U(d, theta, eps, dist))), n=n)

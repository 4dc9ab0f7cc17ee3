"""Numba kernel for critical binary branching Brownian motion.

Particles carry mass 1/N, live an Exp(N) time, move as Brownian motion
during their life and at death leave 0 or 2 children with probability
1/2 each.  Lifetimes are simulated exactly; only sphere crossings inside
a life need a discretisation.  A life segment is refined by Brownian
(Levy) bridge midpoints wherever it comes within ``NEAR_SD`` bridge
standard deviations of a tracked sphere or of the local-time ball, down
to duration ``leaf``; a leaf segment then crosses a sphere with the
radial bridge probability exp(-2 (ra - rho)(rb - rho) / tau).

Children born farther than ``r_kill`` from the centre are not simulated.
Their contribution is replaced by tabulated functions of the birth
radius (conditional expectations of the remaining evolution), summed
per replicate into ``comp``.  Row k of the table applies to a child whose
crossing bits b satisfy (b & mask[k]) == pattern[k].
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
EVENT_CAP = 1
POP_CAP = 2

NEAR_SD = 5.0
MAX_BRIDGE_DEPTH = 64


@njit(cache=True)
def _dist(y, c, d):
    s = 0.0
    for j in range(d):
        z = y[j] - c[j]
        s += z * z
    return math.sqrt(s)


@njit(cache=True)
def _table(u, tab, du):
    x = u / du
    i = int(x)
    n = tab.shape[0]
    if i >= n - 1:
        return tab[n - 1]
    f = x - i
    return tab[i] * (1.0 - f) + tab[i + 1] * f


@njit(cache=True)
def _segment(a, b, tau, c, d, radii, bits, h, leaf, sa, sb, st, rng):
    """Crossings of unset spheres and time spent in B(c, h) along one bridge.

    Returns (new_bits, crossed_mask, time_inside_h).
    """
    m = radii.shape[0]
    newly = np.int64(0)
    inside = 0.0
    top = 0
    for j in range(d):
        sa[0, j] = a[j]
        sb[0, j] = b[j]
    st[0] = tau
    top = 1
    while top > 0:
        top -= 1
        t = st[top]
        ra = _dist(sa[top], c, d)
        rb = _dist(sb[top], c, d)
        rmin = min(ra, rb)
        band = NEAR_SD * math.sqrt(t)
        near = False
        for i in range(m):
            bit = np.int64(1) << i
            if bits & bit:
                continue
            rho = radii[i]
            if rmin <= rho:
                bits |= bit
                newly |= bit
            elif rmin - rho < band:
                near = True
        lt_near = False
        lt_in = False
        if h > 0.0:
            if max(ra, rb) < h - band:
                lt_in = True
            elif rmin < h + band:
                lt_near = True
        if not (near or lt_near):
            if lt_in:
                inside += t
            continue
        if t > leaf and top + 2 < sa.shape[0]:
            # Levy midpoint; push the later half first (order is irrelevant here)
            s2 = math.sqrt(0.25 * t)
            for j in range(d):
                mid = 0.5 * (sa[top, j] + sb[top, j]) + s2 * rng.standard_normal()
                sa[top + 1, j] = mid
                sb[top + 1, j] = sb[top, j]
                sb[top, j] = mid
            st[top] = 0.5 * t
            st[top + 1] = 0.5 * t
            top += 2
            continue
        if near:
            # one uniform for all spheres: crossing a smaller sphere implies crossing the larger ones
            u = rng.random()
            for i in range(m):
                bit = np.int64(1) << i
                if bits & bit:
                    continue
                rho = radii[i]
                if rmin - rho < band:
                    if u < math.exp(-2.0 * (ra - rho) * (rb - rho) / t):
                        bits |= bit
                        newly |= bit
        if lt_in:
            inside += t
        elif lt_near:
            inside += 0.5 * t * ((1.0 if ra < h else 0.0) + (1.0 if rb < h else 0.0))
    return bits, newly, inside


@njit(cache=True, nogil=True)
def run_replicates(init_pos, init_off, N, center, radii, h, leaf, r_kill, tabs, du, masks, patterns,
                   drop_full, mass_times, max_events, max_pop, rng):
    """Evolve replicates whose initial particles are init_pos[init_off[k]:init_off[k+1]].

    Returns per replicate: crossing counts (n, m), time-in-ball (n,),
    completion sums (n, K), alive counts at ``mass_times`` (n, T), events
    (n,), status (n,).
    """
    n = init_off.shape[0] - 1
    d = init_pos.shape[1]
    m = radii.shape[0]
    K = tabs.shape[0]
    T = mass_times.shape[0]
    Z = np.zeros((n, m), np.int64)
    occ = np.zeros(n)
    comp = np.zeros((n, K))
    alive = np.zeros((n, T), np.int64)
    events = np.zeros(n, np.int64)
    status = np.zeros(n, np.int8)
    pos = np.empty((max_pop, d))
    bits = np.empty(max_pop, np.int64)
    born = np.empty(max_pop)
    sa = np.empty((MAX_BRIDGE_DEPTH, d))
    sb = np.empty((MAX_BRIDGE_DEPTH, d))
    st = np.empty(MAX_BRIDGE_DEPTH)
    y = np.empty(d)
    full = (np.int64(1) << m) - 1
    rate = float(N)
    for k in range(n):
        top = 0
        for q in range(init_off[k], init_off[k + 1]):
            if top >= max_pop:
                status[k] = POP_CAP
                break
            for j in range(d):
                pos[top, j] = init_pos[q, j]
            bits[top] = 0
            born[top] = 0.0
            top += 1
        ev = 0
        while top > 0 and status[k] == OK:
            top -= 1
            b0 = bits[top]
            t0 = born[top]
            life = -math.log(1.0 - rng.random()) / rate
            sd = math.sqrt(life)
            for j in range(d):
                y[j] = pos[top, j] + sd * rng.standard_normal()
            nb, newly, inside = _segment(pos[top], y, life, center, d, radii, b0, h, leaf, sa, sb, st, rng)
            if newly:
                for i in range(m):
                    if newly & (np.int64(1) << i):
                        Z[k, i] += 1
            occ[k] += inside
            for jt in range(T):
                if t0 <= mass_times[jt] < t0 + life:
                    alive[k, jt] += 1
            ev += 1
            if ev > max_events:
                status[k] = EVENT_CAP
                break
            if rng.random() < 0.5:
                continue
            if drop_full and nb == full:
                continue
            r = _dist(y, center, d)
            if r > r_kill:
                u = 1.0 / r
                for q in range(K):
                    if nb & masks[q] == patterns[q]:
                        comp[k, q] += 2.0 * _table(u, tabs[q], du)
                continue
            if top + 2 > max_pop:
                status[k] = POP_CAP
                break
            for c2 in range(2):
                for j in range(d):
                    pos[top, j] = y[j]
                bits[top] = nb
                born[top] = t0 + life
                top += 1
        events[k] = ev
    return Z, occ, comp, alive, events, status

"""Numba kernels for radial Bessel paths and their additive functionals.

A Bessel process of dimension delta = 2 + 2*m run on the Lamperti clock
I (dI = ds / rho^2) is exp(X) with X a Brownian motion of drift m.  With
X = log(rho / R) the inner sphere is the level X = 0, and an additive
functional int g(rho_s) ds becomes int h(X) dI with h(x) = g(R e^x) R^2 e^{2x}.

The integrand h is given by a uniform table on [0, x_tab] plus an
exponential tail a * exp(b * x) beyond it (the table may be empty).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

HIT = 1
ESCAPED = 0        # passed the outer cap or the weight became negligible
HORIZON = 2        # reached the real-time horizon
BUDGET = -1        # step budget exhausted

LAMPERTI = 0
EULER = 1


@njit(cache=True)
def _h(x, tab, dx, tail_a, tail_b):
    n = tab.shape[0]
    if n > 1:
        u = x / dx
        if u < 0.0:
            return tab[0]
        i = int(u)
        if i < n - 1:
            f = u - i
            return tab[i] * (1.0 - f) + tab[i + 1] * f
    return tail_a * math.exp(tail_b * x)


@njit(cache=True)
def lamperti_paths(x0, drift, d_clock, n, tab, dx, tail_a, tail_b, x_cap, kill_tol, t_horizon, scale2,
                   max_steps, rng):
    """Simulate ``n`` paths of X from x0 until X hits 0.

    Per path returns (status, int h dI, clock time, X at stop, real time).
    ``kill_tol`` > 0 stops a path once exp(-int h dI) < kill_tol (used for
    killed, nonnegative integrands).  ``t_horizon`` > 0 stops at that real
    time; real time increments are scale2 * e^{2X} dI.
    """
    status = np.empty(n, np.int8)
    integral = np.empty(n)
    clock = np.empty(n)
    xend = np.empty(n)
    real = np.empty(n)
    sd = math.sqrt(d_clock)
    log_kill = math.log(kill_tol) if kill_tol > 0.0 else -1e300
    for k in range(n):
        x = x0
        acc = 0.0
        t = 0.0
        s = 0.0
        st = BUDGET
        if x <= 0.0:
            st = HIT
        hx = _h(x, tab, dx, tail_a, tail_b)
        ex = math.exp(2.0 * x)
        steps = 0
        while st == BUDGET and steps < max_steps:
            steps += 1
            xn = x + drift * d_clock + sd * rng.standard_normal()
            if xn <= 0.0:
                frac = x / (x - xn)
                acc += 0.5 * (hx + _h(0.0, tab, dx, tail_a, tail_b)) * frac * d_clock
                s += 0.5 * scale2 * (ex + 1.0) * frac * d_clock
                t += frac * d_clock
                x = 0.0
                st = HIT
                break
            if rng.random() < math.exp(-2.0 * x * xn / d_clock):
                # bridge dipped below the sphere inside the step
                h0 = _h(0.0, tab, dx, tail_a, tail_b)
                acc += 0.25 * (hx + h0) * d_clock
                s += 0.25 * scale2 * (ex + 1.0) * d_clock
                t += 0.5 * d_clock
                x = 0.0
                st = HIT
                break
            hn = _h(xn, tab, dx, tail_a, tail_b)
            en = math.exp(2.0 * xn)
            ds = 0.5 * scale2 * (ex + en) * d_clock
            if t_horizon > 0.0 and s + ds >= t_horizon:
                frac = (t_horizon - s) / ds
                acc += 0.5 * (hx + hn) * frac * d_clock
                t += frac * d_clock
                x = x + frac * (xn - x)
                s = t_horizon
                st = HORIZON
                break
            acc += 0.5 * (hx + hn) * d_clock
            s += ds
            t += d_clock
            x = xn
            hx = hn
            ex = en
            if x >= x_cap or -acc < log_kill and kill_tol > 0.0:
                st = ESCAPED
                break
        status[k] = st
        integral[k] = acc
        clock[k] = t
        xend[k] = x
        real[k] = s
    return status, integral, clock, xend, real


@njit(cache=True)
def euler_paths(r0, R, dim, dt, c_cap, n, tab, dx, tail_a, tail_b, r_cap, max_steps, rng):
    """Euler-Maruyama on rho with reflection guard and steps capped by c*rho^2.

    Same outputs as ``lamperti_paths`` (clock time is int ds / rho^2).
    """
    status = np.empty(n, np.int8)
    integral = np.empty(n)
    clock = np.empty(n)
    xend = np.empty(n)
    real = np.empty(n)
    b = 0.5 * (dim - 1.0)
    R2 = R * R
    for k in range(n):
        rho = r0
        acc = 0.0
        t = 0.0
        s = 0.0
        st = BUDGET
        if rho <= R:
            st = HIT
        x = math.log(rho / R)
        g = _h(x, tab, dx, tail_a, tail_b) / (rho * rho / R2) / R2
        steps = 0
        while st == BUDGET and steps < max_steps:
            steps += 1
            h = min(dt, c_cap * rho * rho)
            rn = abs(rho + b / rho * h + math.sqrt(h) * rng.standard_normal())
            if rn <= R:
                frac = (rho - R) / (rho - rn)
                gR = _h(0.0, tab, dx, tail_a, tail_b) / R2
                acc += 0.5 * (g + gR) * frac * h
                t += 0.5 * (1.0 / (rho * rho) + 1.0 / R2) * frac * h
                s += frac * h
                rho = R
                st = HIT
                break
            if rng.random() < math.exp(-2.0 * (rho - R) * (rn - R) / h):
                gR = _h(0.0, tab, dx, tail_a, tail_b) / R2
                acc += 0.25 * (g + gR) * h
                t += 0.25 * (1.0 / (rho * rho) + 1.0 / R2) * h
                s += 0.5 * h
                rho = R
                st = HIT
                break
            xn = math.log(rn / R)
            gn = _h(xn, tab, dx, tail_a, tail_b) / (rn * rn)
            acc += 0.5 * (g + gn) * h
            t += 0.5 * (1.0 / (rho * rho) + 1.0 / (rn * rn)) * h
            s += h
            rho = rn
            g = gn
            if rho >= r_cap:
                st = ESCAPED
                break
        status[k] = st
        integral[k] = acc
        clock[k] = t
        xend[k] = math.log(rho / R)
        real[k] = s
    return status, integral, clock, xend, real


@njit(cache=True)
def lamperti_trace(x0, drift, d_clock, max_steps, rng):
    """One path of X until it hits 0; returns clock times and X values."""
    xs = np.empty(1024)
    ts = np.empty(1024)
    xs[0] = x0
    ts[0] = 0.0
    n = 1
    x = x0
    t = 0.0
    sd = math.sqrt(d_clock)
    ok = x0 <= 0.0
    while not ok and n < max_steps:
        xn = x + drift * d_clock + sd * rng.standard_normal()
        hit = xn <= 0.0
        dtc = d_clock
        if hit:
            dtc = d_clock * x / (x - xn)
            xn = 0.0
        elif rng.random() < math.exp(-2.0 * x * xn / d_clock):
            hit = True
            dtc = 0.5 * d_clock
            xn = 0.0
        t += dtc
        if n == xs.shape[0]:
            xs = np.concatenate((xs, np.empty(n)))
            ts = np.concatenate((ts, np.empty(n)))
        xs[n] = xn
        ts[n] = t
        n += 1
        x = xn
        ok = hit
    return ok, ts[:n], xs[:n]

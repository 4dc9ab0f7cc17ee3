"""Adaptive Dormand-Prince 5(4) integrator for the radial equation U'' + (d-1)/r U' = U**2."""
from __future__ import annotations

import numpy as np
from numba import njit

REACHED_END = 0
TOO_HIGH = 1
TOO_LOW = -1
STEP_FAILURE = 2

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)


@njit(cache=True)
def _f(dm1, r, u, v):
    return v, u * u - dm1 * v / r


@njit(cache=True)
def integrate(d, r0, u0, v0, r_end, lam_d, rtol, atol, record, max_steps, classify=True, margin=1e-9):
    """Integrate outward from r0 to r_end, stopping early once the trajectory
    is classified relative to the decaying separatrix.

    Classification uses w = r^2 U and its log-derivative w_t = r^2 (2U + rU'):
    w > lam_d with w_t > 0 can only blow up (TOO_HIGH); w < lam_d with w_t < 0
    can only fall away from lam_d (TOO_LOW).  Both tests use a relative
    ``margin`` around lam_d so that round-off along the separatrix is not
    mistaken for a departure.

    With ``classify`` false the run only stops on numerical blow-up or when
    U turns negative, which is how the final (recorded) profile is produced.

    Returns (status, r_stop, u_stop, v_stop, rs, us, vs) where the arrays hold
    accepted steps when ``record`` is true.
    """
    dm1 = float(d - 1)
    cap = 1024 if record else 1
    rs = np.empty(cap)
    us = np.empty(cap)
    vs = np.empty(cap)
    n = 0
    if record:
        rs[0] = r0
        us[0] = u0
        vs[0] = v0
        n = 1
    r = r0
    u = u0
    v = v0
    span = r_end - r0
    h = min(1e-3 * max(r0, 1e-12), span)
    if abs(u0) > 0.0:
        h = min(h, 1e-2 * abs(u0) / max(abs(v0), 1e-300))
    k1u, k1v = _f(dm1, r, u, v)
    status = REACHED_END
    steps = 0
    while r < r_end:
        if steps >= max_steps:
            status = STEP_FAILURE
            break
        steps += 1
        if r + h > r_end:
            h = r_end - r
        k2u, k2v = _f(dm1, r + 0.2 * h, u + h * _A21 * k1u, v + h * _A21 * k1v)
        k3u, k3v = _f(dm1, r + 0.3 * h, u + h * (_A31 * k1u + _A32 * k2u), v + h * (_A31 * k1v + _A32 * k2v))
        k4u, k4v = _f(dm1, r + 0.8 * h, u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                      v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v))
        k5u, k5v = _f(dm1, r + 8.0 / 9.0 * h, u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                      v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v))
        k6u, k6v = _f(dm1, r + h, u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                      v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v))
        un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
        k7u, k7v = _f(dm1, r + h, un, vn)
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
        su = atol + rtol * max(abs(u), abs(un))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = np.sqrt(0.5 * ((eu / su) ** 2 + (ev / sv) ** 2))
        if not np.isfinite(err):
            h *= 0.1
            if h < 1e-14 * max(r, 1.0):
                status = STEP_FAILURE
                break
            continue
        if err <= 1.0:
            r = r + h
            u = un
            v = vn
            k1u = k7u
            k1v = k7v
            if record:
                if n == rs.shape[0]:
                    rs = np.concatenate((rs, np.empty(n)))
                    us = np.concatenate((us, np.empty(n)))
                    vs = np.concatenate((vs, np.empty(n)))
                rs[n] = r
                us[n] = u
                vs[n] = v
                n += 1
            w = r * r * u
            wt = r * r * (2.0 * u + r * v)
            if classify:
                if w > lam_d * (1.0 + margin) and wt > 0.0:
                    status = TOO_HIGH
                    break
                if w < lam_d * (1.0 - margin) and wt < 0.0:
                    status = TOO_LOW
                    break
            elif w > 1e6 * (lam_d + 1.0) and wt > 0.0:
                status = TOO_HIGH
                break
            elif w < 0.0:
                status = TOO_LOW
                break
            fac = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * err ** -0.2)
            if h < 1e-14 * max(r, 1.0):
                status = STEP_FAILURE
                break
    return status, r, u, v, rs[:n], us[:n], vs[:n]

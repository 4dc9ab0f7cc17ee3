"""Dimension-dependent exponents and closed-form functions for d <= 3."""
from __future__ import annotations

import math
from dataclasses import dataclass

SUPPORTED_DIMENSIONS = (1, 2, 3)


def check_dimension(d: int) -> int:
    if isinstance(d, bool) or int(d) != d or int(d) not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {d!r}")
    return int(d)


@dataclass(frozen=True)
class CriticalExponents:
    """Exponents indexed by the spatial dimension.

    ``mu`` is fixed by ``d = 2 + 2*mu``; everything else is derived from it.
    """

    d: int
    p: float
    alpha: float
    mu: float
    nu: float
    lambda_d: float


def exponents(d: int) -> CriticalExponents:
    d = check_dimension(d)
    mu = (d - 2) / 2.0
    nu = math.sqrt(mu * mu + 4.0 * (4 - d))
    p = mu + nu
    alpha = (p - 2.0) / (4 - d)
    lambda_d = 2.0 * (4 - d)
    return CriticalExponents(d=d, p=p, alpha=alpha, mu=mu, nu=nu, lambda_d=lambda_d)


def psi0(d: int, eps: float) -> float:
    """Renormalizer turning the exit mass at radius eps into local time."""
    d = check_dimension(d)
    if d == 1:
        raise ValueError("psi0 is only defined for d=2 and d=3")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if d == 2:
        # log+ convention: zero for eps >= 1
        return max(math.log(1.0 / eps), 0.0) / math.pi
    return 1.0 / (2.0 * math.pi * eps)


def v_infinity(d: int, r):
    """lambda_d / r**2; accepts scalars or numpy arrays."""
    lam = exponents(d).lambda_d
    try:
        bad = not r > 0
    except ValueError:
        bad = not (r > 0).all()
    if bad:
        raise ValueError("v_infinity is singular at the origin; r must be > 0")
    return lam / (r * r)


def green_half_laplacian(d: int, r: float) -> float:
    """Green function of Delta/2 at distance r (d=3 only; recurrent otherwise)."""
    d = check_dimension(d)
    if d != 3:
        raise ValueError("Delta/2 has a finite Green function only for d=3 here")
    return 1.0 / (2.0 * math.pi * r)


def ball_volume(d: int, h: float) -> float:
    d = check_dimension(d)
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * h**d

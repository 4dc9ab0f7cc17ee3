"""Replicate-indexed random streams.

Replicate ``k`` of module ``module`` draws from a Philox generator whose key
is derived from ``(master_seed, module id, k)``; results never depend on the
order in which replicates are run.
"""
from __future__ import annotations

import zlib

import numpy as np

DEFAULT_SEED = 20210407

_MODULE_IDS = {"ode": 1, "bessel": 2, "particle": 3, "verify": 4, "cli": 5}


def module_id(module: str | int) -> int:
    if isinstance(module, int):
        return module
    if module in _MODULE_IDS:
        return _MODULE_IDS[module]
    # stable id for ad-hoc experiment names
    return 1000 + zlib.crc32(module.encode())


def _flatten(k):
    if isinstance(k, tuple):
        for v in k:
            yield from _flatten(v)
    else:
        yield int(k)


def stream(master_seed: int, module: str | int, k) -> np.random.Generator:
    """``k`` is a replicate index or a tuple of nonnegative indices (e.g. (experiment, block))."""
    ks = list(_flatten(k))
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), module_id(module), *ks])
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def streams(master_seed: int, module: str | int, start: int, count: int):
    for k in range(start, start + count):
        yield stream(master_seed, module, k)

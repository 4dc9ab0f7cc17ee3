"""Monte Carlo estimates and named pass/fail comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, samples) -> "MCEstimate":
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        sd = float(x.std(ddof=1)) if n > 1 else 0.0
        return cls(float(x.mean()), sd / math.sqrt(n), n)

    def scaled(self, c: float) -> "MCEstimate":
        return MCEstimate(self.mean * c, self.stderr * abs(c), self.n)

    @property
    def rel_stderr(self) -> float:
        return self.stderr / abs(self.mean) if self.mean else math.inf


def _num(x):
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass(frozen=True)
class CheckResult:
    """One named comparison of an estimate against a target.

    ``target`` is a float, or an ``(lo, hi)`` interval for bound checks.
    """

    name: str
    estimate: float
    stderr: float
    target: Any
    tolerance_rule: str
    passed: bool
    detail: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "estimate": _num(self.estimate),
            "stderr": _num(self.stderr),
            "target": _num(list(self.target) if isinstance(self.target, (tuple, list)) else self.target),
            "tolerance_rule": self.tolerance_rule,
            "pass": bool(self.passed),
        }
        if self.detail:
            out["detail"] = {k: _num(v) if isinstance(v, (int, float, list, tuple)) and not isinstance(v, bool) else v
                             for k, v in self.detail.items()}
        return out

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        tgt = self.target
        if isinstance(tgt, (tuple, list)):
            tgt = "[" + ", ".join(f"{t:.6g}" for t in tgt) + "]"
        else:
            tgt = f"{tgt:.6g}"
        return f"[{flag}] {self.name}: estimate={self.estimate:.6g} stderr={self.stderr:.3g} target={tgt} ({self.tolerance_rule})"


def within_stderr(name: str, est: float, se: float, target: float, k: float = 3.0, **detail) -> CheckResult:
    ok = abs(est - target) <= k * se
    return CheckResult(name, est, se, target, f"|estimate-target| <= {k:g}*stderr", bool(ok), detail)


def within_abs(name: str, est: float, target: float, tol: float, se: float = 0.0, **detail) -> CheckResult:
    ok = abs(est - target) <= tol
    return CheckResult(name, est, se, target, f"|estimate-target| <= {tol:g}", bool(ok), detail)


def within_rel(name: str, est: float, target: float, rel: float, se: float = 0.0, **detail) -> CheckResult:
    ok = abs(est - target) <= rel * abs(target)
    return CheckResult(name, est, se, target, f"|estimate-target| <= {rel:g}*|target|", bool(ok), detail)


def at_most(name: str, est: float, bound: float, se: float = 0.0, k: float = 3.0, slack: float = 0.0,
            **detail) -> CheckResult:
    ok = est <= bound + k * se + slack
    rule = f"estimate <= bound + {k:g}*stderr" if se else "estimate <= bound"
    if slack:
        rule += f" + {slack:g}"
    return CheckResult(name, est, se, (-math.inf, bound), rule, bool(ok), detail)


def at_least(name: str, est: float, bound: float, se: float = 0.0, k: float = 3.0, slack: float = 0.0,
             **detail) -> CheckResult:
    ok = est >= bound - k * se - slack
    rule = f"estimate >= bound - {k:g}*stderr" if se else "estimate >= bound"
    if slack:
        rule += f" - {slack:g}"
    return CheckResult(name, est, se, (bound, math.inf), rule, bool(ok), detail)


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(r.passed for r in results)

"""Command line interface: ``sbmexit {ode,bessel,sim,verify}``.

Parameters come from flags or from a key=value config file with section
headers (``[general]`` applies to every subcommand, ``[ode]``, ``[bessel]``,
``[sim]`` and ``[verify]`` to one).  Flags override the file.  Outputs go
to ``--out``: CSV sample files and ``report.json``, the list of checks.
Exit code 0 when every check passes, 1 when one fails, 2 on errors.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import bessel, ode, particle, verify
from .constants import SUPPORTED_DIMENSIONS, exponents
from .results import all_passed, at_most, within_abs
from .rng import DEFAULT_SEED

COMMANDS = ("ode", "bessel", "sim", "verify")
BESSEL_CHECKS = ("lemma41", "hitting", "prop43", "girsanov", "f_lambda", "K", "feynman_kac")
SIM_CHECKS = ("none", "exit_mean", "laplace")


class ConfigError(ValueError):
    """Invalid configuration: unknown key, missing field or violated precondition."""


@dataclass(frozen=True)
class RunSpec:
    command: str
    d: int
    seed: int = DEFAULT_SEED
    out: str = "sbmexit_out"
    threads: int = 1
    replicates: int | None = None
    dt: float | None = None
    experiment: str = "all"
    check: str | None = None
    lam: tuple | None = None
    kappa: float | None = None
    eps: tuple | None = None
    x: float | None = None
    gamma: float = 2.0
    q: float = 2.0
    r: float = 2.0
    N: int | None = None
    h: float | None = None
    r_kill: float | None = None
    rmax: float = ode.DEFAULT_RMAX
    mass: float | None = None
    mode: str = "cluster"
    infinite: bool = False
    scale: float = 1.0
    t: float = 1.0
    mu: float = 0.5


def _floats(s) -> tuple:
    if isinstance(s, tuple):
        return s
    try:
        return tuple(float(v) for v in str(s).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {s!r}") from None


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


# key -> (converter, subcommands that accept it)
_ALL = set(COMMANDS)
_KEYS = {
    "d": (int, _ALL),
    "seed": (int, _ALL),
    "out": (str, _ALL),
    "threads": (int, _ALL),
    "replicates": (int, {"bessel", "sim", "verify"}),
    "dt": (float, {"bessel", "sim", "verify"}),
    "experiment": (str, {"verify"}),
    "check": (str, {"bessel", "sim"}),
    "lam": (_floats, _ALL),
    "kappa": (float, {"verify"}),
    "eps": (_floats, _ALL),
    "x": (float, {"bessel", "sim", "verify"}),
    "gamma": (float, {"bessel"}),
    "q": (float, {"bessel"}),
    "r": (float, {"bessel"}),
    "N": (int, {"sim", "verify"}),
    "h": (float, {"sim", "verify"}),
    "r_kill": (float, {"sim", "verify"}),
    "rmax": (float, {"ode"}),
    "mass": (float, {"sim", "verify"}),
    "mode": (str, {"sim"}),
    "infinite": (_bool, {"ode"}),
    "scale": (float, {"verify"}),
    "t": (float, {"bessel"}),
    "mu": (float, {"bessel"}),
}
_ALIASES = {"lambda": "lam", "n": "N", "r-kill": "r_kill"}


def _key(k: str) -> str:
    k = k.strip()
    return _ALIASES.get(k, _ALIASES.get(k.lower(), k))


def _convert(key, value):
    conv = _KEYS[key][0]
    try:
        return conv(value)
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def read_config(path, command: str) -> dict:
    """Values for ``command`` from a config file: [general] first, then the command's section."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[general]\n" + text
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config file: {e}") from None
    out = {}
    for sec in cp.sections():
        if sec != "general" and sec not in COMMANDS:
            raise ConfigError(f"unknown config section [{sec}]")
    for sec in ("general", command):
        if not cp.has_section(sec):
            continue
        for k, v in cp.items(sec):
            key = _key(k)
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {k!r} in [{sec}]")
            if command not in _KEYS[key][1]:
                if sec == "general":
                    continue
                raise ConfigError(f"key {k!r} does not apply to {command}")
            out[key] = _convert(key, v)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbmexit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="key=value config file with section headers")
        for key, (_, cmds) in _KEYS.items():
            if cmd not in cmds:
                continue
            flag = "--" + {"lam": "lambda", "r_kill": "r-kill"}.get(key, key)
            if key == "infinite":
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    return ap


def parse_config(argv=None) -> RunSpec:
    """Flags (and an optional --config file) to a validated RunSpec."""
    args = build_parser().parse_args(argv)
    vals = read_config(args.config, args.command) if args.config else {}
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = _convert(key, v)
    if "d" not in vals:
        raise ConfigError("missing required field: d")
    spec = RunSpec(command=args.command, **vals)
    validate(spec)
    return spec


def validate(s: RunSpec) -> None:
    if s.d not in SUPPORTED_DIMENSIONS:
        raise ConfigError(f"d must be one of {SUPPORTED_DIMENSIONS}")
    if s.threads < 1:
        raise ConfigError("threads must be >= 1")
    if s.replicates is not None and s.replicates < 2:
        raise ConfigError("replicates must be >= 2")
    if s.dt is not None and not s.dt > 0:
        raise ConfigError("dt must be positive")
    if s.eps is not None and any(not e > 0 for e in s.eps):
        raise ConfigError("eps > 0 required")
    if s.lam is not None and any(not v > 0 for v in s.lam):
        raise ConfigError("lambda > 0 required")
    if s.eps is not None and s.x is not None and any(e >= s.x for e in s.eps):
        raise ConfigError("ε < |x| required (eps < x)")
    if s.N is not None and s.N < 1:
        raise ConfigError("N must be a positive integer")
    if s.command == "ode":
        if not s.infinite and not s.lam:
            raise ConfigError("ode needs --lambda or --infinite")
        if s.eps is not None and len(s.eps) != 1:
            raise ConfigError("ode takes a single eps")
        if not s.rmax > 1:
            raise ConfigError("rmax must exceed 1")
    elif s.command == "bessel":
        if s.check not in BESSEL_CHECKS:
            raise ConfigError(f"bessel needs --check in {BESSEL_CHECKS}")
        if s.check == "lemma41" and not s.r >= 1:
            raise ConfigError("r >= 1 required")
    elif s.command == "sim":
        if s.mode not in ("cluster", "superposition"):
            raise ConfigError("mode must be cluster or superposition")
        if (s.check or "none") not in SIM_CHECKS:
            raise ConfigError(f"sim check must be one of {SIM_CHECKS}")
        if s.h is not None and s.h < 0:
            raise ConfigError("h >= 0 required")
    elif s.command == "verify":
        if s.experiment != "all" and s.experiment not in verify.EXPERIMENTS:
            raise ConfigError(f"experiment must be 'all' or one of {verify.EXPERIMENTS}")
        if s.kappa is not None and not s.kappa > 0:
            raise ConfigError("kappa > 0 required")
        if not s.scale > 0:
            raise ConfigError("scale must be positive")


# ---------------------------------------------------------------------------------
def _write(out: Path, name: str, text: str) -> None:
    with open(out / name, "w", newline="\n") as fh:
        fh.write(text)


def _run_ode(s: RunSpec, out: Path):
    eps = s.eps[0] if s.eps else 1.0
    if s.infinite:
        sol = ode.solve_U_infinity(s.d, eps, rmax=s.rmax)
        tag = f"d={s.d},lam=inf,eps={eps:g}"
    else:
        sol = ode.solve_U(s.d, s.lam[0], eps, rmax=s.rmax)
        tag = f"d={s.d},lam={s.lam[0]:g},eps={eps:g}"
    _write(out, "ode_profile.csv", sol.to_csv())
    res = [at_most(f"ode.residual[{tag}]", sol.residual(), ode.RESIDUAL_TOL),
           at_most(f"ode.farfield[{tag}]", sol.farfield_error(), ode.FARFIELD_TOL)]
    lam_d = exponents(s.d).lambda_d
    if not s.infinite and math.isclose(s.lam[0] * eps * eps, lam_d, rel_tol=1e-12):
        r = np.linspace(eps, min(50.0 * eps, sol.grid[-1]), 2000)
        err = float(np.max(np.abs(sol.at(r) * r**2 - lam_d)))
        res.append(within_abs(f"ode.closed_form[{tag}]", err, 0.0, 1e-6, note="max |U r^2 - lambda_d|"))
    return res


def _run_bessel(s: RunSpec, out: Path):
    ex = exponents(s.d)
    n = s.replicates or 100_000
    dt = s.dt or bessel.DEFAULT_DT
    lam = s.lam[0] if s.lam else 2.0 * ex.lambda_d
    if s.check == "lemma41":
        return [bessel.lemma41_check(ex.nu, s.gamma, q=s.q, r=s.r, n=n, dt=dt, seed=s.seed)]
    if s.check == "hitting":
        R = s.eps[0] if s.eps else 1.0
        return [bessel.hitting_check(ex.nu, s.r, R, n=n, dt=dt, seed=s.seed)]
    if s.check == "prop43":
        x = s.x if s.x is not None else 1.0
        eps = s.eps[0] if s.eps else 0.5
        return bessel.prop43_two_sided(s.d, x, eps, n=n, dt=dt, seed=s.seed)
    if s.check == "girsanov":
        R = s.eps[0] if s.eps else 1.0
        return [bessel.girsanov_check(lam, s.mu, s.r, R, s.t, n=n, dt=dt, seed=s.seed)]
    if s.check == "feynman_kac":
        x = s.x if s.x is not None else 3.0
        return [bessel.feynman_kac_check(s.d, lam, x, n=n, dt=dt, seed=s.seed)]
    if s.check == "f_lambda":
        est = bessel.f_lambda(s.d, lam, s.r, n=n, dt=dt, seed=s.seed)
        _write(out, "f_lambda.csv", f"lambda,r,estimate,stderr\n{lam!r},{s.r!r},{est.mean!r},{est.stderr!r}\n")
        return []
    K = bessel.estimate_K(s.d, lam, n=n, dt=dt, seed=s.seed)
    rows = "".join(f"{r!r},{v!r},{e!r}\n" for r, v, e in zip(K.r_grid, K.values, K.stderrs))
    _write(out, "K_plateau.csv", "r,f_lambda,stderr\n" + rows)
    return []


def _run_sim(s: RunSpec, out: Path):
    x = s.x if s.x is not None else 1.0
    eps = s.eps or (0.2,)
    n = s.replicates or 10_000
    N = s.N or particle.DEFAULT_N
    check = s.check or "none"
    if check == "exit_mean":
        return [particle.exit_mean_check(s.d, x, eps[0], N=N, n=n, r_kill=s.r_kill or 2.0 * x, seed=s.seed,
                                         threads=s.threads)]
    if check == "laplace":
        lams = s.lam or (1.0, 2.0, 4.0)
        return [particle.laplace_check(v, s.d, x, eps[0], N=N, n=n, r_kill=s.r_kill or 2.0 * x, seed=s.seed,
                                       threads=s.threads) for v in lams]
    c = np.zeros(s.d)
    c[0] = x
    spheres = particle.SphereFamily(c, tuple(sorted(eps, reverse=True)))
    kw = dict(h=s.h, dt=s.dt, r_kill=s.r_kill, seed=s.seed, threads=s.threads)
    if s.mode == "cluster":
        res = particle.simulate_cluster(s.d, np.zeros(s.d), N, spheres, n, **kw)
    else:
        X0 = particle.InitialMeasure.dirac(np.zeros(s.d), s.mass or 1.0)
        res = particle.simulate_superposition(s.d, X0, N, spheres, n, **kw)
    _write(out, "sim_samples.csv", res.to_csv())
    _write(out, "sim_summary.json", json.dumps(particle.summary(res), indent=2) + "\n")
    return []


def _run_verify(s: RunSpec, out: Path):
    cfg = verify.VerifyConfig(d=s.d, x=s.x, eps=s.eps, lam=s.lam, kappa=s.kappa, N=s.N, replicates=s.replicates,
                              mass=s.mass, h=s.h, dt=s.dt, r_kill=s.r_kill, scale=s.scale, seed=s.seed,
                              threads=s.threads)
    if s.experiment == "all":
        res, dumps = verify.run_all(cfg)
    else:
        res, dumps = verify.run_experiment(s.experiment, cfg)
    for name, text in sorted(dumps.items()):
        _write(out, name, text)
    return res


_RUNNERS = {"ode": _run_ode, "bessel": _run_bessel, "sim": _run_sim, "verify": _run_verify}


def run(spec: RunSpec) -> int:
    """Execute ``spec``; returns the exit code (0 all pass, 1 a check failed)."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    results = _RUNNERS[spec.command](spec, out)
    report = verify.report(results)
    _write(out, "report.json", json.dumps(report, indent=2) + "\n")
    cfg = {f.name: getattr(spec, f.name) for f in fields(spec) if f.name not in ("threads", "out")}
    _write(out, "config.json", json.dumps({k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()},
                                          indent=2) + "\n")
    for r in results:
        print(r.line())
    return 0 if all_passed(results) else 1


def main(argv=None) -> int:
    try:
        spec = parse_config(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        return run(spec)
    except Exception as e:  # runtime failure: exit code 2
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

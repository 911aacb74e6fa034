"""Command-line front door.

Parses a structured parameter file, dispatches subcommands onto the library
modules, persists numeric artifacts as 17-significant-digit CSV and reports
as JSON, and drops a run manifest next to each run's outputs attesting to
the configuration hash and input hashes.  Exit codes: 0 success, 1
validation failure, 2 numerical error, 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import shlex
import sys
import time
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback, declared in the dependencies
    import tomli as tomllib

from . import __version__
from .boundlab import BoundProbe, lemma42_report, predicted_exponents
from .convolve import ConvolutionPlan
from .errors import (
    BlowupError,
    CrossCheckFailure,
    OscBudgetError,
    RenormLabError,
    StepRejectedError,
)
from .invariants import envelope_membership_ED, membership_EtD, membership_Mmu
from .oracle import StepControl, energy_curve, evolve, initial_data, selfsimilar_deviation
from .params import ModelParams, default_params, validate_space_params
from .profiles import GridSpec, load_profile, make_ansatz, save_profile, sidecar_path
from .renorm import apply_renorm
from .solver import SolveConfig, beta_continuation, fixed_point_solve

__all__ = ["RunManifest", "run", "main"]

_CONFIG_ENV = "RENORMLAB_CONFIG"

_SPACE_KEYS = ("p", "nu", "z1", "z2", "D", "A", "theta", "sigma", "mu", "beta0", "delta0")


@dataclass(frozen=True)
class RunManifest:
    """Attestation written next to a run's outputs."""

    command: str
    config_hash: str
    input_hashes: tuple
    outputs: tuple
    wall_time: float
    version: str
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "input_hashes": list(self.input_hashes),
            "outputs": list(self.outputs),
            "wall_time": self.wall_time,
            "version": self.version,
            "extras": dict(self.extras),
        }


def _load_config(path: str | None) -> dict:
    if path is None:
        path = os.environ.get(_CONFIG_ENV)
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _params_from_config(cfg: dict):
    r = int(cfg.get("r", 1))
    mp0, sp0 = default_params(r)
    mp = ModelParams(r=r, T=float(cfg.get("T", mp0.T)))
    overrides = {k: float(cfg[k]) for k in _SPACE_KEYS if k in cfg}
    sp = dataclasses.replace(sp0, **overrides) if overrides else sp0
    g = cfg.get("grid", {})
    grid = GridSpec(
        eta_max=float(g.get("eta_max", 30.0)),
        n=int(g.get("n", 2048)),
        stretch=float(g.get("stretch", 3.0)),
    )
    return mp, sp, grid


def _params_payload(mp: ModelParams, sp, grid: GridSpec) -> dict:
    return {
        "r": mp.r,
        "T": mp.T,
        "space": {k: getattr(sp, k) for k in _SPACE_KEYS},
        "grid": {"eta_max": grid.eta_max, "n": grid.n, "stretch": grid.stretch},
    }


def _config_hash(command: str, params: dict, options: dict) -> str:
    payload = {"command": command, "params": params, "options": options}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _file_hash(path: str) -> dict:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return {"path": path, "sha256": digest.hexdigest()}


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_manifest(
    argv_used: list[str],
    config_hash: str,
    inputs: list[str],
    outputs: list[str],
    started: float,
    extras: dict | None = None,
) -> str:
    for out in outputs:
        if not os.path.exists(out):
            raise OSError(f"declared output missing: {out}")
    manifest = RunManifest(
        command="renormlab " + " ".join(shlex.quote(a) for a in argv_used),
        config_hash=config_hash,
        input_hashes=tuple(_file_hash(p) for p in inputs),
        outputs=tuple(outputs),
        wall_time=time.perf_counter() - started,
        version=__version__,
        extras=extras or {},
    )
    path = outputs[0] + ".manifest.json"
    _write_json(path, manifest.as_dict())
    return path


def _apply_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ValueError("threads must be positive")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _parser(name: str, description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"renormlab {name}", description=description)
    p.add_argument("--config", help="parameter file (TOML); defaults to $RENORMLAB_CONFIG")
    p.add_argument("--threads", type=int, help="cap internal thread pools")
    return p


def _profile_inputs(path: str) -> list[str]:
    side = sidecar_path(path)
    return [path, side] if os.path.exists(side) else [path]


def _csv_outputs(path: str) -> list[str]:
    return [path, sidecar_path(path)]


# ------------------------------------------------------------ subcommands


def _cmd_validate(argv: list[str]) -> int:
    p = _parser("validate", "run the parameter admissibility checks")
    p.add_argument("--report", help="also write the report JSON here")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    report = validate_space_params(mp, sp)
    print(json.dumps(report.as_dict(), indent=2))
    if args.report:
        _write_json(args.report, report.as_dict())
        chash = _config_hash("validate", _params_payload(mp, sp, grid), {})
        inputs = [args.config] if args.config else []
        _write_manifest(["validate"] + argv, chash, inputs, [args.report], started)
    return 0 if report.ok else 1


def _cmd_make_ansatz(argv: list[str]) -> int:
    p = _parser("make-ansatz", "write the quadratic-phase test profile")
    p.add_argument("--a", type=float, required=True, help="amplitude")
    p.add_argument("--out", required=True, help="profile CSV path")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    psi = make_ansatz(args.a, sp, grid)
    save_profile(args.out, psi)
    chash = _config_hash(
        "make-ansatz", _params_payload(mp, sp, grid), {"a": args.a}
    )
    inputs = [args.config] if args.config else []
    _write_manifest(["make-ansatz"] + argv, chash, inputs, _csv_outputs(args.out), started)
    return 0


def _cmd_apply(argv: list[str]) -> int:
    p = _parser("apply", "apply the renormalization map once")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--in", dest="infile", required=True, help="input profile CSV")
    p.add_argument("--out", required=True, help="output profile CSV")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    psi = load_profile(args.infile)
    image = apply_renorm(psi, mp, args.beta, ConvolutionPlan())
    save_profile(args.out, image)
    chash = _config_hash("apply", _params_payload(mp, sp, grid), {"beta": args.beta})
    _write_manifest(
        ["apply"] + argv, chash, _profile_inputs(args.infile), _csv_outputs(args.out), started
    )
    return 0


def _cmd_solve(argv: list[str]) -> int:
    p = _parser("solve", "damped fixed-point iteration at one beta")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--init", required=True, help="initial profile CSV")
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=40)
    p.add_argument("--parity", default="even", choices=("even", "odd", "none"))
    p.add_argument("--anderson", type=int, default=0, help="mixing history depth")
    p.add_argument("--out", required=True, help="solution profile CSV")
    p.add_argument("--report", required=True, help="residual report JSON")
    p.add_argument("--strict", action="store_true", help="non-convergence exits 2")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    init = load_profile(args.init)
    cfg = SolveConfig(
        beta=args.beta,
        damping=args.damping,
        tol=args.tol,
        max_iter=args.max_iter,
        parity=args.parity,
        anderson_depth=args.anderson,
    )
    psi, report = fixed_point_solve(init, cfg, mp, sp)
    save_profile(args.out, psi)
    _write_json(args.report, report.as_dict())
    options = {
        "beta": args.beta,
        "damping": args.damping,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "parity": args.parity,
        "anderson": args.anderson,
    }
    chash = _config_hash("solve", _params_payload(mp, sp, grid), options)
    outputs = _csv_outputs(args.out) + [args.report]
    _write_manifest(["solve"] + argv, chash, _profile_inputs(args.init), outputs, started)
    if args.strict and not report.converged:
        print("solve did not converge (strict mode)", file=sys.stderr)
        return 2
    return 0


def _cmd_continue(argv: list[str]) -> int:
    p = _parser("continue", "warm-started solves along an ascending beta schedule")
    p.add_argument("--betas", required=True, help="comma-separated ascending schedule")
    p.add_argument("--init", required=True, help="initial profile CSV")
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=40)
    p.add_argument("--parity", default="even", choices=("even", "odd", "none"))
    p.add_argument("--anderson", type=int, default=0)
    p.add_argument("--out-dir", required=True, help="directory for stage profiles")
    p.add_argument("--report", required=True, help="stage report JSON")
    p.add_argument("--strict", action="store_true")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    betas = [float(tok) for tok in args.betas.split(",") if tok]
    init = load_profile(args.init)
    cfg = SolveConfig(
        beta=betas[0] if betas else 0.5,
        damping=args.damping,
        tol=args.tol,
        max_iter=args.max_iter,
        parity=args.parity,
        anderson_depth=args.anderson,
    )
    stages = beta_continuation(betas, init, cfg, mp, sp)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    rows = []
    for beta, prof, rep in stages:
        path = os.path.join(args.out_dir, f"psi-beta-{beta:g}.csv")
        save_profile(path, prof)
        outputs.extend(_csv_outputs(path))
        rows.append({"beta": beta, "profile": path, **rep.as_dict()})
    _write_json(args.report, {"betas": betas, "stages": rows})
    options = {
        "betas": betas,
        "damping": args.damping,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "parity": args.parity,
        "anderson": args.anderson,
    }
    chash = _config_hash("continue", _params_payload(mp, sp, grid), options)
    _write_manifest(
        ["continue"] + argv, chash, _profile_inputs(args.init), [args.report] + outputs, started
    )
    if args.strict and any(not rep.converged for _, _, rep in stages):
        print("a continuation stage did not converge (strict mode)", file=sys.stderr)
        return 2
    return 0


def _cmd_verify(argv: list[str]) -> int:
    p = _parser("verify", "membership check against one invariant set")
    p.add_argument("--set", dest="set_name", required=True, choices=("ED", "EtD", "Mmu"))
    p.add_argument("--in", dest="infile", required=True, help="profile CSV")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    _, sp, _ = _params_from_config(_load_config(args.config))
    psi = load_profile(args.infile)
    if args.set_name == "ED":
        report = envelope_membership_ED(psi, sp.D, sp)
    elif args.set_name == "EtD":
        report = membership_EtD(psi, sp)
    else:
        report = membership_Mmu(psi, sp.mu, sp.sigma, sp.D, sp)
    print(json.dumps(report.as_dict(), indent=2))
    return 0 if report.passed else 1


def _cmd_boundlab(argv: list[str]) -> int:
    p = _parser("boundlab", "empirical check of the convolution-gain power laws")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--z1", type=float, default=-0.7)
    p.add_argument("--z2", type=float, default=-1.5)
    p.add_argument("--k1", type=float, default=-0.7)
    p.add_argument("--k2", type=float, default=-1.5)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--points", type=int, default=12, help="window sample count")
    p.add_argument("--out", required=True, help="report JSON")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    probe = BoundProbe(
        k1=args.k1, k2=args.k2, z1=args.z1, z2=args.z2, l=args.l, r=args.r, beta=args.beta
    )
    report = lemma42_report(probe, points_per_window=args.points)
    _write_json(args.out, report.as_dict())
    options = {k: getattr(args, k) for k in ("r", "z1", "z2", "k1", "k2", "l", "beta", "points")}
    chash = _config_hash("boundlab", {}, options)
    pred_small, pred_large = predicted_exponents(probe)
    extras = {"predicted_small": pred_small, "predicted_large": pred_large, "beta": args.beta}
    _write_manifest(["boundlab"] + argv, chash, [], [args.out], started, extras)
    return 0 if report.passed else 1


def _cmd_evolve(argv: list[str]) -> int:
    p = _parser("evolve", "march the flow and track the self-similar deviation")
    p.add_argument("--in", dest="infile", required=True, help="profile CSV")
    p.add_argument("--T", type=float, default=1.0, help="blow-up horizon")
    p.add_argument("--to-beta", type=float, required=True, help="stop when beta reaches this")
    p.add_argument("--report", required=True, help="evolution report JSON")
    p.add_argument("--out", help="also write the final state's profile CSV")
    p.add_argument("--beta-step", type=float, default=0.005)
    p.add_argument("--tol", type=float, default=1e-6, help="predictor-corrector tolerance")
    p.add_argument("--max-halvings", type=int, default=8)
    p.add_argument("--cap", type=float, default=1e3, help="relative norm cap")
    p.add_argument("--free", action="store_true", help="disable the nonlinearity")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    if not 0.0 < args.to_beta <= 1.0:
        raise ValueError("--to-beta must lie in (0, 1]")
    psi = load_profile(args.infile)
    v0 = initial_data(psi, args.T, mp)
    control = StepControl(
        T=args.T,
        beta_step=args.beta_step,
        discrepancy_tol=args.tol,
        max_halvings=args.max_halvings,
        norm_cap=args.cap,
        nonlinear=not args.free,
    )
    t_end = args.T * (1.0 - args.to_beta**2)
    error = None
    code = 0
    try:
        states = evolve(v0, mp, t_end, control=control)
    except (StepRejectedError, BlowupError) as exc:
        states = exc.states
        error = str(exc)
        code = 2
    rows = [
        {
            "t": st.t,
            "beta": st.beta,
            "tau": st.tau,
            "deviation": selfsimilar_deviation(st, psi, mp),
        }
        for st in states
    ]
    payload = {
        "T": args.T,
        "to_beta": args.to_beta,
        "free": bool(args.free),
        "error": error,
        "states": rows,
    }
    _write_json(args.report, payload)
    outputs = [args.report]
    if args.out and states:
        save_profile(args.out, states[-1].v)
        outputs.extend(_csv_outputs(args.out))
    options = {
        "T": args.T,
        "to_beta": args.to_beta,
        "beta_step": args.beta_step,
        "tol": args.tol,
        "max_halvings": args.max_halvings,
        "cap": args.cap,
        "free": bool(args.free),
    }
    chash = _config_hash("evolve", _params_payload(mp, sp, grid), options)
    _write_manifest(["evolve"] + argv, chash, _profile_inputs(args.infile), outputs, started)
    if error is not None:
        print(f"numerical error: {error}", file=sys.stderr)
    return code


def _cmd_energy(argv: list[str]) -> int:
    p = _parser("energy", "energy samples along the blow-up and fitted slope")
    p.add_argument("--in", dest="infile", required=True, help="profile CSV")
    p.add_argument("--times", required=True, help="comma-separated sample times")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--out", required=True, help="energy CSV")
    args = p.parse_args(argv)
    _apply_threads(args.threads)
    started = time.perf_counter()
    mp, sp, grid = _params_from_config(_load_config(args.config))
    times = [float(tok) for tok in args.times.split(",") if tok]
    psi = load_profile(args.infile)
    curve = energy_curve(psi, mp, times, T=args.T)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "E", "kinetic", "potential"])
        for row in curve.samples:
            writer.writerow([format(v, ".17g") for v in row])
    options = {"times": times, "T": args.T}
    chash = _config_hash("energy", _params_payload(mp, sp, grid), options)
    extras = {"r": mp.r, "T": args.T, "fitted_slope": curve.fitted_slope}
    _write_manifest(
        ["energy"] + argv, chash, _profile_inputs(args.infile), [args.out], started, extras
    )
    return 0


def _cmd_export(argv: list[str]) -> int:
    p = _parser("export", "round-trip a profile through the CSV format")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)
    started = time.perf_counter()
    psi = load_profile(args.infile)
    save_profile(args.out, psi)
    chash = _config_hash("export", {}, {})
    _write_manifest(
        ["export"] + argv, chash, _profile_inputs(args.infile), _csv_outputs(args.out), started
    )
    return 0


_HANDLERS = {
    "validate": _cmd_validate,
    "make-ansatz": _cmd_make_ansatz,
    "apply": _cmd_apply,
    "solve": _cmd_solve,
    "continue": _cmd_continue,
    "verify": _cmd_verify,
    "boundlab": _cmd_boundlab,
    "evolve": _cmd_evolve,
    "energy": _cmd_energy,
    "export": _cmd_export,
}


def _usage() -> str:
    lines = ["usage: renormlab <subcommand> [options]", "", "subcommands:"]
    briefs = {
        "validate": "parameter admissibility report",
        "make-ansatz": "write the quadratic-phase test profile",
        "apply": "apply the renormalization map once",
        "solve": "fixed-point iteration at one beta",
        "continue": "solves along an ascending beta schedule",
        "verify": "invariant-set membership check",
        "boundlab": "convolution-gain power-law check",
        "evolve": "march the flow, track the deviation",
        "energy": "energy curve and blow-up slope",
        "export": "round-trip a profile file",
    }
    for name in _HANDLERS:
        lines.append(f"  {name:<12} {briefs[name]}")
    lines.append("")
    lines.append("run `renormlab <subcommand> --help` for flags")
    return "\n".join(lines) + "\n"


def run(argv) -> int:
    """Dispatch one command line; returns the exit code."""
    argv = list(argv)
    if not argv:
        sys.stderr.write(_usage())
        return 64
    if argv[0] in ("-h", "--help"):
        sys.stdout.write(_usage())
        return 0
    handler = _HANDLERS.get(argv[0])
    if handler is None:
        sys.stderr.write(f"unknown subcommand: {argv[0]}\n")
        sys.stderr.write(_usage())
        return 64
    try:
        return handler(argv[1:])
    except SystemExit as exc:  # argparse --help or flag errors
        return 0 if exc.code in (None, 0) else 1
    except (BlowupError, StepRejectedError, OscBudgetError, CrossCheckFailure) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except (RenormLabError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

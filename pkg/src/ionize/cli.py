"""Command line entry point: `ionize <command> --config cfg.json --out dir`.

Exit codes: 2 config parse error, 3 validation error, 4 numerical
non-convergence, 5 acceptance failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from ionize import __version__, dynamics, spectral, validation
from ionize.alpha import genericity_residual
from ionize.asymptotics import fit_power_law
from ionize.model import ConvergenceError, ValidationError, load_config
from ionize.volterra import read_charges_csv, run

log = logging.getLogger("ionize")

EXIT_PARSE, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_ACCEPTANCE = 2, 3, 4, 5

COMMANDS = ("solve-charges", "survival", "ionization", "spectral-solve", "find-pole",
            "check-genericity", "branch-fit", "fit-decay", "validate-all")


def cplx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ValidationError(f"complex values are [re, im], got {v!r}")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class Outputs:
    def __init__(self, out: Path):
        self.dir = out
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def json(self, name: str, data) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name.replace("-", "_"), {})
    if not isinstance(sec, dict):
        raise ValidationError(f"config section {name!r} must be an object")
    return sec


def _trajectory(params, cfg):
    sec = section(cfg, "solve-charges")
    t_max = float(sec.get("t_max", cfg["t_max"]))
    n_steps = int(sec.get("n_steps", cfg["n_steps"]))
    if t_max <= 0 or n_steps < 2:
        raise ValidationError("t_max must be positive and n_steps >= 2")
    return run(params, t_max, n_steps)


def cmd_solve_charges(params, cfg, args, out: Outputs) -> dict:
    traj = _trajectory(params, cfg)
    traj.to_csv(out.path("charges.csv"))
    return {"t_max": float(traj.t[-1]), "n_steps": len(traj.t) - 1,
            "q1_final": cplx(traj.q1[-1]), "q2_final": cplx(traj.q2[-1])}


def cmd_survival(params, cfg, args, out: Outputs) -> dict:
    traj = _trajectory(params, cfg)
    series = dynamics.survival_amplitude(traj)
    series.to_csv(out.path("survival.csv"))
    a = np.abs(series.theta)
    return {"abs_theta_final": float(a[-1]), "abs_theta_max": float(a.max())}


def cmd_ionization(params, cfg, args, out: Outputs) -> dict:
    sec = section(cfg, "ionization")
    R = float(sec.get("R", 2.0))
    dt = float(sec.get("dt", 1.0))
    if R <= 0 or dt <= 0:
        raise ValidationError("R and dt must be positive")
    traj = _trajectory(params, cfg)
    times = np.arange(0.0, traj.t[-1] + 1e-9, dt)
    series = dynamics.ionization_average(traj, R, times, threads=args.threads)
    series.to_csv(out.path("ionization.csv"))
    res = {"R": R, "final_running_average": float(series.running_average[-1]),
           "final_slope": series.final_slope(), "flags": series.flags}
    if sec.get("monte_carlo_check"):
        t_mc = float(sec.get("monte_carlo_t", 5.0))
        quad = dynamics.inside_probability(traj, t_mc, R)
        mc, err = dynamics.inside_probability_mc(traj, t_mc, R, int(sec.get("samples", 1_000_000)), seed=args.seed)
        res["monte_carlo"] = {"t": t_mc, "quadrature": quad, "estimate": mc, "stderr": err}
    return res


def cmd_spectral_solve(params, cfg, args, out: Outputs) -> dict:
    sec = section(cfg, "spectral")
    p = parse_complex(sec.get("p", [1.5, 0.4]))
    N = int(sec.get("N", cfg["N"]))
    sol = spectral.build_and_solve(p, N, params)
    out.json("spectral.json", sol.to_json())
    q1, q2 = sol.component(0)
    return {"p": cplx(p), "N": N, "q1_0": cplx(q1), "q2_0": cplx(q2), "condition": sol.condition}


def cmd_find_pole(params, cfg, args, out: Outputs) -> dict:
    pole = spectral.find_pole(params)
    data = pole.to_json()
    out.json("pole.json", data)
    return data


def cmd_check_genericity(params, cfg, args, out: Outputs) -> dict:
    sec = section(cfg, "genericity")
    M = sec.get("M")
    rep = genericity_residual(params.alpha, M=int(M) if M is not None else None)
    data = rep.to_json()
    out.json("genericity.json", data)
    return {"residual": rep.residual, "verdict": rep.verdict}


def cmd_branch_fit(params, cfg, args, out: Outputs) -> dict:
    sec = section(cfg, "branch_fit")
    eps = float(sec.get("eps", 1e-3))
    terms = int(sec.get("terms", 2))
    fits = spectral.branch_fit_at_origin(params, N=int(sec.get("N", cfg["N"])), eps=eps, terms=terms)
    data = {k: v.to_json() for k, v in fits.items()}
    out.json("branch_fit.json", data)
    return {k: {"d": v["d"], "accepted": v["accepted"]} for k, v in data.items()}


def cmd_fit_decay(params, cfg, args, out: Outputs) -> dict:
    sec = section(cfg, "fit_decay")
    src = sec.get("input")
    component = sec.get("component", "q2")
    if src is not None:
        base = Path(args.config).parent if args.config else Path(".")
        t, q1, q2 = read_charges_csv(base / src)
        series = {"q1": q1, "q2": q2}
    else:
        traj = _trajectory(params, cfg)
        t = traj.t
        series = {"q1": traj.q1, "q2": traj.q2}
        if component == "theta":
            series["theta"] = dynamics.survival_amplitude(traj).theta
    if component not in series:
        raise ValidationError(f"component must be one of {sorted(series)}")
    method = sec.get("method", "raw-regression" if component == "theta" else "envelope")
    window = sec.get("window")
    try:
        fit = fit_power_law(t, np.abs(series[component]), window, method)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    data = fit.to_json(target=(-1.8, -1.2))
    data["component"] = component
    out.json("decay_fit.json", data)
    return data


def cmd_validate_all(params, cfg, args, out: Outputs) -> dict:
    ctx = validation.Context(params, float(cfg["t_max"]), int(cfg["n_steps"]), int(cfg["N"]),
                             seed=args.seed, threads=args.threads)
    numbers = section(cfg, "validate").get("criteria")
    results = validation.run_all(ctx, numbers, report=lambda c: print(c.line(), flush=True))
    out.json("acceptance.json", [c.to_json() for c in results])
    return {"passed": [c.number for c in results if c.passed],
            "failed": [c.number for c in results if not c.passed]}


HANDLERS = {
    "solve-charges": cmd_solve_charges,
    "survival": cmd_survival,
    "ionization": cmd_ionization,
    "spectral-solve": cmd_spectral_solve,
    "find-pole": cmd_find_pole,
    "check-genericity": cmd_check_genericity,
    "branch-fit": cmd_branch_fit,
    "fit-decay": cmd_fit_decay,
    "validate-all": cmd_validate_all,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ionize", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config; defaults apply to missing keys")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo and random samples")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("IONIZE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_VALIDATION
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        params, cfg = load_config(args.config if args.config else {})
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out = Outputs(Path(args.out))
    out.dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    status = 0
    try:
        results = HANDLERS[args.command](params, cfg, args, out)
    except (ValidationError, spectral.SingularCoefficient, ArithmeticError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.command == "validate-all" and results["failed"]:
        status = EXIT_ACCEPTANCE
    manifest = {
        "command": args.command,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "started": started,
        "finished": time.time(),
        "outputs": list(out.files),
        "results": validation.jsonable(results),
        "seed": args.seed,
    }
    with open(out.dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    json.dump(validation.jsonable(results), sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return status


if __name__ == "__main__":
    sys.exit(main())

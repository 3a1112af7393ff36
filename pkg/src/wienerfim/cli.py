"""Command-line entry point.

Usage::

    wienerfim fim --config model.json --out fim.json
    wienerfim det --config model.json
    wienerfim verify --config model.json --samples 1000000 --seed 7 --tolerance 0.02
    wienerfim scan --config model.json --scales 0.1,1,10 --budget 10 --out scan.csv
    wienerfim simulate --config model.json --samples 1000 --out samples.csv

Exit codes: 0 ok, 2 config, 3 numerical, 4 I/O, 5 verification tolerance
exceeded, 6 empty feasible set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .design import scan_sigma
from .errors import NUMERICAL_ERRORS, BudgetError, WienerFimError
from .fim import assemble_fim, prepare, schur_consistency
from .oracle import SimulationPlan, default_burn_in, empirical_fim, finite_diff_score, simulate_states

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO, EXIT_TOLERANCE, EXIT_INFEASIBLE = 0, 2, 3, 4, 5, 6

DEFAULT_SAMPLES = {"verify": 1_000_000, "simulate": 1000}
DEFAULT_TOLERANCE = 0.02
DEFAULT_SCALES = tuple(float(s) for s in np.round(np.geomspace(0.1, 10.0, 21), 12))
FD_POINTS = 10
FD_WINDOW = 400


class VerificationFailed(Exception):
    pass


def _scales(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wienerfim", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path)
    common.add_argument("--out", type=Path)
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--samples", type=int)
    sim.add_argument("--burn-in", type=int)
    sim.add_argument("--seed", type=_u64)
    sim.add_argument("--streams", type=int)

    sub.add_parser("fim", parents=[common], help="closed-form information matrix")
    sub.add_parser("det", parents=[common], help="determinant factorization and Schur checks")
    p = sub.add_parser("verify", parents=[common, sim], help="Monte Carlo check of the closed form")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--dump-samples", type=Path)
    p = sub.add_parser("scan", parents=[common], help="D-optimal scan over input power")
    p.add_argument("--scales", type=_scales)
    p.add_argument("--budget", type=float)
    sub.add_parser("simulate", parents=[common, sim], help="dump simulated states as CSV")
    return parser


def _opt(args, cfg: RunConfig, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.options.get(name, default)


def _plan(args, cfg: RunConfig) -> SimulationPlan:
    try:
        return SimulationPlan(
            samples=_opt(args, cfg, "samples", DEFAULT_SAMPLES[args.command]),
            burn_in=_opt(args, cfg, "burn_in"),
            seed=_opt(args, cfg, "seed", 0),
            streams=_opt(args, cfg, "streams", 1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _envelope(command: str, cfg: RunConfig, body: dict) -> dict:
    return {"tool": "wienerfim", "version": __version__, "command": command,
            "config_sha256": cfg.digest, **body}


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _samples_csv(cfg: RunConfig, X: np.ndarray, u) -> str:
    model = cfg.model
    pipe = prepare(model, cfg.input)
    w = X @ pipe.real.c
    y = model.polynomial(w)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "u"] + [f"x{i}" for i in range(X.shape[1])] + ["w", "y"])
    for t in range(X.shape[0]):
        ut = "" if u is None else repr(float(u[t]))
        writer.writerow([t, ut] + [repr(float(v)) for v in X[t]] + [repr(float(w[t])), repr(float(y[t]))])
    return buf.getvalue()


def cmd_fim(args, cfg: RunConfig) -> int:
    p = prepare(cfg.model, cfg.input)
    res = assemble_fim(p.model, p.real, p.stats, p.ctx)
    _write(args.out, _dumps(_envelope("fim", cfg, res.to_dict())))
    return EXIT_OK


def cmd_det(args, cfg: RunConfig) -> int:
    p = prepare(cfg.model, cfg.input)
    res = assemble_fim(p.model, p.real, p.stats, p.ctx)
    body = {k: v for k, v in res.to_dict().items() if k != "J"}
    body["det_rel_diff"] = res.det_rel_diff()
    body["schur"] = schur_consistency(p.model, p.real, p.stats, p.ctx).to_dict()
    _write(args.out, _dumps(_envelope("det", cfg, body)))
    return EXIT_OK


def _score_check(cfg: RunConfig, plan: SimulationPlan) -> float:
    """Worst finite-difference score mismatch over a few points of one input path."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(plan.seed).spawn(plan.streams + 1)[-1]))
    sd = np.sqrt(cfg.input.input_variance() or 1.0)
    u = cfg.input.mean + sd * rng.standard_normal(FD_WINDOW)
    times = np.linspace(FD_WINDOW // 2, FD_WINDOW - 1, FD_POINTS).astype(int)
    return max(finite_diff_score(cfg.model, u, int(t)).max_rel_err for t in times)


def cmd_verify(args, cfg: RunConfig) -> int:
    plan = _plan(args, cfg)
    tol = _opt(args, cfg, "tolerance", DEFAULT_TOLERANCE)
    p = prepare(cfg.model, cfg.input)
    res = assemble_fim(p.model, p.real, p.stats, p.ctx)
    rep = empirical_fim(cfg.model, cfg.input, plan, J_closed=res.J, real=p.real)
    body = rep.to_dict()
    body["grad_max_rel_err"] = _score_check(cfg, plan)
    body.update(J_closed=res.J.tolist(), gamma=res.gamma, sigma=res.sigma, tolerance=tol,
                passed=bool(rep.rel_err_J <= tol))
    # Timing-independent fields only, so reruns are byte-identical.
    _write(args.out, _dumps(_envelope("verify", cfg, body)))
    if args.dump_samples is not None:
        X, u = simulate_states(p.real, cfg.input, plan, model=cfg.model)
        _write(args.dump_samples, _samples_csv(cfg, X, u))
    if not body["passed"]:
        raise VerificationFailed(f"rel_err_J={rep.rel_err_J:.4g} exceeds tolerance {tol}")
    return EXIT_OK


def cmd_scan(args, cfg: RunConfig) -> int:
    scales = _opt(args, cfg, "scales", list(DEFAULT_SCALES))
    budget = _opt(args, cfg, "budget", float("inf"))
    try:
        result = scan_sigma(cfg.model, cfg.input, scales, budget)
    except ValueError as exc:
        if isinstance(exc, WienerFimError):
            raise
        raise ConfigError(str(exc)) from None
    summary = _dumps(_envelope("scan", cfg, result.summary()))
    if args.out is None:
        _write(None, result.to_csv())
    else:
        _write(args.out, result.to_csv())
        _write(args.out.with_suffix(".json"), summary)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    plan = _plan(args, cfg)
    p = prepare(cfg.model, cfg.input)
    X, u = simulate_states(p.real, cfg.input, plan, model=cfg.model)
    _write(args.out, _samples_csv(cfg, X, u))
    return EXIT_OK


COMMANDS = {"fim": cmd_fim, "det": cmd_det, "verify": cmd_verify, "scan": cmd_scan,
            "simulate": cmd_simulate}


def _fail(code: int, tag: str, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": tag, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except OSError as exc:
        return _fail(EXIT_IO, "io", exc)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc.code, exc)
    except VerificationFailed as exc:
        return _fail(EXIT_TOLERANCE, "tolerance", exc)
    except BudgetError as exc:
        return _fail(EXIT_INFEASIBLE, exc.code, exc)
    except NUMERICAL_ERRORS as exc:
        return _fail(EXIT_NUMERICAL, exc.code, exc)
    except WienerFimError as exc:
        return _fail(EXIT_CONFIG, exc.code, exc)


if __name__ == "__main__":
    sys.exit(main())

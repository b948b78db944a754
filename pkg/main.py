"""
main.py
Command-line front end: spectrum, check, solve, verify, decompose and demo
"""

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from apfun import ApfunError, TrigPolynomial, circle_image, bohr_spectrum
from config import Config, ConfigError, NumericsConfig, canonical_float, config
from fleet import run_fleet
from health_monitor import health_monitor
from logger import log_artifacts, log_error, log_run_complete, log_run_start, log_runtime
from monodromy import NearSingularError, assemble, unit_circle_report
from phasespace import DomainError, FDEModel, ModelError, load_model
from propagator import PropagationConfigError
from solver import (
    BASE_TIME,
    APSolution,
    PreconditionError,
    ResonanceError,
    SearchError,
    analyze,
    ap_certificate,
    decompose_solution,
    gamma_oracle_gap,
    residual,
    solve_with_operator,
    spectrum_containment_check,
)

# ============================================
# EXIT CODES
# ============================================

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERICS = 3
EXIT_NEAR_RESONANT = 10
EXIT_RESONANT = 11

RESIDUAL_TOL = 1e-7
DEFAULT_PROBES = (0.0, np.pi / 2.0, float(np.sqrt(3.0)))


# ============================================
# RUN CONFIGURATION
# ============================================

@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs"""

    model_path: Optional[Path]
    out_dir: Path
    numerics: NumericsConfig
    seed: int
    horizon: float

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        numerics = NumericsConfig.from_env().with_overrides(
            m=args.m,
            substeps=args.substeps,
            n_gamma=args.n_gamma,
            unit_band_tol=args.tol_band,
            resonance_tol=args.tol_res,
            solve_tol=args.tol_solve,
            guard=args.guard,
            force=True if args.force else None,
        )
        if args.horizon is not None and args.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {args.horizon}")
        return cls(
            model_path=Path(args.model) if args.model else None,
            out_dir=Path(args.out),
            numerics=numerics,
            seed=args.seed,
            horizon=args.horizon if args.horizon is not None else 2.0,
        )

    def load_model(self) -> FDEModel:
        if self.model_path is None:
            raise ConfigError("--model is required for this command")
        return load_model(self.model_path)

    def metadata(self) -> dict:
        return {
            "seed": self.seed,
            "resolution": {"m": self.numerics.m, "substeps": self.numerics.substeps},
        }


# ============================================
# OUTPUT
# ============================================

def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, (np.complexfloating, complex)):
        return [_clean(float(value.real)), _clean(float(value.imag))]
    return value


def _format_float(value: float) -> str:
    return format(canonical_float(value), ".17g")


class ArtifactEncoder(json.JSONEncoder):
    """JSON encoder that writes every float rounded by canonical_float, with 17 significant digits"""

    def iterencode(self, o, _one_shot=False):
        indent = " " * self.indent if isinstance(self.indent, int) else self.indent
        encode = (json.encoder.py_encode_basestring_ascii if self.ensure_ascii
                  else json.encoder.py_encode_basestring)
        return json.encoder._make_iterencode(
            {} if self.check_circular else None, self.default, encode, indent, _format_float,
            self.key_separator, self.item_separator, self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), cls=ArtifactEncoder, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_artifacts(out_dir: Path, files: Dict[str, str]):
    """
    Write all files or none: each goes to a temporary sibling first, and the
    renames happen only after every temporary file is complete
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            handle, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
                stream.write(text)
            staged.append((tmp, out_dir / name))
    except OSError:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, target in staged:
        os.replace(tmp, target)
    log_artifacts(out_dir, files)


def _render_csv(solution: APSolution, times: np.ndarray, directory: Path) -> str:
    handle, tmp = tempfile.mkstemp(prefix=".render.", dir=directory)
    os.close(handle)
    try:
        solution.to_csv(tmp, times)
        return Path(tmp).read_text(encoding="utf-8")
    finally:
        Path(tmp).unlink(missing_ok=True)


# ============================================
# COMMANDS
# ============================================

def _cmd_spectrum(run: RunConfig) -> int:
    model = run.load_model()
    operator = assemble(model, BASE_TIME, run.numerics)
    circle = unit_circle_report(operator)
    payload = {
        "model": model.name,
        "model_sha256": model.fingerprint(),
        "eigenvalues": [[z.real, z.imag] for z in operator.eigenvalues],
        "unit_circle": circle.angles.to_list(),
        "flags": {"spurious": [[z.real, z.imag] for z in circle.spurious],
                  "confirmation_m": circle.confirmation_m},
        "spectral_radius": operator.spectral_radius,
        "unit_band_tol": operator.unit_band_tol,
        "run": run.metadata(),
    }
    write_artifacts(run.out_dir, {"spectrum.json": dumps(payload)})
    print(f"{model.name}: {operator.size} eigenvalues, unit circle {circle.angles.to_list()}")
    return EXIT_OK


def _cmd_check(run: RunConfig) -> int:
    model = run.load_model()
    _, report = analyze(model, run.numerics)
    payload = dict(report.to_dict(), model=model.name, model_sha256=model.fingerprint(),
                   run=run.metadata())
    write_artifacts(run.out_dir, {"check.json": dumps(payload)})
    print(f"{model.name}: {report.classification}")
    return report.exit_code


def _cmd_solve(run: RunConfig) -> int:
    model = run.load_model()
    operator, report = analyze(model, run.numerics)
    solution = solve_with_operator(model, operator, report, run.numerics)
    document = dict(solution.to_dict(), model=model.name, check=report.to_dict(), run=run.metadata())
    times = np.arange(0.0, run.horizon + 0.5 * run.numerics.output_step, run.numerics.output_step)
    run.out_dir.mkdir(parents=True, exist_ok=True)
    write_artifacts(run.out_dir, {
        "solution.json": dumps(document),
        "solution.csv": _render_csv(solution, times, run.out_dir),
    })
    print(f"{model.name}: {len(solution.components)} component(s), "
          f"fixed-point gap {solution.fixed_point_gap():.3g}")
    return EXIT_OK


def _load_solution(run: RunConfig, path: Optional[str], model: FDEModel) -> APSolution:
    source = Path(path) if path else run.out_dir / "solution.json"
    try:
        document = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelError(f"{source}: invalid JSON: {e}") from e
    return APSolution.from_dict(document, model)


def _cmd_verify(run: RunConfig, solution_path: Optional[str], eps: float) -> int:
    model = run.load_model()
    solution = _load_solution(run, solution_path, model)
    cfg = run.numerics

    gap = solution.fixed_point_gap()
    gap_tol = cfg.solve_tol + Config.ARTIFACT_RTOL * solution.peak()
    worst = residual(model, solution, run.horizon, cfg)
    oracle = gamma_oracle_gap(model, solution, cfg)
    probes = [mu for mu in DEFAULT_PROBES
              if all(abs(mu - lam) > cfg.freq_merge_tol for lam in solution.frequencies)]
    leakage = spectrum_containment_check(solution, probes, cfg.verify_T, cfg)
    try:
        certificate = ap_certificate(solution, eps, cfg).to_dict()
    except SearchError as e:
        certificate = {"passed": False, "error": str(e), "horizon": e.horizon}

    checks = {
        "residual": {"value": worst, "tolerance": RESIDUAL_TOL, "passed": worst <= RESIDUAL_TOL},
        "fixed_point_gap": {"value": gap, "tolerance": gap_tol, "passed": gap <= gap_tol},
        "gamma_oracle": {"value": oracle, "n": cfg.n_gamma, "tolerance": Config.GAMMA_ORACLE_TOL,
                         "passed": oracle <= Config.GAMMA_ORACLE_TOL},
        "containment": {"value": leakage, "tolerance": cfg.leakage_tol, "probes": probes,
                        "T": cfg.verify_T, "passed": leakage <= cfg.leakage_tol},
        "ap_certificate": certificate,
    }
    passed = all(check["passed"] for check in checks.values())
    payload = dict(checks, verdict="pass" if passed else "fail", model=model.name,
                   model_sha256=model.fingerprint(), run=run.metadata())
    write_artifacts(run.out_dir, {"verify.json": dumps(payload)})
    failed = [name for name, check in checks.items() if not check["passed"]]
    print(f"{model.name}: verdict {'pass' if passed else 'fail'}"
          + (f" ({', '.join(failed)})" if failed else ""))
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_decompose(run: RunConfig, solution_path: Optional[str], inject: Sequence[str]) -> int:
    model = run.load_model()
    solution = _load_solution(run, solution_path, model)
    u = solution.to_trig_polynomial()
    for entry in inject:
        try:
            frequency, amplitude = (float(x) for x in entry.split(":"))
        except ValueError as e:
            raise ConfigError(f"--inject expects FREQUENCY:AMPLITUDE, got '{entry}'") from e
        u = u + TrigPolynomial.single(frequency, [amplitude] * model.dimension, model.dimension)
    _, report = analyze(model, run.numerics)
    image = circle_image(bohr_spectrum(model.forcing), run.numerics.angle_merge_tol)
    projected, remainder = decompose_solution(u, image, report.sigma_gamma, run.numerics.guard)
    payload = {
        "model": model.name,
        "model_sha256": model.fingerprint(),
        "forcing_image": image.to_list(),
        "sigma_gamma": report.sigma_gamma.to_list(),
        "guard": run.numerics.guard,
        "projected": projected.to_dict(),
        "remainder": remainder.to_dict(),
        "run": run.metadata(),
    }
    write_artifacts(run.out_dir, {"decompose.json": dumps(payload)})
    print(f"{model.name}: {len(projected)} term(s) in P u, {len(remainder)} in (I - P) u")
    return EXIT_OK


def _cmd_demo(run: RunConfig, cases: Optional[str]) -> int:
    only = None if cases is None else [c.strip() for c in cases.split(",") if c.strip()]
    rows = run_fleet(run.numerics, only)
    print(f"{'case':<16} {'quantity':<28} {'error':>12} {'tolerance':>10}  status")
    for row in rows:
        print(f"{row.case:<16} {row.quantity:<28} {row.error:>12.3e} {row.tolerance:>10.1e}  "
              f"{'PASS' if row.passed else 'FAIL'}")
    failures = [row for row in rows if not row.passed]
    payload = {"rows": [row.to_dict() for row in rows], "failures": [row.case for row in failures],
               "run": run.metadata()}
    write_artifacts(run.out_dir, {"demo.json": dumps(payload)})
    log_runtime(health_monitor.get_complete_health())
    if failures:
        print("failed: " + ", ".join(row.case for row in failures))
        return EXIT_FAILED
    return EXIT_OK


# ============================================
# PARSER
# ============================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model JSON file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--m", type=int, help="collocation order (2..128)")
    common.add_argument("--substeps", type=int, help="integrator steps per unit time (16..4096)")
    common.add_argument("--n-gamma", dest="n_gamma", type=int, help="Gamma^n oracle order")
    common.add_argument("--tol-band", dest="tol_band", type=float, help="unit-circle band tolerance")
    common.add_argument("--tol-res", dest="tol_res", type=float, help="resonance tolerance")
    common.add_argument("--tol-solve", dest="tol_solve", type=float, help="fixed-point tolerance")
    common.add_argument("--guard", type=float, help="circle-set splitting guard")
    common.add_argument("--force", action="store_true", help="solve near-resonant models")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with the outputs")
    common.add_argument("--horizon", type=float, help="residual horizon and CSV span (default 2)")

    parser = argparse.ArgumentParser(
        prog=config.APP_NAME,
        description="Almost periodic solutions of periodic linear functional differential equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="monodromy eigenvalues and unit-circle part")
    sub.add_parser("check", parents=[common], help="resonance classification (exit 0/10/11)")
    sub.add_parser("solve", parents=[common], help="construct the almost periodic solution")
    verify = sub.add_parser("verify", parents=[common], help="residual, containment and certificate")
    verify.add_argument("--solution", help="solution JSON (default: OUT/solution.json)")
    verify.add_argument("--eps", type=float, default=0.05, help="epsilon for the certificate")
    decompose = sub.add_parser("decompose", parents=[common], help="split a solution by circle sets")
    decompose.add_argument("--solution", help="solution JSON (default: OUT/solution.json)")
    decompose.add_argument("--inject", action="append", default=[],
                           help="add a mode FREQUENCY:AMPLITUDE before splitting (repeatable)")
    demo = sub.add_parser("demo", parents=[common], help="run the acceptance fleet")
    demo.add_argument("--cases", help="comma-separated case names (empty: none)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    Config.print_config()
    command = args.command
    log_run_start(command, args.model)
    started = time.time()
    try:
        run = RunConfig.from_args(args)
        if command == "spectrum":
            code = _cmd_spectrum(run)
        elif command == "check":
            code = _cmd_check(run)
        elif command == "solve":
            code = _cmd_solve(run)
        elif command == "verify":
            code = _cmd_verify(run, args.solution, args.eps)
        elif command == "decompose":
            code = _cmd_decompose(run, args.solution, args.inject)
        else:
            code = _cmd_demo(run, args.cases)
    except (ConfigError, ModelError, DomainError, OSError) as e:
        health_monitor.increment_errors()
        log_error(e, command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (PropagationConfigError, NearSingularError) as e:
        health_monitor.increment_errors()
        log_error(e, command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICS
    except ResonanceError as e:
        log_error(e, command)
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_NEAR_RESONANT if e.classification == "near_resonant" else EXIT_RESONANT
    except (ApfunError, PreconditionError, SearchError) as e:
        health_monitor.increment_errors()
        log_error(e, command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    log_run_complete(command, args.model, time.time() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Commands::

    isobeam family lie --a "exp(z)" --k 1/3 --C 3 --interval 0 1
    isobeam family chazy --k 0 1 1 0 --interval 0.6 1.6
    isobeam verify --suite brackets --suite symmetry
    isobeam spectrum --unit --bc clamped --modes 3
    isobeam isospec --family chazy --k 0 1 1 0 --interval 0.6 1.6 --bc hinged

Exit codes: 0 success, 1 input or validation error (including poles),
2 numerical failure or a residual above tolerance.  JSON output always has
the top-level keys ``command, config, results, residuals, status``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    ContractViolation,
    DomainError,
    EvaluationError,
    IsobeamError,
    NumericalFailure,
    ParseError,
    PoleError,
    QuadratureError,
    SingularPointError,
    SpecViolation,
)
from .exprlang import parse, unparse
from .factorization import BeamCoefficients, FactorPair, hat_coeffs, principal_residual
from .families import (
    ChazyFamilySpec,
    LieFamilySpec,
    chazy_factor_pair,
    chazy_poles,
    lie_factor_pair,
    lie_poles,
    theorem1_coeffs,
)
from .jets import Jet
from .spectral import BoundaryCondition, isospec_report, solve_spectrum
from .verification import SUITES, run_suite

log = logging.getLogger("isobeam")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
DEFAULT_TOLERANCES = {"residual": 1e-9, "spectral": 1e-3}

_INPUT_ERRORS = (ParseError, ContractViolation, SpecViolation, PoleError, DomainError, EvaluationError, SingularPointError)
_NUMERIC_ERRORS = (NumericalFailure, QuadratureError)


class InputError(IsobeamError):
    """Invalid command-line or configuration input."""


@dataclass
class RunConfig:
    command: str
    interval: tuple[float, float] = (0.0, 1.0)
    samples: int = 101
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_path: str | None = None
    output_format: str = "json"
    family: str | None = None
    a: str | None = None
    k: list[str] | None = None
    C: float = 1.0
    C1: float = 0.0
    C2: float = 0.0
    bc: str = "hinged"
    grid_n: int = 1000
    n_modes: int = 5
    suites: list[str] | None = None
    case: str = "I"
    points: int = 100
    seed: int = 0
    unit: bool = False
    A: str = "0"
    B: str = "0"
    check_convergence: bool = True
    tol_explicit: bool = False

    def validate(self) -> None:
        lo, hi = self.interval
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise InputError(f"interval must satisfy lo < hi, got [{lo}, {hi}]")
        if self.samples < 2:
            raise InputError("samples must be at least 2")
        for name, tol in self.tolerances.items():
            if not tol > 0:
                raise InputError(f"tolerance {name!r} must be positive")
        if self.n_modes < 1:
            raise InputError("modes must be positive")
        BoundaryCondition.parse(self.bc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("tol_explicit")
        d["interval"] = list(self.interval)
        return d


# parser ------------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file whose keys mirror the long options")
    p.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    p.add_argument("--output", dest="output_path", help="write here instead of stdout")
    p.add_argument("--interval", nargs=2, type=float, metavar=("LO", "HI"), default=[0.0, 1.0])
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--tol", type=float, default=None, help="residual tolerance (default 1e-9)")
    p.add_argument("--spectral-tol", type=float, default=None, help="relative spectral tolerance (default 1e-3)")
    p.add_argument("--seed", type=int, default=0)
    return p


def _family_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--a", help="gauge function a(z) of the lie family")
    p.add_argument("--k", nargs="+", help="lie: one of 1/4, 1/3, 1; chazy: k1 k2 k3 k4")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=0.0)
    p.add_argument("--C2", type=float, default=0.0)
    return p


def _spectral_options(grid_n: int) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--bc", default="hinged", help="hinged|clamped|free|sliding, or LEFT-RIGHT")
    p.add_argument("--modes", dest="n_modes", type=int, default=5)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=grid_n)
    p.add_argument("--no-convergence", dest="check_convergence", action="store_false")
    return p


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code, keeping 2 for numerical failures."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="isobeam", description="Iso-spectral beam operators: families, checks, spectra.")
    sub = parser.add_subparsers(dest="command", required=True)
    common, fam = _common(), _family_options()
    subs = {}
    p = sub.add_parser("family", parents=[common, fam], help="sample a solution family as a beam profile")
    p.add_argument("family", choices=("lie", "chazy"))
    subs["family"] = p

    p = sub.add_parser("verify", parents=[common, fam], help="run verification suites")
    p.add_argument("--suite", dest="suites", action="append", choices=SUITES)
    p.add_argument("--family", choices=("lie", "chazy"))
    p.add_argument("--case", choices=("I", "II"), default="I")
    p.add_argument("--points", type=int, default=100)
    subs["verify"] = p

    p = sub.add_parser("spectrum", parents=[common, _spectral_options(1000)], help="lowest eigenvalues of a beam operator")
    p.add_argument("--unit", action="store_true", help="unit beam, A = B = 0")
    p.add_argument("--A", default="0")
    p.add_argument("--B", default="0")
    subs["spectrum"] = p

    p = sub.add_parser("isospec", parents=[common, fam, _spectral_options(400)], help="spectra of R*R and RR* side by side")
    p.add_argument("--family", choices=("lie", "chazy"), required=True)
    subs["isospec"] = p
    return parser, subs


def _apply_config(path: str, subs: dict[str, argparse.ArgumentParser]) -> None:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    aliases = {"format": "output_format", "output": "output_path", "modes": "n_modes", "suite": "suites"}
    cfg = {aliases.get(k, k).replace("-", "_"): v for k, v in cfg.items()}
    for p in subs.values():
        known = {a.dest for a in p._actions}
        p.set_defaults(**{k: v for k, v in cfg.items() if k in known})
    every = set().union(*({a.dest for a in p._actions} for p in subs.values()))
    unknown = set(cfg) - every
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")


def _to_config(args: argparse.Namespace) -> RunConfig:
    tolerances = dict(DEFAULT_TOLERANCES)
    if args.tol is not None:
        tolerances["residual"] = args.tol
    if args.spectral_tol is not None:
        tolerances["spectral"] = args.spectral_tol
    cfg = RunConfig(
        command=args.command,
        interval=(float(args.interval[0]), float(args.interval[1])),
        samples=args.samples,
        tolerances=tolerances,
        output_path=args.output_path,
        output_format=args.output_format,
        seed=args.seed,
        tol_explicit=args.tol is not None,
    )
    for name in ("family", "a", "k", "C", "C1", "C2", "bc", "grid_n", "n_modes", "suites", "case", "points",
                 "unit", "A", "B", "check_convergence"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if cfg.k is not None:
        cfg.k = [str(v) for v in (cfg.k if isinstance(cfg.k, list) else [cfg.k])]
    cfg.validate()
    return cfg


# family construction ---------------------------------------------------------------


def _lie_spec(cfg: RunConfig, default_a: str = "1") -> LieFamilySpec:
    k = cfg.k or ["1"]
    if len(k) != 1:
        raise InputError("the lie family takes a single k")
    return LieFamilySpec(parse(cfg.a or default_a), C=cfg.C, k=k[0], C1=cfg.C1, C2=cfg.C2)


def _chazy_spec(cfg: RunConfig) -> ChazyFamilySpec:
    if not cfg.k or len(cfg.k) != 4:
        raise InputError("the chazy family takes four values: --k k1 k2 k3 k4")
    try:
        ks = [float(Fraction(v)) for v in cfg.k]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad chazy parameter: {exc}") from exc
    return ChazyFamilySpec(*ks)


def _family_pair(kind: str, cfg: RunConfig) -> tuple[FactorPair, BeamCoefficients | None, dict]:
    """Factor pair, (A, B) if nonzero, and a description; refuses intervals containing poles."""
    lo, hi = cfg.interval
    if kind == "lie":
        spec = _lie_spec(cfg)
        poles = lie_poles(spec, lo, hi)
        if poles:
            raise PoleError("lie family is singular on the interval", poles[0])
        fp = lie_factor_pair(spec)
        desc = {"family": "lie", "a": unparse(spec.a), "k": str(spec.k), "C": spec.C, "C1": spec.C1, "C2": spec.C2}

        def coeffs(z: float):
            return theorem1_coeffs(spec, z, 2)

        return fp, coeffs, desc
    spec = _chazy_spec(cfg)
    poles = chazy_poles(spec, lo, hi)
    if poles:
        raise PoleError("chazy family has a pole on the interval", poles[0])
    desc = {"family": "chazy", "k": list(cfg.k)}
    return chazy_factor_pair(spec), None, desc


# commands ---------------------------------------------------------------------------


@dataclass
class Outcome:
    results: dict
    residuals: dict
    passed: bool
    table: tuple[list[str], list[list]] | None = None


def cmd_family(cfg: RunConfig) -> Outcome:
    fp, coeffs, desc = _family_pair(cfg.family, cfg)
    cols = ["z", "r", "s", "A", "B", "Ahat", "Bhat"]
    rows = []
    worst = 0.0
    for z in np.linspace(*cfg.interval, cfg.samples):
        z = float(z)
        r = fp.r(z, 3)
        if coeffs is None:
            A, B = Jet.constant(0.0, z, 2), Jet.constant(0.0, z, 0)
        else:
            A, B = coeffs(z)
        worst = max(worst, abs(principal_residual(r, A, B)))
        Ahat, Bhat = hat_coeffs(fp, z, 3)
        rows.append([z, r.value, fp.s(z, 0).value, A.value, B.value, Ahat.value, Bhat.value])
    tol = cfg.tolerances["residual"]
    profile = {c: [row[i] for row in rows] for i, c in enumerate(cols)}
    return Outcome({**desc, "profile": profile}, {"principal": worst}, worst <= tol, (cols, rows))


def cmd_verify(cfg: RunConfig) -> Outcome:
    rng = np.random.default_rng(cfg.seed)
    options: dict = {"case": cfg.case, "points": cfg.points, "C1": cfg.C1, "C2": cfg.C2}
    if cfg.a is not None:
        options["a"] = cfg.a
    if cfg.tol_explicit:
        options["tol"] = cfg.tolerances["residual"]
    if cfg.family is not None:
        fam = _lie_spec(cfg) if cfg.family == "lie" else _chazy_spec(cfg)
        options.update(families=[fam], interval=cfg.interval, samples=cfg.samples)
    results, residuals, rows = {}, {}, []
    passed = True
    for suite in cfg.suites or list(SUITES):
        checks = run_suite(suite, rng, **options)
        if cfg.tol_explicit and suite in ("symmetry", "brackets", "hypergeometric"):
            for c in checks:
                c.tolerance = cfg.tolerances["residual"]
        results[suite] = {c.name: c.to_dict() for c in checks}
        for c in checks:
            residuals[f"{suite}/{c.name}"] = c.residual
            rows.append([suite, c.name, c.residual, c.tolerance, c.passed])
            passed &= c.passed
        log.info("suite %s: %s", suite, "pass" if all(c.passed for c in checks) else "FAIL")
    return Outcome(results, residuals, passed, (["suite", "check", "residual", "tolerance", "pass"], rows))


def cmd_spectrum(cfg: RunConfig) -> Outcome:
    coeffs = BeamCoefficients.zero() if cfg.unit else BeamCoefficients.from_exprs(parse(cfg.A), parse(cfg.B))
    lo, hi = cfg.interval
    bc = BoundaryCondition.parse(cfg.bc)
    spec = solve_spectrum(coeffs, bc, cfg.grid_n, hi - lo, cfg.n_modes, lo, cfg.check_convergence)
    rtol = cfg.tolerances["spectral"]
    results = spec.to_dict()
    residuals = {}
    passed = True
    if spec.refined is not None:
        change = np.abs(spec.eigenvalues - spec.refined) / np.maximum(np.abs(spec.refined), (hi - lo) ** -4)
        residuals["max_relative_change_on_refinement"] = float(change.max())
        results["converged"] = [bool(c) for c in change <= rtol]
        passed = bool((change <= rtol).all())
    rows = [[i + 1, v, None if results["converged"] is None else results["converged"][i]] for i, v in enumerate(spec.eigenvalues)]
    return Outcome(results, residuals, passed, (["mode", "eigenvalue", "converged"], rows))


def cmd_isospec(cfg: RunConfig) -> Outcome:
    fp, _, desc = _family_pair(cfg.family, cfg)
    lo, hi = cfg.interval
    bc = BoundaryCondition.parse(cfg.bc)
    rep = isospec_report(fp, bc, cfg.grid_n, hi - lo, cfg.n_modes, lo, check_convergence=cfg.check_convergence)
    residuals = {
        "intertwining_relative": rep.intertwining_relative,
        "intertwining_absolute": rep.intertwining_residual,
        "factorization_absolute": rep.factorization_residual,
    }
    passed = rep.intertwining_relative <= cfg.tolerances["residual"]
    for s in (rep.spectrum_L, rep.spectrum_hat):
        if s.converged is not None:
            passed &= bool(s.converged.all())
    rows = [[m["mode"], m["L"], m["Lhat"], m["relative_gap"]] for m in rep.to_dict()["modes"]]
    return Outcome({**desc, **rep.to_dict()}, residuals, passed, (["mode", "L", "Lhat", "relative_gap"], rows))


COMMANDS = {"family": cmd_family, "verify": cmd_verify, "spectrum": cmd_spectrum, "isospec": cmd_isospec}


# output -----------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, Fraction):
        return str(x)
    return x


def _format_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def render(doc: dict, fmt: str, table: tuple[list[str], list[list]] | None) -> str:
    if fmt == "csv" and table is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table[0])
        for row in table[1]:
            w.writerow([_format_cell(v) for v in row])
        return buf.getvalue()
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _configure_logging() -> None:
    level = os.environ.get("ISOBEAM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(known.config, subs)
    except InputError as exc:
        print(f"isobeam: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)

    cfg = None
    try:
        cfg = _to_config(args)
        out = COMMANDS[cfg.command](cfg)
    except (InputError, *_INPUT_ERRORS, ValueError) as exc:
        return _fail(args, cfg, exc, EXIT_INPUT)
    except _NUMERIC_ERRORS as exc:
        return _fail(args, cfg, exc, EXIT_NUMERIC)

    status = "pass" if out.passed else "fail"
    doc = {"command": cfg.command, "config": cfg.to_dict(), "results": out.results, "residuals": out.residuals, "status": status}
    _write(render(doc, cfg.output_format, out.table), cfg.output_path)
    if not out.passed:
        log.warning("residual or convergence check failed")
        return EXIT_NUMERIC
    return EXIT_OK


def _fail(args: argparse.Namespace, cfg: RunConfig | None, exc: Exception, code: int) -> int:
    print(f"isobeam: error: {exc}", file=sys.stderr)
    error = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, PoleError) and exc.bracket is not None:
        error["pole_bracket"] = list(exc.bracket)
    if getattr(args, "output_format", "json") == "json":
        doc = {
            "command": args.command,
            "config": cfg.to_dict() if cfg is not None else None,
            "results": None,
            "residuals": None,
            "status": "error",
            "error": error,
        }
        _write(render(doc, "json", None), getattr(args, "output_path", None))
    return code


if __name__ == "__main__":
    sys.exit(main())

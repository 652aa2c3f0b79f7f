"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose
``schema_version`` must be 1; flags override config entries.  Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 solver did not
converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .basis import RegressionBasis
from .designs import Design, DensityDesign, named_design
from .errors import ConfigError, DesignError, NumericalError
from .kernels import CovarianceKernel
from .moments import cov_matrix
from .optimality import (Criterion, c_optimality_check, default_grid, necessary_condition_check,
                         universal_optimality_check)
from .oracle import SimulationConfig, simulate_lse_cov
from .solver import SolverConfig, efficiency, solve
from .spectral import mercer_residual, named_pair
from .tables import run_figure_data, run_tables

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 2, 3, 4

log = logging.getLogger("corrdesign")


class RunConfig:
    """Validated view of a config file plus CLI overrides."""

    def __init__(self, raw: dict | None = None, base_dir: Path | None = None):
        raw = dict(raw or {})
        version = raw.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        self.raw = raw
        self.base_dir = base_dir or Path.cwd()

    @classmethod
    def load(cls, path) -> "RunConfig":
        if path is None:
            return cls()
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls(raw, p.parent)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def basis(self) -> RegressionBasis:
        cfg = self.raw.get("basis")
        if cfg is None:
            raise ConfigError("config needs a 'basis' block")
        return RegressionBasis.from_config(cfg)

    def kernel(self) -> CovarianceKernel:
        cfg = self.raw.get("kernel")
        if cfg is None:
            raise ConfigError("config needs a 'kernel' block")
        return CovarianceKernel.from_config(cfg, self.base_dir)

    def criterion(self) -> Criterion:
        return Criterion.from_config(self.raw.get("criterion", "D"))

    def design(self, key="design"):
        return parse_design(self.raw.get(key), self.base_dir, key)

    def resolved(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **self.raw}


def parse_design(spec, base_dir: Path | None = None, what="design"):
    """A design from a name, ``{"name", "n"}``, ``{"support", "weights"}`` or ``{"file"}`` (CSV)."""
    if spec is None:
        raise ConfigError(f"config needs a '{what}' entry")
    if isinstance(spec, str):
        p = Path(spec) if base_dir is None else base_dir / spec
        if spec.endswith(".csv") or p.is_file():
            return _design_file(p)
        return named_design(spec)
    if isinstance(spec, dict):
        if "name" in spec:
            return named_design(spec["name"], spec.get("n"))
        if "support" in spec:
            return Design.from_json(spec)
        if "file" in spec:
            p = Path(spec["file"])
            return _design_file(p if base_dir is None or p.is_absolute() else base_dir / p)
    raise ConfigError(f"cannot parse {what} {spec!r}")


def _design_file(path: Path) -> Design:
    try:
        return Design.from_csv(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read design file {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad design CSV {path}: {exc}") from exc


def _out_dir(args, cfg: RunConfig) -> Path | None:
    out = args.out or cfg.get("output")
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj, out: Path | None, name: str):
    text = json.dumps(obj, indent=2)
    if out is not None:
        (out / name).write_text(text + "\n", encoding="utf-8")
    print(text)


# -- subcommands -------------------------------------------------------


def cmd_solve(args, cfg: RunConfig) -> int:
    basis, kernel, crit = cfg.basis(), cfg.kernel(), cfg.criterion()
    scfg = dict(cfg.get("solver", {}))
    for key, val in (("grid_n", args.grid_n), ("beta", args.beta), ("max_iter", args.max_iter), ("conv_tol", args.tol)):
        if val is not None:
            scfg[key] = val
    if isinstance(scfg.get("beta"), str) and scfg["beta"] != "adaptive":
        try:
            scfg["beta"] = float(scfg["beta"])
        except ValueError as exc:
            raise ConfigError(f"--beta must be a number or 'adaptive', got {scfg['beta']!r}") from exc
    solver_cfg = SolverConfig.from_config(scfg)
    initial = args.initial or cfg.get("initial")
    if initial is not None:
        initial = parse_design(initial, Path.cwd() if args.initial else cfg.base_dir, "initial")
    policy = cfg.get("policy", "smooth")
    res = solve(basis, kernel, crit, solver_cfg, initial=initial, policy=policy)
    out = _out_dir(args, cfg)
    report = res.report.to_json()
    report["status"] = res.status
    report["solver_status"] = res.status
    report["necessary_condition"] = res.report.status
    report["config"] = {**cfg.resolved(), "solver": solver_cfg.to_config(), "policy": policy,
                        "iterations": res.iterations}
    if out is not None:
        (out / "design.csv").write_text(res.design.to_csv(), encoding="utf-8")
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        (out / "trace.csv").write_text(res.trace_csv(), encoding="utf-8")
    print(json.dumps({"status": res.status, "iterations": res.iterations,
                      "necessary_condition": res.report.status, "design": res.design.to_json()}, indent=2))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_check(args, cfg: RunConfig) -> int:
    basis, kernel, crit = cfg.basis(), cfg.kernel(), cfg.criterion()
    design = cfg.design()
    kind = args.check or cfg.get("check", "necessary")
    tol = args.tol if args.tol is not None else cfg.get("tol", 1e-3)
    grid = default_grid(basis, args.grid_n or cfg.get("grid_n", 201))
    kw = dict(grid=grid, tol=tol, policy=cfg.get("policy", "smooth"), quad_n=cfg.get("quad_n"))
    if kind == "necessary":
        rep = necessary_condition_check(design, basis, kernel, crit, **kw)
    elif kind == "c":
        if crit.kind == "D":
            raise ConfigError("the c check needs a criterion block with kind 'c' and a vector c")
        rep = c_optimality_check(design, basis, kernel, crit.c, **kw)
    elif kind == "universal":
        rep = universal_optimality_check(design, basis, kernel, **kw)
    else:
        raise ConfigError(f"unknown check {kind!r}; choose necessary, c or universal")
    out = _out_dir(args, cfg)
    obj = rep.to_json()
    obj["config"] = cfg.resolved()
    if out is not None:
        (out / "report.json").write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
        (out / "functions.csv").write_text(rep.to_csv(), encoding="utf-8")
    print(json.dumps({"check": kind, "status": rep.status, "passed": rep.passed,
                      "max_violation": rep.max_violation, "verdict": rep.verdict}, indent=2))
    return EXIT_OK


def cmd_efficiency(args, cfg: RunConfig) -> int:
    basis, kernel = cfg.basis(), cfg.kernel()
    design, ref = cfg.design(), cfg.design("reference")
    eff = efficiency(design, ref, basis, kernel, policy=cfg.get("policy", "smooth"), quad_n=cfg.get("quad_n"))
    D = cov_matrix(design, basis, kernel, policy=cfg.get("policy", "smooth"), quad_n=cfg.get("quad_n")).D
    _emit({"efficiency": eff, "D": D.tolist(), "config": cfg.resolved()}, _out_dir(args, cfg), "efficiency.json")
    return EXIT_OK


def cmd_spectral(args, cfg: RunConfig) -> int:
    name = args.pair or cfg.get("eigenpair")
    if name is None:
        raise ConfigError("spectral needs --pair or an 'eigenpair' entry")
    spec = named_pair(name)
    pts = cfg.get("test_points")
    if pts is None:
        lo, hi = spec.measure.lower, spec.measure.upper
        pts = np.linspace(lo, hi, 13)[1:-1]
    quad_n = args.quad_n or cfg.get("quad_n", 256)
    rep = mercer_residual(spec, pts, quad_n=quad_n, tol=cfg.get("tol", 1e-6))
    _emit({"pair": name, "eigenvalue": spec.eigenvalue, "eigenvalue_hat": rep.eigenvalue_hat,
           "max_residual": rep.max_residual, "reference_point": rep.reference_point,
           "quadrature_error": rep.richardson, "config": cfg.resolved()}, _out_dir(args, cfg), "spectral.json")
    return EXIT_OK


def cmd_mc_oracle(args, cfg: RunConfig) -> int:
    basis, kernel = cfg.basis(), cfg.kernel()
    sim = dict(cfg.get("simulation", {}))
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.n_rep is not None:
        sim["n_rep"] = args.n_rep
    if "points" not in sim:
        raise ConfigError("mc-oracle needs simulation.points")
    try:
        sc = SimulationConfig(**sim)
    except TypeError as exc:
        raise ConfigError(f"bad simulation block: {exc}") from exc
    res = simulate_lse_cov(sc, basis, kernel)
    _emit({**res.to_json(), "within_5se": res.within(5.0), "config": cfg.resolved()},
          _out_dir(args, cfg), "mc_oracle.json")
    return EXIT_OK


def cmd_tables(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    ids = [args.table] if args.table else [1, 2, 3]
    summary = {}
    for t in ids:
        res = run_tables(t, out)
        summary[f"table{t}"] = {"within_tol": res.n_within, "total": len(res.rows),
                                "max_abs_delta": res.max_abs_delta, **res.notes}
        if out is None:
            print(res.to_csv())
    _emit(summary, out, "tables_summary.json")
    return EXIT_OK


def cmd_figures(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    ids = [args.figure] if args.figure else [1, 3, 4, 5]
    summary = {}
    for f in ids:
        summary[f"figure{f}"] = run_figure_data(f, out).summary
    print(json.dumps(summary, indent=2))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve, "check": cmd_check, "efficiency": cmd_efficiency, "spectral": cmd_spectral,
    "mc-oracle": cmd_mc_oracle, "tables": cmd_tables, "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corrdesign", description="Optimal designs for OLS with correlated errors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory")
        return sp

    sp = add("solve", "run the multiplicative algorithm")
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--beta", help="number, or 'adaptive'")
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--initial", help="design CSV file or design name")
    sp = add("check", "optimality checks on a design")
    sp.add_argument("--check", choices=("necessary", "c", "universal"))
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--tol", type=float)
    add("efficiency", "D-efficiency of a design against a reference")
    sp = add("spectral", "verify a known Mercer eigenpair")
    sp.add_argument("--pair", help="e.g. chebyshev_log:2, gegenbauer_power:1:0.5, exponential:1:2")
    sp.add_argument("--quad-n", type=int)
    sp = add("mc-oracle", "Monte Carlo check of the exact LSE covariance")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-rep", type=int)
    sp = add("tables", "recompute the efficiency tables")
    sp.add_argument("--table", type=int, choices=(1, 2, 3))
    sp = add("figures", "emit figure data")
    sp.add_argument("--figure", type=int, choices=(1, 3, 4, 5))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, TypeError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

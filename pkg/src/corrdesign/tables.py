"""Recompute the efficiency tables and emit plot-ready figure data as CSV.

Efficiencies compare a candidate design against the solver optimum on an
equispaced grid of ``REF_GRID_N`` points.  Density designs (uniform and
arcsine) enter as ``DESIGN_N``-point discretizations: equispaced points for
the uniform law and arcsine quantiles for the arcsine law.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import RegressionBasis
from .designs import (Design, arcsine_design, equispaced_design, ks_distance, quantile_design,
                      two_point_design)
from .errors import ConfigError
from .kernels import CovarianceKernel, smoothed_log
from .optimality import Criterion, sensitivities
from .moments import cov_matrix
from .solver import SolverConfig, efficiency, solve

log = logging.getLogger(__name__)

DESIGN_N = 81
REF_GRID_N = 81
REF_MAX_ITER = 20_000
TOLERANCE = {1: 0.005, 2: 0.01, 3: 0.01}

REFERENCE_TABLE1 = {
    (1, lam): v for lam, v in zip((0.1, 0.3, 0.5, 0.7, 0.9), (0.999, 0.997, 0.978, 0.946, 0.905))
} | {
    (2, lam): v for lam, v in zip((0.1, 0.3, 0.5, 0.7, 0.9), (0.999, 0.999, 0.991, 0.974, 0.950))
}
REFERENCE_TABLE2 = dict(zip((0.02, 0.04, 0.06, 0.08, 0.1), (0.998, 0.978, 0.966, 0.949, 0.936)))
TABLE3_LAMBDAS = (0.5, 1.5, 2.5, 3.5, 4.5, 5.5)
_T3 = {
    (1, "uniform"): (0.913, 0.888, 0.903, 0.919, 0.933, 0.944),
    (1, "arcsine"): (0.966, 0.979, 0.987, 0.980, 0.968, 0.954),
    (2, "uniform"): (0.857, 0.832, 0.847, 0.867, 0.886, 0.901),
    (2, "arcsine"): (0.942, 0.954, 0.970, 0.975, 0.973, 0.966),
    (3, "uniform"): (0.832, 0.816, 0.826, 0.842, 0.860, 0.876),
    (3, "arcsine"): (0.934, 0.938, 0.954, 0.968, 0.976, 0.981),
    (4, "uniform"): (0.826, 0.818, 0.823, 0.835, 0.849, 0.864),
    (4, "arcsine"): (0.934, 0.936, 0.945, 0.957, 0.967, 0.975),
}
REFERENCE_TABLE3 = {(m, d, lam): v for (m, d), vals in _T3.items() for lam, v in zip(TABLE3_LAMBDAS, vals)}


@dataclass
class TableRow:
    label: dict
    reference: float
    computed: float

    @property
    def delta(self) -> float:
        return self.computed - self.reference


@dataclass
class TableResult:
    table_id: int
    rows: list
    tolerance: float
    notes: dict = field(default_factory=dict)

    @property
    def max_abs_delta(self) -> float:
        return max(abs(r.delta) for r in self.rows)

    @property
    def n_within(self) -> int:
        return sum(abs(r.delta) <= self.tolerance + 1e-12 for r in self.rows)

    def passed(self) -> bool:
        return self.n_within == len(self.rows)

    def to_csv(self) -> str:
        keys = list(self.rows[0].label)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys + ["reference", "computed", "delta", "within_tol"])
        for r in self.rows:
            w.writerow([r.label[k] for k in keys]
                       + [r.reference, f"{r.computed:.6f}", f"{r.delta:+.6f}", abs(r.delta) <= self.tolerance + 1e-12])
        return buf.getvalue()


def reference_optimum(basis, kernel, grid_n: int = REF_GRID_N, max_iter: int = REF_MAX_ITER, stats=None) -> Design:
    """Solver D-optimum on an equispaced grid, unpruned.

    Runs that stop at ``max_iter`` are usually still shrinking a few
    near-zero weights; ``stats`` collects how many did and the worst
    necessary-condition violation.
    """
    res = solve(basis, kernel, Criterion("D"), SolverConfig(grid_n=grid_n, max_iter=max_iter))
    if stats is not None:
        stats["solves"] = stats.get("solves", 0) + 1
        stats["not_converged"] = stats.get("not_converged", 0) + (not res.converged)
        stats["max_violation"] = max(stats.get("max_violation", 0.0), float(res.report.max_violation))
        stats["all_pass_necessary"] = stats.get("all_pass_necessary", True) and res.report.passed
    if not res.converged:
        log.info("reference optimum stopped at %d iterations", res.iterations)
    return res.grid_design


def table1(grid_n: int = REF_GRID_N) -> TableResult:
    """Two-point design {-1, 1} under exponential kernels, constant and linear model."""
    rows, stats = [], {}
    for (m, lam), ref in REFERENCE_TABLE1.items():
        basis, kernel = RegressionBasis.monomial(m), CovarianceKernel.exponential(lam)
        opt = reference_optimum(basis, kernel, grid_n, stats=stats)
        rows.append(TableRow({"m": m, "lambda": lam}, ref, efficiency(two_point_design(), opt, basis, kernel)))
    return TableResult(1, rows, TOLERANCE[1], stats)


def table2(grid_n: int = REF_GRID_N, design_n: int = DESIGN_N) -> TableResult:
    """Arcsine design in the quadratic model under the smoothed logarithmic kernel."""
    basis = RegressionBasis.monomial(3)
    xa = quantile_design(arcsine_design(), design_n)
    rows, stats = [], {}
    for delta, ref in REFERENCE_TABLE2.items():
        kernel = CovarianceKernel.smoothed_log_kernel(delta)
        opt = reference_optimum(basis, kernel, grid_n, stats=stats)
        rows.append(TableRow({"delta": delta}, ref, efficiency(xa, opt, basis, kernel)))
    return TableResult(2, rows, TOLERANCE[2], stats)


def table3(grid_n: int = REF_GRID_N, design_n: int = DESIGN_N) -> TableResult:
    """Uniform and arcsine designs under exponential kernels, polynomial degree m - 1."""
    designs = {"uniform": equispaced_design(design_n), "arcsine": quantile_design(arcsine_design(), design_n)}
    rows, stats = [], {}
    for m in (1, 2, 3, 4):
        basis = RegressionBasis.monomial(m)
        for lam in TABLE3_LAMBDAS:
            kernel = CovarianceKernel.exponential(lam)
            opt = reference_optimum(basis, kernel, grid_n, stats=stats)
            for name, d in designs.items():
                rows.append(TableRow({"m": m, "design": name, "lambda": lam}, REFERENCE_TABLE3[(m, name, lam)],
                                     efficiency(d, opt, basis, kernel)))
    return TableResult(3, rows, TOLERANCE[3], stats)


def run_tables(table_id: int, out_dir=None) -> TableResult:
    """Recompute one table; with ``out_dir`` also write ``table<id>.csv``."""
    fn = {1: table1, 2: table2, 3: table3}.get(int(table_id))
    if fn is None:
        raise ConfigError(f"unknown table {table_id!r}; choose 1, 2 or 3")
    res = fn()
    res.notes.update(design_n=DESIGN_N, reference_grid_n=REF_GRID_N)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"table{table_id}.csv").write_text(res.to_csv(), encoding="utf-8")
    return res


# -- figures -----------------------------------------------------------


@dataclass
class FigureData:
    figure_id: int
    columns: dict
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        keys = list(self.columns)
        n = max(len(v) for v in self.columns.values())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for i in range(n):
            w.writerow([repr(float(self.columns[k][i])) if i < len(self.columns[k]) else "" for k in keys])
        return buf.getvalue()


def figure1(n: int = 201, quad_n: int = 401) -> FigureData:
    """b and d = phi (D-criterion) for the arcsine design in the quadratic model, three kernels."""
    basis = RegressionBasis.monomial(3)
    x = np.linspace(-1, 1, n)
    kernels = {"exponential": CovarianceKernel.exponential(1.0), "triangular": CovarianceKernel.triangular(1.0),
               "logarithmic": CovarianceKernel.logarithmic()}
    cols, summary = {"x": x}, {}
    for name, k in kernels.items():
        ms = cov_matrix(arcsine_design(), basis, k, quad_n=quad_n)
        s = sensitivities(ms, Criterion("D"), x)
        cols[f"b_{name}"], cols[f"d_{name}"] = s.b, s.phi
        summary[f"max_d_minus_b_{name}"] = float((s.phi - s.b).max())
    return FigureData(1, cols, summary)


def figure3(n: int = 201, grid_n: int = 201) -> FigureData:
    """b and phi for the c-criterion in the quadratic model under the triangular kernel."""
    basis, kernel = RegressionBasis.monomial(3), CovarianceKernel.triangular(1.0)
    x = np.linspace(-1, 1, n)
    three = Design([-1.0, 0.0, 1.0])
    copt = solve(basis, kernel, Criterion.C((1, 0, 0)), SolverConfig(grid_n=grid_n, max_iter=REF_MAX_ITER)).design
    panels = {"a": (three, (1, 0, 1)), "b": (three, (1, 0, 0)), "c": (copt, (1, 0, 0))}
    cols, summary = {"x": x}, {}
    for p, (d, c) in panels.items():
        s = sensitivities(cov_matrix(d, basis, kernel), Criterion.C(c), x)
        cols[f"b_{p}"], cols[f"phi_{p}"] = s.b, s.phi
        summary[f"min_b_minus_phi_{p}"] = float((s.b - s.phi).min())
    summary["panel_c_design"] = copt.to_json()
    return FigureData(3, cols, summary)


FIG_DELTAS = (0.02, 0.05, 0.1)


def figure4(n: int = 400) -> FigureData:
    """The logarithmic kernel -ln t^2 and its smoothed versions for t in (0, 2]."""
    t = np.linspace(2.0 / n, 2.0, n)
    cols = {"t": t, "log": -np.log(t * t)}
    for d in FIG_DELTAS:
        cols[f"smoothed_{d:g}"] = smoothed_log(d, t)
    return FigureData(4, cols)


def figure5(grid_n: int = 201) -> FigureData:
    """Solver D-optimal designs for the quadratic model under the smoothed logarithmic kernel.

    Densities are estimated as weight over cell width; the summary holds the
    CDF gap to the arcsine law measured at the cell boundaries.
    """
    basis = RegressionBasis.monomial(3)
    x = np.linspace(-1, 1, grid_n)
    edges = np.concatenate([[-1.0], 0.5 * (x[1:] + x[:-1]), [1.0]])
    width = np.diff(edges)
    asin = arcsine_design()
    cols = {"x": x, "arcsine_density": np.diff(asin.cdf(edges)) / width}
    summary = {}
    for d in FIG_DELTAS:
        res = solve(basis, CovarianceKernel.smoothed_log_kernel(d), Criterion("D"),
                    SolverConfig(grid_n=grid_n, max_iter=REF_MAX_ITER))
        g = res.grid_design
        cols[f"weight_{d:g}"] = g.weights
        cols[f"density_{d:g}"] = g.weights / width
        cols[f"cdf_{d:g}"] = np.cumsum(g.weights)
        summary[f"cdf_gap_{d:g}"] = ks_distance(g, asin, grid_matched=True)
        summary[f"converged_{d:g}"] = res.converged
    cols["arcsine_cdf"] = asin.cdf(edges[1:])
    return FigureData(5, cols, summary)


def run_figure_data(figure_id: int, out_dir=None) -> FigureData:
    """Compute one figure's data; with ``out_dir`` write ``figure<id>.csv`` and a JSON summary."""
    fn = {1: figure1, 3: figure3, 4: figure4, 5: figure5}.get(int(figure_id))
    if fn is None:
        raise ConfigError(f"unknown figure {figure_id!r}; choose 1, 3, 4 or 5")
    fig = fn()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"figure{figure_id}.csv").write_text(fig.to_csv(), encoding="utf-8")
        (out / f"figure{figure_id}_summary.json").write_text(json.dumps(fig.summary, indent=2), encoding="utf-8")
    return fig

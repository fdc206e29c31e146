"""Extinction-region sweeps over a (delta, beta) grid."""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from .errors import ConvergenceError, ValidationError
from .graph import Graph
from .model import homogeneous
from .moments import build_moment_matrix
from .sim import SimConfig, run_many
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, lambda_max_adjacency, lambda_max_metzler, rho_sis_bar

CSV_HEADER = ["delta", "beta", "y_star", "lambda_M", "rho_sis", "in_E", "in_E_lower", "in_E_sis"]


def log_axis(lo: float, hi: float, num: int) -> list[float]:
    return np.geomspace(lo, hi, num).tolist()


@dataclass(frozen=True)
class SweepGrid:
    delta_values: Sequence[float]
    beta_values: Sequence[float]
    gamma: float = 0.01
    sim: SimConfig = field(default_factory=SimConfig)
    runs_per_cell: int = 4
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def validate(self) -> None:
        for name, vals in (("delta_values", self.delta_values), ("beta_values", self.beta_values)):
            v = np.asarray(vals, dtype=float)
            if v.size == 0:
                raise ValidationError(f"{name} is empty")
            if np.any(v <= 0) or np.any(np.diff(v) <= 0):
                raise ValidationError(f"{name} must be positive and increasing")
        if self.gamma < 0:
            raise ValidationError("gamma must be nonnegative")
        if self.runs_per_cell < 1:
            raise ValidationError("runs_per_cell must be at least 1")
        if not self.sim.reinfect:
            raise ValidationError("sweeps estimate the meta-stable level and need reinfection")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.delta_values), len(self.beta_values)


@dataclass(frozen=True)
class SweepCell:
    delta: float
    beta: float
    y_star: float
    lambda_M: float
    rho_sis: float

    @property
    def in_E(self) -> bool:
        return self.y_star < 1.0

    @property
    def in_E_lower(self) -> bool:
        return self.lambda_M < 0.0

    @property
    def in_E_sis(self) -> bool:
        return self.rho_sis < 0.0

    def csv_row(self) -> list[str]:
        return [f"{self.delta:.9g}", f"{self.beta:.9g}", f"{self.y_star:.9g}",
                f"{self.lambda_M:.9g}", f"{self.rho_sis:.9g}",
                str(int(self.in_E)), str(int(self.in_E_lower)), str(int(self.in_E_sis))]


def cell_seeds(seed, n_cells: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n_cells)


def metastable_level(g: Graph, delta: float, beta: float, gamma: float, sim: SimConfig,
                     runs: int, seed: np.random.SeedSequence) -> float:
    """Mean meta-stable infected count over ``runs`` seeded runs with re-infection."""
    p = homogeneous(g.num_nodes, beta, delta, gamma)
    configs = [replace(sim, seed=s, reinfect=True, record_events=False, sample_times=None)
               for s in seed.spawn(runs)]
    return float(np.mean([r.metastable for r in run_many(g, p, configs)]))


def _cell(args) -> SweepCell:
    g, grid, lam_a, delta, beta, seed = args
    p = homogeneous(g.num_nodes, beta, delta, grid.gamma)
    try:
        lam_m = lambda_max_metzler(build_moment_matrix(g, p), grid.tol, grid.max_iter).lambda_max
    except ConvergenceError as exc:
        raise ConvergenceError(f"eigensolve failed at delta={delta}, beta={beta}: {exc}",
                               last=exc.last) from None
    y_star = metastable_level(g, delta, beta, grid.gamma, grid.sim, grid.runs_per_cell, seed)
    return SweepCell(float(delta), float(beta), y_star, lam_m, rho_sis_bar(beta, delta, lam_a))


def run_sweep(g: Graph, grid: SweepGrid, workers: int = 1) -> list[SweepCell]:
    """Evaluate every grid cell, delta outer and beta inner.

    Cell ``c`` draws its runs from the ``c``-th child of the grid seed, so
    output does not depend on ``workers``.
    """
    grid.validate()
    lam_a = lambda_max_adjacency(g, grid.tol, grid.max_iter).lambda_max
    coords = [(d, b) for d in grid.delta_values for b in grid.beta_values]
    seeds = cell_seeds(grid.sim.seed, len(coords))
    jobs = [(g, grid, lam_a, d, b, s) for (d, b), s in zip(coords, seeds)]
    if workers <= 1:
        return [_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell, jobs))


def write_csv(cells: Sequence[SweepCell], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in cells:
        w.writerow(c.csv_row())


@dataclass(frozen=True)
class RegionSummary:
    """Per recovery rate, the largest transmission rate still classified
    extinct by each criterion (``None`` when no cell in that column is)."""

    delta_values: tuple
    beta_values: tuple
    boundary_E: tuple
    boundary_E_lower: tuple
    boundary_E_sis: tuple
    count_E: int
    count_E_lower: int
    count_E_sis: int


def classify_boundaries(cells: Sequence[SweepCell]) -> RegionSummary:
    deltas = sorted({c.delta for c in cells})
    betas = sorted({c.beta for c in cells})
    table = {(c.delta, c.beta): c for c in cells}
    if len(table) != len(cells) or len(table) != len(deltas) * len(betas):
        raise ValidationError("cells do not form a complete rectangular grid")

    def edge(flag):
        out = []
        for d in deltas:
            hits = [b for b in betas if flag(table[d, b])]
            out.append(max(hits) if hits else None)
        return tuple(out)

    return RegionSummary(
        tuple(deltas), tuple(betas),
        edge(lambda c: c.in_E), edge(lambda c: c.in_E_lower), edge(lambda c: c.in_E_sis),
        sum(c.in_E for c in cells), sum(c.in_E_lower for c in cells),
        sum(c.in_E_sis for c in cells),
    )

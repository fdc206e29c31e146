"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines are collected into the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import io
import itertools
import os
import sys
import tempfile
import time
from contextlib import redirect_stdout

import numpy as np
import pytest
from scipy.linalg import expm

from synsis.cli import main as cli_main
from synsis.exact import (build_exact, exact_growth_rate, first_moment_bound_rhs,
                          first_moment_identity_rhs, generator_derivative,
                          integrate_master_equation, moments_of, pair_moment_bound_rhs)
from synsis.graph import Graph, load_builtin
from synsis.model import ModelParams, homogeneous
from synsis.moments import MomentIndex, build_moment_matrix
from synsis.sim import SimConfig, estimate_infection_probabilities
from synsis.spectral import dense_lambda_max, lambda_max_adjacency, lambda_max_metzler, rho_sis_bar
from synsis.sweep import SweepGrid, log_axis, metastable_level, run_sweep

RESULTS: list[str] = []


def report(k: int, title: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {k}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


def random_instance(rng, n):
    pairs = list(itertools.combinations(range(n), 2))
    keep = rng.random(len(pairs)) < 0.5
    g = Graph.from_edges(n, [e for e, k in zip(pairs, keep) if k])
    return g, ModelParams(*rng.uniform(0, 2, size=(3, n)))


def stacked(s, p2):
    n = s.size
    iu = np.triu_indices(n, 1)
    return np.concatenate([s, p2[iu]])


def criterion_1():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = -np.inf
    for _ in range(200):
        g, p = random_instance(rng, int(rng.integers(3, 8)))
        lam = lambda_max_metzler(build_moment_matrix(g, p), tol=1e-12).lambda_max
        worst = max(worst, exact_growth_rate(build_exact(g, p)) - lam)
    dt = time.perf_counter() - t0
    return report(1, "exact growth rate <= lambda_max(M) + 1e-9 on 200 instances",
                  worst <= 1e-9 and dt < 120, f"max excess {worst:.2e}, {dt:.1f}s")


def _five_point(gen_t, dist, h=1e-4):
    # stencil points are propagated from the integrated state with the exact
    # propagator, so the only error is the O(h^4) truncation
    fwd, bwd = expm(gen_t * h), expm(-gen_t * h)
    f1 = fwd @ dist
    b1 = bwd @ dist
    return (bwd @ b1 - 8 * b1 + 8 * f1 - fwd @ f1) / (12 * h)


def criterion_2():
    rng = np.random.default_rng(202)
    times = np.linspace(0.1, 4.0, 20)
    t0 = time.perf_counter()
    err4 = viol5 = viol8 = viol11 = fd_vs_gen = 0.0
    for _ in range(25):
        n = int(rng.integers(2, 6))
        g, p = random_instance(rng, n)
        ex = build_exact(g, p)
        mm = build_moment_matrix(g, p).toarray()
        gen_t = ex.generator.toarray().T
        initial = int(rng.integers(1, 1 << n))
        off = ~np.eye(n, dtype=bool)
        for d in integrate_master_equation(ex, initial, times):
            s, p2, p3 = (x[0] for x in moments_of(d, n))
            dd = _five_point(gen_t, d)
            ds, dp2, _ = (x[0] for x in moments_of(dd, n))
            fd_vs_gen = max(fd_vs_gen, np.abs(dd - generator_derivative(ex, d)[0]).max())
            err4 = max(err4, np.abs(ds - first_moment_identity_rhs(g, p, s, p2, p3)).max())

            def excess(lhs, rhs):
                return float(np.max((lhs - rhs) / np.maximum(1.0, np.abs(rhs)), initial=-np.inf))

            viol5 = max(viol5, excess(ds, first_moment_bound_rhs(g, p, s, p2)))
            viol8 = max(viol8, excess(dp2[off], pair_moment_bound_rhs(g, p, s, p2)[off]))
            viol11 = max(viol11, excess(stacked(ds, dp2), mm @ stacked(s, p2)))
    dt = time.perf_counter() - t0
    ok = err4 <= 1e-6 and max(viol5, viol8, viol11) <= 1e-8 and dt < 120
    return report(2, "moment identity and inequalities along exact trajectories", ok,
                  f"identity err {err4:.1e}; worst relative excess 5/8/11: "
                  f"{viol5:.1e}/{viol8:.1e}/{viol11:.1e}; FD vs generator {fd_vs_gen:.1e}; {dt:.1f}s")


def criterion_3():
    g = Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    p = homogeneous(3, 0.8, 1.0, 0.3)
    times = [0.5, 1.0, 2.0, 5.0]
    t0 = time.perf_counter()
    est = estimate_infection_probabilities(
        g, p, SimConfig(horizon=5.0, seed=303, reinfect=False, initial_infected=[0],
                        sample_times=times), runs=10_000)
    dist = integrate_master_equation(build_exact(g, p), 0b001, times)
    exact = moments_of(dist, 3)[0]
    z = np.abs(est.mean - exact) / est.stderr
    dt = time.perf_counter() - t0
    return report(3, "Monte-Carlo infection probabilities within 3 SE of the master equation",
                  bool(np.all(z <= 3)) and dt < 60, f"max |z| {z.max():.2f} over 12 cells, {dt:.1f}s")


def criterion_4():
    g = load_builtin("karate")
    a = g.adjacency().toarray()
    lam_a = lambda_max_adjacency(g, tol=1e-12).lambda_max
    exact_block = dominated = True
    worst = np.inf
    for beta, delta in itertools.product([0.002, 0.02, 0.2, 1.0], [0.05, 0.5, 3.0]):
        mat = build_moment_matrix(g, homogeneous(34, beta, delta, 0.0))
        exact_block &= bool(np.array_equal(mat.toarray()[:34, :34], beta * a - delta * np.eye(34)))
        r = lambda_max_metzler(mat, tol=1e-12)
        gap = r.lambda_max - rho_sis_bar(beta, delta, lam_a)
        # both sides are solver outputs accurate to tol times the shifted root
        dominated &= gap >= -1e-12 * (r.lambda_max + r.shift_used) * 10
        worst = min(worst, gap)
    return report(4, "zero-synergy block equals beta*A - delta*I; bound >= SIS bound",
                  exact_block and dominated, f"12 parameter pairs, min gap {worst:.2e}")


def criterion_5():
    g = load_builtin("karate")
    grid = SweepGrid(log_axis(0.05, 5, 10), log_axis(0.002, 0.2, 10), gamma=0.01,
                     sim=SimConfig(horizon=1e4, seed=2024), runs_per_cell=4)
    t0 = time.perf_counter()
    cells = run_sweep(g, grid, workers=os.cpu_count() or 1)
    flagged = [c for c in cells if c.in_E_lower and not c.in_E]
    persisting = []
    for k, c in enumerate(flagged):
        y = metastable_level(g, c.delta, c.beta, grid.gamma,
                             SimConfig(horizon=4 * grid.sim.horizon), 4 * grid.runs_per_cell,
                             np.random.SeedSequence([2024, 4, k]))
        if y >= 1:
            persisting.append((c.delta, c.beta, y))
    over = [c for c in cells if c.in_E_sis and not c.in_E]
    dt = time.perf_counter() - t0
    ok = not persisting and len(over) >= 1 and dt < 900
    return report(5, "Karate sweep: inner estimate sound, SIS bound overestimates extinction", ok,
                  f"{len(flagged)} flagged cells, {len(persisting)} persist at 4x budget; "
                  f"{len(over)} SIS-overestimate cells; {dt:.1f}s")


def criterion_6():
    details, ok = [], True
    for name in ("karate", "lesmis"):
        g = load_builtin(name)
        for delta, want in ((3.0, True), (0.1, False)):
            y = metastable_level(g, delta, 0.02, 0.01, SimConfig(horizon=1e4), 4,
                                 np.random.SeedSequence([606, int(delta * 10)]))
            ok &= (y < 1) is want
            details.append(f"{name} delta={delta:g}: y*={y:.3g}")
    rng = np.random.default_rng(247)
    pairs = np.array(list(itertools.combinations(range(247), 2)))
    chosen = pairs[rng.choice(len(pairs), size=1500, replace=False)]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "synthetic247.edges")
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(f"{i} {j}\n" for i, j in chosen)
        out = io.StringIO()
        t0 = time.perf_counter()
        with redirect_stdout(out):
            code = cli_main(["bound", "--graph", path, "--delta", "3", "--beta", "0.02",
                             "--threads", "1"])
        dt = time.perf_counter() - t0
    dim = next(int(l.split()[-1]) for l in out.getvalue().splitlines()
               if l.startswith("moment dimension"))
    ok &= code == 0 and dim == 30628 and dt < 60
    details.append(f"N=247 bound: dim {dim}, {dt:.1f}s")
    return report(6, "beta=0.02 regimes on two networks; bound at N=247 scale", ok, "; ".join(details))


def criterion_7():
    rng = np.random.default_rng(707)
    t0 = time.perf_counter()
    worst, dims = 0.0, []
    for _ in range(50):
        n = int(rng.integers(2, 35))            # dim = n(n+1)/2 <= 595
        pairs = list(itertools.combinations(range(n), 2))
        keep = rng.random(len(pairs)) < rng.uniform(0.05, 0.6)
        g = Graph.from_edges(n, [e for e, k in zip(pairs, keep) if k])
        p = ModelParams(*rng.uniform(0, 2, size=(3, n)))
        mat = build_moment_matrix(g, p)
        dims.append(mat.dim)
        lam = lambda_max_metzler(mat, tol=1e-11).lambda_max
        ref = dense_lambda_max(mat)
        worst = max(worst, abs(lam - ref) / abs(ref))
    dt = time.perf_counter() - t0
    return report(7, "power iteration matches dense eigensolver on 50 matrices",
                  worst <= 1e-8 and max(dims) <= 600 and dt < 60,
                  f"max relative error {worst:.1e}, dims {min(dims)}..{max(dims)}, {dt:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)

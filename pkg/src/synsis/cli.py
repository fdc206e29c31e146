"""Command-line interface: ``synsis {bound,simulate,exact,sweep,matrix}``.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import exact, sim, spectral, sweep
from .errors import ConvergenceError, StateSpaceTooLarge, ValidationError
from .graph import Graph, read_edge_list
from .model import ModelParams, homogeneous
from .moments import build_moment_matrix

log = logging.getLogger("synsis")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[float]:
    """``lo:hi:n`` (log-spaced) or ``lo:hi:n:lin``."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(f"expected lo:hi:n[:log|lin], got {text!r}")
    try:
        lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    scale = parts[3] if len(parts) == 4 else "log"
    if num < 1 or lo <= 0 or hi < lo or scale not in ("log", "lin"):
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    if num == 1:
        return [lo]
    return (np.geomspace(lo, hi, num) if scale == "log" else np.linspace(lo, hi, num)).tolist()


def load_params(path: str, g: Graph) -> ModelParams:
    """Per-node rates from CSV ``label,delta,beta,gamma`` (header optional)."""
    rates = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "label":
                continue
            if len(row) != 4:
                raise ValidationError(f"{path}:{lineno}: expected label,delta,beta,gamma")
            try:
                rates[row[0].strip()] = tuple(float(v) for v in row[1:])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric rate") from None
    missing = [lab for lab in g.node_labels if lab not in rates]
    if missing:
        raise ValidationError(f"{path}: no rates for node(s) {', '.join(missing[:5])}")
    arr = np.array([rates[lab] for lab in g.node_labels])
    return ModelParams(arr[:, 0], arr[:, 1], arr[:, 2])


def _params(args, g: Graph) -> ModelParams:
    if args.params:
        return load_params(args.params, g)
    if args.delta is None or args.beta is None:
        raise ValidationError("give --delta and --beta, or --params")
    p = homogeneous(g.num_nodes, args.beta, args.delta, args.gamma)
    if args.delta == 0:
        log.warning("delta = 0: infected nodes never recover")
    return p


def _graph(args) -> Graph:
    if not os.path.isfile(args.graph):
        raise ValidationError(f"graph file not found: {args.graph}")
    return read_edge_list(args.graph)


def cmd_bound(args) -> int:
    g = _graph(args)
    p = _params(args, g)
    m = build_moment_matrix(g, p)
    res = spectral.lambda_max_metzler(m, args.tol, args.max_iter)
    lam_a = spectral.lambda_max_adjacency(g, args.tol, args.max_iter).lambda_max
    print(f"nodes                 {g.num_nodes}")
    print(f"edges                 {g.num_edges}")
    print(f"moment dimension      {m.dim}")
    print(f"nonzeros              {m.nnz}")
    print(f"lambda_max(M)         {res.lambda_max:.10g}")
    print(f"power iterations      {res.iterations}")
    print(f"lambda_max(A)         {lam_a:.10g}")
    if args.params:
        print("rho_sis               n/a (heterogeneous rates)")
    else:
        print(f"rho_sis               {spectral.rho_sis_bar(args.beta, args.delta, lam_a):.10g}")
    verdict = "extinct by bound" if res.lambda_max < 0 else "inconclusive"
    print(f"verdict               {verdict}")
    return EXIT_OK


def _initial(args, g: Graph):
    if not args.initial:
        return None
    return [g.index_of(lab) for lab in args.initial]


def cmd_simulate(args) -> int:
    if args.runs < 1:
        raise ValidationError("--runs must be at least 1")
    if args.events and args.runs != 1:
        raise ValidationError("--events needs --runs 1")
    g = _graph(args)
    p = _params(args, g)
    cfg = sim.SimConfig(horizon=args.horizon, seed=args.seed, reinfect=not args.no_reinfect,
                        initial_infected=_initial(args, g), burn_in=args.burn_in,
                        record_events=bool(args.events))
    root = np.random.SeedSequence(args.seed)
    configs = [cfg] if args.runs == 1 else [
        sim.replace(cfg, seed=s, record_events=False) for s in root.spawn(args.runs)]
    results = sim.run_many(g, p, configs, workers=args.threads)
    y = float(np.mean([r.time_average for r in results]))
    y_star = y - 1.0
    print(f"runs                  {len(results)}")
    print(f"horizon               {args.horizon:g}")
    print(f"time average y(T)     {y:.10g}")
    print(f"meta-stable y*        {y_star:.10g}")
    print(f"reinfections          {sum(r.reinfection_count for r in results)}")
    print(f"events                {sum(r.event_count for r in results)}")
    print(f"classification        {'extinct' if y_star < 1 else 'persistent'}")
    if args.events:
        with open(args.events, "w", encoding="utf-8") as fh:
            sim.write_event_log(results[0], g, fh)
    return EXIT_OK


def cmd_exact(args) -> int:
    g = _graph(args)
    p = _params(args, g)
    model = exact.build_exact(g, p, cap=args.cap)
    rho = exact.exact_growth_rate(model)
    lam = spectral.lambda_max_metzler(build_moment_matrix(g, p), args.tol, args.max_iter).lambda_max
    print(f"nodes                 {g.num_nodes}")
    print(f"states                {model.num_states}")
    print(f"exact growth rate     {rho:.10g}")
    print(f"lambda_max(M)         {lam:.10g}")
    print(f"margin                {lam - rho:.10g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    g = _graph(args)
    if not args.out:
        raise ValidationError("sweep needs --out PATH for the CSV")
    grid = sweep.SweepGrid(
        delta_values=args.delta_range, beta_values=args.beta_range, gamma=args.gamma,
        sim=sim.SimConfig(horizon=args.horizon, seed=args.seed),
        runs_per_cell=args.runs, tol=args.tol, max_iter=args.max_iter)
    cells = sweep.run_sweep(g, grid, workers=args.threads)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        sweep.write_csv(cells, fh)
    s = sweep.classify_boundaries(cells)
    unsound = sum(c.in_E_lower and not c.in_E for c in cells)
    over = sum(c.in_E_sis and not c.in_E for c in cells)
    print(f"cells                 {len(cells)}")
    print(f"extinct (y* < 1)      {s.count_E}")
    print(f"lambda_max(M) < 0     {s.count_E_lower}")
    print(f"rho_sis < 0           {s.count_E_sis}")
    print(f"bound says extinct, simulation persists      {unsound}")
    print(f"rho_sis says extinct, simulation persists    {over}")
    return EXIT_OK


def cmd_matrix(args) -> int:
    g = _graph(args)
    p = _params(args, g)
    m = build_moment_matrix(g, p)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            m.write_coordinate(fh)
        print(f"wrote {m.dim}x{m.dim} matrix with {m.nnz} entries to {args.out}")
    else:
        m.write_coordinate(sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, metavar="PATH", help="edge-list file")
    common.add_argument("--delta", type=float, help="recovery rate (all nodes)")
    common.add_argument("--beta", type=float, help="transmission rate (all nodes)")
    common.add_argument("--gamma", type=float, default=0.01, help="synergy strength (default 0.01)")
    common.add_argument("--params", metavar="PATH", help="per-node CSV label,delta,beta,gamma")
    common.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    common.add_argument("--max-iter", type=int, default=spectral.DEFAULT_MAX_ITER)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("-v", "--verbose", action="store_true")

    def simopts(runs):
        # a fresh parent per subcommand: argparse shares parent actions, so
        # differing defaults would leak between subcommands
        opts = argparse.ArgumentParser(add_help=False)
        opts.add_argument("--horizon", type=float, default=1e4)
        opts.add_argument("--seed", type=int, default=0)
        opts.add_argument("--runs", type=int, default=runs)
        return opts

    parser = _Parser(prog="synsis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("bound", parents=[common], help="spectral growth-rate bound")
    s = sub.add_parser("simulate", parents=[common, simopts(1)], help="stochastic simulation")
    s.add_argument("--no-reinfect", action="store_true")
    s.add_argument("--initial", action="append", metavar="LABEL",
                   help="initially infected node (repeatable; default one random node)")
    s.add_argument("--burn-in", type=float, default=0.0)
    s.add_argument("--events", metavar="PATH", help="write event-log CSV")
    e = sub.add_parser("exact", parents=[common], help="exact growth rate on small graphs")
    e.add_argument("--cap", type=int, default=exact.DEFAULT_CAP)
    w = sub.add_parser("sweep", parents=[common, simopts(4)], help="(delta, beta) region sweep")
    w.add_argument("--delta-range", type=parse_range, default=parse_range("0.05:5:10"))
    w.add_argument("--beta-range", type=parse_range, default=parse_range("0.002:0.2:10"))
    sub.add_parser("matrix", parents=[common], help="dump M in coordinate format")
    return parser


COMMANDS = {"bound": cmd_bound, "simulate": cmd_simulate, "exact": cmd_exact,
            "sweep": cmd_sweep, "matrix": cmd_matrix}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, StateSpaceTooLarge) as exc:
        print(f"synsis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, RuntimeError, FloatingPointError) as exc:
        print(f"synsis: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

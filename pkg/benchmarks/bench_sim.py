"""Compare the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_sim.py [--horizon T] [--repeat K]

Both backends consume the same random stream, so the script also checks that
their results agree exactly.
"""
import argparse
import time

from synsis import sim
from synsis.graph import load_builtin
from synsis.model import homogeneous

CASES = [
    ("karate", 0.02, 3.0),   # dies out quickly, dominated by re-infections
    ("karate", 0.02, 0.1),   # persistent, about 20 infected nodes
    ("lesmis", 0.02, 0.1),
]


def bench(backend, g, p, cfg, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        r = sim.run(g, p, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, r


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=1000.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "cython" not in sim.BACKENDS:
        print("compiled kernel unavailable; rebuild with Cython installed")
        return
    cfg = sim.SimConfig(horizon=args.horizon, seed=1)
    print(f"{'network':8} {'beta':>6} {'delta':>6} {'events':>9} "
          f"{'cython s':>9} {'python s':>9} {'speedup':>8}  same")
    for name, beta, delta in CASES:
        g = load_builtin(name)
        p = homogeneous(g.num_nodes, beta, delta, 0.01)
        tc, rc = bench("cython", g, p, cfg, args.repeat)
        tp, rp = bench("python", g, p, cfg, 1)
        same = rc.time_average == rp.time_average and rc.event_count == rp.event_count
        events = rc.event_count + rc.reinfection_count
        print(f"{name:8} {beta:6g} {delta:6g} {events:9d} {tc:9.3f} {tp:9.3f} {tp / tc:7.1f}x  {same}")


if __name__ == "__main__":
    main()

"""Exact event-driven simulation of the synergistic SIS Markov chain.

The event loop lives in ``_simcore`` (compiled) with ``_simcore_py`` as a
pure-Python fallback; set ``SYNSIS_PURE_PYTHON=1`` to force the fallback.
Both backends draw from the same pre-generated uniforms, so results do not
depend on which one is active.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from . import _simcore_py
from .errors import ValidationError
from .graph import Graph
from .model import EpidemicState, ModelParams, infection_rate

if os.environ.get("SYNSIS_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _simcore as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _simcore_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
BACKEND = "cython" if _compiled is not None else "python"

EVENT_NAMES = ("infect", "recover", "reinfect")

_FIRST_BLOCK = 256
_MAX_BLOCK = 1 << 16
_LOG_BLOCK = 1 << 15


class Extinction(Exception):
    """No event can occur: the total event rate is zero."""


@dataclass(frozen=True)
class SimConfig:
    """Run settings.

    ``initial_infected=None`` infects one node drawn uniformly from the run's
    random stream. ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """

    horizon: float = 1e4
    seed: object = 0
    reinfect: bool = True
    initial_infected: Sequence[int] | None = None
    sample_times: Sequence[float] | None = None
    burn_in: float = 0.0
    record_events: bool = False

    def validate(self, n: int) -> None:
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValidationError("horizon must be positive and finite")
        if not 0 <= self.burn_in < self.horizon:
            raise ValidationError("burn_in must lie in [0, horizon)")
        if self.initial_infected is not None:
            for i in self.initial_infected:
                if not 0 <= int(i) < n:
                    raise ValidationError(f"initial node {i} out of range")
        if self.sample_times is not None:
            ts = np.asarray(self.sample_times, dtype=float)
            if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < 0 or ts[-1] > self.horizon):
                raise ValidationError("sample_times must be sorted and lie in [0, horizon]")


@dataclass
class SimResult:
    horizon: float
    time_average: float
    reinfection_count: int
    event_count: int
    initial_infected: list[int]
    final_state: np.ndarray
    samples: np.ndarray = field(repr=False)
    sample_states: np.ndarray = field(repr=False)
    event_log: list[tuple[float, int, str]] | None = field(default=None, repr=False)

    @property
    def metastable(self) -> float:
        """Time-averaged infected count minus the one node re-infection keeps alive."""
        return self.time_average - 1.0

    @property
    def extinct(self) -> bool:
        return self.metastable < 1.0


def two_hop_lists(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """CSR of ``{v} | N(v) | N(N(v))`` per node: the nodes whose event rate
    can change when ``v`` flips."""
    ptr = [0]
    idx: list[int] = []
    for v in range(g.num_nodes):
        hop = {v}
        for j in g.neighbors[v]:
            hop.add(j)
            hop.update(g.neighbors[j])
        idx.extend(sorted(hop))
        ptr.append(len(idx))
    return np.asarray(ptr, dtype=np.int32), np.asarray(idx, dtype=np.int32)


def total_event_rate(g: Graph, p: ModelParams, s: EpidemicState) -> float:
    total = 0.0
    for i in range(g.num_nodes):
        total += p.delta[i] if s.x[i] else infection_rate(g, p, s, i)
    return float(total)


def step(g: Graph, p: ModelParams, s: EpidemicState, rng: np.random.Generator):
    """Fire one event of the chain, updating ``s`` in place.

    Returns ``(waiting_time, node, kind)`` with kind ``"infect"`` or
    ``"recover"``. Raises :class:`Extinction` when the total rate is zero.
    """
    rates = np.array([p.delta[i] if s.x[i] else infection_rate(g, p, s, i)
                      for i in range(g.num_nodes)])
    total = rates.sum()
    if total <= 0:
        raise Extinction("total event rate is zero")
    wait = rng.exponential(1.0 / total)
    node = int(rng.choice(g.num_nodes, p=rates / total))
    if s.x[node]:
        s.recover(node)
        return wait, node, "recover"
    s.infect(node)
    return wait, node, "infect"


class _Runner:
    """Holds per-graph arrays shared by many runs."""

    def __init__(self, g: Graph, p: ModelParams, backend: str | None = None):
        p.check_graph(g)
        name = backend or BACKEND
        if name not in BACKENDS:
            raise ValidationError(f"backend {name!r} unavailable (have {sorted(BACKENDS)})")
        self.core = BACKENDS[name]
        self.g = g
        self.indptr, self.indices = g.csr
        self.hop_ptr, self.hop_idx = two_hop_lists(g)
        self.delta = np.ascontiguousarray(p.delta, dtype=float)
        self.beta = np.ascontiguousarray(p.beta, dtype=float)
        self.gamma = np.ascontiguousarray(p.gamma, dtype=float)

    def run(self, c: SimConfig) -> SimResult:
        n = self.g.num_nodes
        seed = c.seed if isinstance(c.seed, np.random.SeedSequence) else np.random.SeedSequence(c.seed)
        rng = np.random.Generator(np.random.PCG64(seed))
        if c.initial_infected is None:
            initial = [int(rng.integers(n))]
        else:
            initial = sorted({int(i) for i in c.initial_infected})

        x = np.zeros(n, dtype=np.uint8)
        x[initial] = 1
        m = np.zeros(n, dtype=np.int32)
        rates = np.zeros(n, dtype=float)
        self.core.init_rates(self.indptr, self.indices, self.delta, self.beta, self.gamma, x, m, rates)

        sample_times = np.asarray(c.sample_times if c.sample_times is not None else [], dtype=float)
        sample_states = np.zeros((sample_times.size, n), dtype=np.uint8)
        clock = np.array([0.0, 0.0])
        counters = np.array([len(initial), 0, 0, 0, 0, 0], dtype=np.int64)
        cap = _LOG_BLOCK if c.record_events else 0
        log_t = np.zeros(cap)
        log_node = np.zeros(cap, dtype=np.int32)
        log_kind = np.zeros(cap, dtype=np.int8)
        events: list[tuple[float, int, str]] | None = [] if c.record_events else None

        block = _FIRST_BLOCK
        uniforms = rng.random(block)
        while True:
            status = self.core.advance(
                self.indptr, self.indices, self.hop_ptr, self.hop_idx,
                self.delta, self.beta, self.gamma, x, m, rates, clock, counters, uniforms,
                log_t, log_node, log_kind, c.record_events, sample_times, sample_states,
                float(c.horizon), float(c.burn_in), bool(c.reinfect))
            if c.record_events:
                k = int(counters[2])
                events.extend(zip(log_t[:k].tolist(), log_node[:k].tolist(),
                                  (EVENT_NAMES[e] for e in log_kind[:k].tolist())))
                counters[2] = 0
            if status == _simcore_py.DONE:
                break
            if status == _simcore_py.NEED_UNIFORMS:
                block = min(2 * block, _MAX_BLOCK)
                uniforms = rng.random(block)
                counters[1] = 0

        span = c.horizon - c.burn_in
        return SimResult(
            horizon=float(c.horizon),
            time_average=float(clock[1]) / span,
            reinfection_count=int(counters[4]),
            event_count=int(counters[5]),
            initial_infected=initial,
            final_state=x,
            samples=sample_states.sum(axis=1, dtype=np.int64),
            sample_states=sample_states,
            event_log=events,
        )


def run(g: Graph, p: ModelParams, c: SimConfig, backend: str | None = None) -> SimResult:
    """Simulate one trajectory on ``[0, c.horizon]``.

    With ``c.reinfect`` set, a uniformly random node is infected at the very
    instant the last infected node recovers. ``time_average`` is the exact
    integral of the infected count over ``[burn_in, horizon]`` divided by
    its length.
    """
    c.validate(g.num_nodes)
    return _Runner(g, p, backend).run(c)


def time_average_from_log(initial_count: int, events, horizon: float) -> float:
    """Recompute the time-averaged infected count from an event log."""
    area = 0.0
    count = initial_count
    last = 0.0
    for t, _, kind in events:
        area += count * (t - last)
        last = t
        count += -1 if kind == "recover" else 1
    area += count * (horizon - last)
    return area / horizon


def write_event_log(result: SimResult, g: Graph, fh: TextIO) -> None:
    fh.write("time,node_label,event\n")
    for t, node, kind in result.event_log or ():
        fh.write(f"{t!r},{g.node_labels[node]},{kind}\n")


def _run_batch(args):
    g, p, configs, backend = args
    runner = _Runner(g, p, backend)
    return [runner.run(c) for c in configs]


def run_many(g: Graph, p: ModelParams, configs: Sequence[SimConfig],
             workers: int = 1, backend: str | None = None) -> list[SimResult]:
    """Run independent configurations, in input order.

    ``workers > 1`` spreads contiguous chunks over processes; the results
    are identical either way.
    """
    for c in configs:
        c.validate(g.num_nodes)
    if workers <= 1 or len(configs) < 2:
        return _run_batch((g, p, list(configs), backend))
    chunks = np.array_split(np.arange(len(configs)), min(workers, len(configs)))
    jobs = [(g, p, [configs[i] for i in ch], backend) for ch in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_batch, jobs))
    return [r for part in parts for r in part]


@dataclass
class ProbabilityEstimate:
    times: np.ndarray
    mean: np.ndarray     # (len(times), N)
    stderr: np.ndarray   # (len(times), N)
    runs: int


def estimate_infection_probabilities(g: Graph, p: ModelParams, c: SimConfig, runs: int,
                                     workers: int = 1,
                                     backend: str | None = None) -> ProbabilityEstimate:
    """Monte-Carlo estimate of ``P(x_i(t) = 1)`` with binomial standard errors.

    Run ``r`` is seeded with the ``r``-th child of ``c.seed``.
    """
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    if not c.sample_times:
        raise ValidationError("sample_times must be nonempty")
    if c.reinfect:
        raise ValidationError("probability estimates need reinfect=False")
    seed = c.seed if isinstance(c.seed, np.random.SeedSequence) else np.random.SeedSequence(c.seed)
    configs = [replace(c, seed=s, record_events=False) for s in seed.spawn(runs)]
    results = run_many(g, p, configs, workers=workers, backend=backend)
    counts = np.zeros((len(c.sample_times), g.num_nodes), dtype=np.int64)
    for r in results:
        counts += r.sample_states
    mean = counts / runs
    stderr = np.sqrt(mean * (1.0 - mean) / runs)
    return ProbabilityEstimate(np.asarray(c.sample_times, dtype=float), mean, stderr, runs)

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synsis import sim
from synsis.errors import ValidationError
from synsis.exact import build_exact, integrate_master_equation
from synsis.graph import Graph
from synsis.model import EpidemicState, ModelParams, homogeneous
from synsis.sim import (Extinction, SimConfig, estimate_infection_probabilities, run, run_many,
                        step, time_average_from_log, total_event_rate, write_event_log)

from conftest import complete, graphs_with_params, path3, random_graph

backends = pytest.mark.parametrize("backend", sorted(sim.BACKENDS))


def test_total_rate_examples():
    beta, delta, gamma = 0.3, 1.1, 0.17
    p = homogeneous(3, beta, delta, gamma)
    assert total_event_rate(path3(), p, EpidemicState(3, [1])) == pytest.approx(delta + 2 * beta)
    assert total_event_rate(path3(), p, EpidemicState(3, [0, 1])) == pytest.approx(
        2 * delta + beta + gamma)


def test_step_signals_extinction():
    with pytest.raises(Extinction):
        step(path3(), homogeneous(3, 1, 1, 1), EpidemicState(3), np.random.default_rng(0))


def test_step_event_frequencies():
    # infected {1} on the path: recover w.p. delta/R, infect 0 or 2 w.p. beta/R each
    p = homogeneous(3, 0.5, 1.0, 0.0)
    rng = np.random.default_rng(7)
    counts = {"recover": 0, "infect": 0}
    waits = []
    n = 4000
    for _ in range(n):
        s = EpidemicState(3, [1])
        w, node, kind = step(path3(), p, s, rng)
        counts[kind] += 1
        waits.append(w)
        assert (kind == "recover") == (node == 1)
        assert s.infected_count == (0 if kind == "recover" else 2)
    assert abs(counts["recover"] / n - 0.5) < 4 * math.sqrt(0.25 / n)
    assert abs(np.mean(waits) - 0.5) < 4 * 0.5 / math.sqrt(n)


@backends
def test_single_node_pure_death(backend):
    g = Graph.from_edges(1, [])
    p = homogeneous(1, 3.0, 1.0, 0.0)
    r = run(g, p, SimConfig(horizon=50, seed=3, reinfect=False, initial_infected=[0],
                            record_events=True), backend=backend)
    (t, node, kind), = r.event_log
    assert (node, kind) == (0, "recover")
    assert r.time_average == pytest.approx(t / 50)
    assert r.final_state.tolist() == [0]


@backends
def test_reinfection_keeps_someone_infected(backend, karate):
    p = homogeneous(34, 0.02, 3.0, 0.01)
    r = run(karate, p, SimConfig(horizon=200, seed=11, record_events=True), backend=backend)
    count = len(r.initial_infected)
    for t, node, kind in r.event_log:
        count += -1 if kind == "recover" else 1
        if kind == "reinfect":
            assert count == 1
    reinfect_times = {t for t, _, k in r.event_log if k == "reinfect"}
    recover_times = {t for t, _, k in r.event_log if k == "recover"}
    # each re-infection happens at the very instant of a recovery
    assert reinfect_times <= recover_times
    assert r.reinfection_count == len(reinfect_times) > 0
    assert r.time_average >= 1.0


@backends
def test_time_average_recomputed_from_log(backend, karate):
    p = homogeneous(34, 0.05, 0.5, 0.01)
    r = run(karate, p, SimConfig(horizon=300, seed=5, record_events=True), backend=backend)
    again = time_average_from_log(len(r.initial_infected), r.event_log, r.horizon)
    assert abs(again - r.time_average) <= 1e-10 * r.time_average
    assert r.metastable == r.time_average - 1.0


def test_deterministic(karate):
    p = homogeneous(34, 0.05, 0.5, 0.01)
    c = SimConfig(horizon=500, seed=42, record_events=True)
    a, b = run(karate, p, c), run(karate, p, c)
    assert a.time_average == b.time_average and a.event_log == b.event_log


@pytest.mark.skipif(len(sim.BACKENDS) < 2, reason="compiled core not built")
def test_backends_bit_identical(karate):
    p = homogeneous(34, 0.03, 0.3, 0.01)
    c = SimConfig(horizon=400, seed=9, record_events=True, sample_times=[1, 10, 100, 399])
    a = run(karate, p, c, backend="cython")
    b = run(karate, p, c, backend="python")
    assert a.time_average == b.time_average
    assert a.event_log == b.event_log
    assert np.array_equal(a.sample_states, b.sample_states)


def test_unknown_backend(karate):
    with pytest.raises(ValidationError):
        run(karate, homogeneous(34, 1, 1, 0), SimConfig(horizon=1), backend="fortran")


def test_parallel_matches_serial(karate):
    p = homogeneous(34, 0.05, 0.5, 0.01)
    cs = [SimConfig(horizon=100, seed=s) for s in range(5)]
    serial = [r.time_average for r in run_many(karate, p, cs, workers=1)]
    para = [r.time_average for r in run_many(karate, p, cs, workers=2)]
    assert serial == para


@pytest.mark.parametrize("kw", [dict(horizon=0), dict(horizon=math.inf), dict(burn_in=5, horizon=5),
                                dict(initial_infected=[7]), dict(sample_times=[2, 1]),
                                dict(sample_times=[0, 20], horizon=10)])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        SimConfig(**kw).validate(3)


def test_burn_in_window():
    g = Graph.from_edges(1, [])
    p = homogeneous(1, 0, 0, 0)  # nothing ever happens
    r = run(g, p, SimConfig(horizon=10, burn_in=4, initial_infected=[0]))
    assert r.time_average == 1.0


def test_samples_at_time_zero_are_exact():
    g = complete(3)
    est = estimate_infection_probabilities(
        g, homogeneous(3, 0.8, 1, 0.3),
        SimConfig(horizon=1, seed=0, reinfect=False, initial_infected=[0], sample_times=[0.0]), 50)
    assert est.mean[0].tolist() == [1.0, 0.0, 0.0]
    assert est.stderr[0].tolist() == [0.0, 0.0, 0.0]


def test_independent_pure_death():
    g = complete(4)
    times = [0.3, 1.0, 2.0]
    est = estimate_infection_probabilities(
        g, homogeneous(4, 0, 1, 0),
        SimConfig(horizon=3, seed=1, reinfect=False, initial_infected=range(4), sample_times=times),
        2000)
    expected = np.exp(-np.array(times))[:, None]
    assert np.all(np.abs(est.mean - expected) <= 3 * est.stderr)


def test_probability_estimate_validation():
    g, p = complete(3), homogeneous(3, 1, 1, 0)
    with pytest.raises(ValidationError):
        estimate_infection_probabilities(g, p, SimConfig(sample_times=[1], reinfect=True), 5)
    with pytest.raises(ValidationError):
        estimate_infection_probabilities(g, p, SimConfig(reinfect=False), 5)
    with pytest.raises(ValidationError):
        estimate_infection_probabilities(g, p, SimConfig(sample_times=[1], reinfect=False), 0)


def test_matches_master_equation_on_path():
    g = path3()
    p = ModelParams([1.0, 0.6, 1.3], [0.9, 0.4, 1.2], [0.5, 0.8, 0.2])
    times = [0.4, 1.5]
    est = estimate_infection_probabilities(
        g, p, SimConfig(horizon=2, seed=3, reinfect=False, initial_infected=[1], sample_times=times),
        4000)
    dist = integrate_master_equation(build_exact(g, p), 0b010, times)
    bits = (np.arange(8)[:, None] >> np.arange(3)) & 1
    assert np.all(np.abs(est.mean - dist @ bits) <= 3.5 * est.stderr + 1e-12)


def _plain_sis_count(g, beta, delta, initial, t_obs, rng):
    """Independent plain-SIS simulator: per-node clocks recomputed from scratch."""
    x = np.zeros(g.num_nodes, dtype=bool)
    x[list(initial)] = True
    a = g.adjacency().toarray()
    t = 0.0
    while True:
        rates = np.where(x, delta, beta * (a @ x))
        total = rates.sum()
        if total == 0:
            return int(x.sum())
        t += rng.exponential(1 / total)
        if t > t_obs:
            return int(x.sum())
        i = rng.choice(g.num_nodes, p=rates / total)
        x[i] = not x[i]


def test_zero_synergy_matches_independent_sis():
    rng = np.random.default_rng(2)
    g = random_graph(rng, 6, 0.6)
    beta, delta, t_obs, n = 0.9, 1.0, 1.5, 3000
    ref = np.array([_plain_sis_count(g, beta, delta, [0], t_obs, rng) for _ in range(n)])
    est = estimate_infection_probabilities(
        g, homogeneous(6, beta, delta, 0.0),
        SimConfig(horizon=t_obs, seed=8, reinfect=False, initial_infected=[0],
                  sample_times=[t_obs]), n)
    ours = est.mean[0].sum()
    # two-sample comparison of the mean infected count; under the null both
    # samples share the reference variance
    se = math.sqrt(2 * ref.var() / n)
    assert abs(ours - ref.mean()) < 4 * se


def test_event_log_csv(karate):
    p = homogeneous(34, 0.02, 3, 0.01)
    r = run(karate, p, SimConfig(horizon=5, seed=1, record_events=True))
    buf = io.StringIO()
    write_event_log(r, karate, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "time,node_label,event"
    assert len(lines) == 1 + len(r.event_log)
    t, label, kind = lines[1].split(",")
    assert float(t) == r.event_log[0][0]
    assert label == karate.node_labels[r.event_log[0][1]]
    assert kind in ("infect", "recover", "reinfect")


@pytest.mark.parametrize("delta, extinct", [(3.0, True), (0.1, False)])
def test_karate_regimes(karate, delta, extinct):
    r = run(karate, homogeneous(34, 0.02, delta, 0.01), SimConfig(horizon=1e4, seed=2024))
    assert r.extinct is extinct


@settings(max_examples=25, deadline=None)
@given(graphs_with_params(max_nodes=6), st.integers(0, 2**32 - 1))
def test_invariants_random(gp, seed):
    g, p = gp
    r = run(g, p, SimConfig(horizon=20, seed=seed, record_events=True))
    assert r.time_average >= 0
    count = len(r.initial_infected)
    prev = 0.0
    for t, node, kind in r.event_log:
        assert prev <= t <= 20
        prev = t
        count += -1 if kind == "recover" else 1
        assert count >= 0
    assert count == int(r.final_state.sum())
    assert abs(time_average_from_log(len(r.initial_infected), r.event_log, 20)
               - r.time_average) <= 1e-10 * max(r.time_average, 1)

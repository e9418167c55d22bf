from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodnet.errors import ConfigurationError
from prodnet.evolve import (
    EvolutionConfig,
    _State,
    empirical_degree_distribution,
    evolve,
    evolve_step,
)
from prodnet.netcore import Graph, generate_basic


def cfg(**kw):
    base = dict(initial=generate_basic("cycle", 5), steps=200, n_over_m=Fraction(1, 2), seed=7)
    base.update(kw)
    return EvolutionConfig(**base)


def test_same_seed_same_trajectory():
    a, b = evolve(cfg()), evolve(cfg())
    assert a.events == b.events
    assert a.final_graph == b.final_graph
    assert a.snapshots == b.snapshots


def test_different_seed_differs():
    assert evolve(cfg(seed=1)).events != evolve(cfg(seed=2)).events


def test_pure_growth_counts():
    traj = evolve(cfg(n_over_m=0, steps=300))
    g = traj.final_graph
    assert g.n == 305
    assert len(g.edges) == 305
    assert all(e.action == "add" for e in traj.events)


def test_multi_edge_entrants_pick_distinct_targets():
    traj = evolve(cfg(n_over_m=0, edges_per_new_node=3, steps=100))
    for e in traj.events:
        assert len(e.targets) == len(set(e.targets)) == 3
    assert len(traj.final_graph.edges) == 5 + 300


def test_node_count_matches_event_log():
    traj = evolve(cfg(steps=500))
    deletes = sum(e.action == "delete" for e in traj.events)
    assert traj.final_graph.n == 5 + 500 - deletes
    assert traj.snapshots[-1].n_nodes == traj.final_graph.n


def test_new_node_ids_and_no_same_step_removal():
    traj = evolve(cfg(steps=300))
    added = {e.t: e.node_id for e in traj.events if e.action == "add"}
    assert added == {t: 5 + t for t in range(1, 301)}
    for e in traj.events:
        if e.action == "delete":
            assert e.node_id != added[e.t]


def test_snapshots_and_conservation():
    traj = evolve(cfg(steps=120, record_every=25))
    assert [s.t for s in traj.snapshots] == [0, 25, 50, 75, 100, 120]
    for s in traj.snapshots:
        assert sum(s.histogram.values()) == s.n_nodes
        assert sum(k * c for k, c in s.histogram.items()) == s.degree_mass
        assert s.attachment_denominator == pytest.approx(0.5 * s.t)
    final = traj.final_graph
    assert traj.snapshots[-1].degree_mass == 2 * len(final.edges)


def test_chained_steps_match_full_run():
    c = cfg(steps=60)
    full = evolve(c)
    rng = np.random.default_rng(c.seed)
    g = c.initial
    events = []
    for t in range(1, c.steps + 1):
        g, ev = evolve_step(g, t, c, rng, new_id=5 + t)
        events.extend(ev)
    assert events == full.events
    assert set(g.nodes) == set(full.final_graph.nodes)
    assert {frozenset(e[:2]) for e in g.edges} == {frozenset(e[:2]) for e in full.final_graph.edges}


def test_evolve_step_default_id():
    g, events = evolve_step(generate_basic("path", 3), 1, cfg(n_over_m=0), np.random.default_rng(0))
    assert events[0].node_id == 4
    assert g.n == 4


def test_empirical_distribution_is_pmf():
    traj = evolve(cfg(steps=100))
    pmf = empirical_degree_distribution(traj, window=10)
    assert sum(pmf.values()) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        empirical_degree_distribution(traj, window=0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(steps=0),
        dict(n_over_m=1),
        dict(n_over_m=-0.1),
        dict(edges_per_new_node=0),
        dict(record_every=0),
        dict(initial=generate_basic("path", 3, directed=True)),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        cfg(**kw)


def test_attachment_is_preferential():
    # star(5): center holds half the degree mass
    g = generate_basic("star", 5)
    hits = Counter()
    rng = np.random.default_rng(11)
    for _ in range(6000):
        state = _State(g, capacity=1)
        state.add_node(99)
        hits[state.attach_targets(1, 99, rng)[0]] += 1
    assert hits[1] / 6000 == pytest.approx(0.5, abs=0.025)


def test_deletion_is_inverse_degree():
    g = generate_basic("star", 5)
    state = _State(g, capacity=0)
    rng = np.random.default_rng(12)
    draws = Counter(state.deletion_target(None, rng) for _ in range(20000))
    # weights 1/4 for the center and 1 per leaf
    assert draws[1] / 20000 == pytest.approx(1 / 17, abs=0.006)
    assert set(draws) <= set(g.nodes)


def test_deletion_skips_isolated_nodes():
    g = Graph([1, 2, 3], [(1, 2, 1.0)])
    state = _State(g, capacity=0)
    rng = np.random.default_rng(0)
    assert {state.deletion_target(None, rng) for _ in range(200)} == {1, 2}


def test_expected_size_under_deletion():
    c = cfg(steps=400)
    sizes = [evolve(c, np.random.default_rng(s)).final_graph.n for s in range(40)]
    assert np.mean(sizes) == pytest.approx(5 + 200, rel=0.05)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["cycle", "star", "path", "complete"]), st.integers(3, 7))
def test_random_runs_keep_graph_consistent(seed, kind, n):
    traj = evolve(cfg(initial=generate_basic(kind, n), steps=80, seed=seed))
    g = traj.final_graph
    deg = g.degree_array
    assert deg.sum() == 2 * len(g.edges)
    assert traj.snapshots[-1].histogram == dict(sorted(Counter(deg.tolist()).items()))

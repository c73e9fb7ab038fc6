import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windpass.estimator import init_costs
from windpass.grid import build_grid
from windpass.planner import (
    dijkstra,
    enumerate_min_cost,
    oracle_plan,
    path_cost,
    plan,
    simple_paths,
    true_costs,
)
from windpass.windfield import WindField, constant_signal, generate_signal, synthesize_field


def test_uniform_init_costs_five_by_five():
    g = build_grid(5, 7, 100, 250)
    costs = init_costs(g, 15.0, 10.0)
    p = plan(g, costs, rng=np.random.default_rng(0))
    assert p.expected_cost == pytest.approx(4 * 4.0 + 4 * 10.0)
    best, paths = enumerate_min_cost(g, costs)
    assert best == pytest.approx(p.expected_cost)
    assert len(paths) == 70  # C(8, 4) monotone staircases


def test_lattice_as_given_uniform_cost():
    # The 5x5 lattice with one boundary row on each side: 4 across, 2 up.
    g = build_grid(5, 5, 100, 250)
    p = plan(g, init_costs(g, 15.0, 10.0))
    assert p.expected_cost == pytest.approx(4 * 4.0 + 2 * 10.0)


def test_single_path_graph():
    g = build_grid(3, 3, 1, 1)
    costs = {e: 1.0 for e in g.traversable_edges}
    for seed in range(5):
        assert plan(g, costs, rng=np.random.default_rng(seed)).vertices == (4, 5, 6)


def test_tie_break_covers_all_optimal_paths():
    g = build_grid(3, 4, 1, 1)
    costs = {e: 1.0 for e in g.traversable_edges}
    _, optimal = enumerate_min_cost(g, costs)
    seen = {plan(g, costs, rng=np.random.default_rng(s)).vertices for s in range(200)}
    assert seen == set(optimal)


def test_tie_break_value_invariant():
    g = build_grid(5, 7, 100, 250)
    costs = init_costs(g, 15.0, 10.0)
    values = {plan(g, costs, rng=np.random.default_rng(s)).expected_cost for s in range(100)}
    assert max(values) - min(values) < 1e-9


def test_deterministic_without_rng():
    g = build_grid(4, 5, 1, 1)
    costs = {e: 1.0 for e in g.traversable_edges}
    assert dijkstra(g, costs, g.start, g.goal) == dijkstra(g, costs, g.start, g.goal)


def test_rejects_bad_inputs():
    g = build_grid(3, 4, 1, 1)
    costs = {e: 1.0 for e in g.traversable_edges}
    with pytest.raises(ValueError):
        plan(g, costs, start=4, goal=4)
    bad = dict(costs)
    bad[(4, 5)] = 0.0
    with pytest.raises(ValueError):
        plan(g, bad)
    bad[(4, 5)] = float("inf")
    with pytest.raises(ValueError):
        plan(g, bad)
    with pytest.raises(ValueError, match="disconnected"):
        plan(g, costs, start=4, goal=1)


def test_simple_paths_are_simple():
    g = build_grid(3, 5, 1, 1)
    paths = list(simple_paths(g, g.start, g.goal))
    assert len(paths) == len(set(paths))
    for p in paths:
        assert len(set(p)) == len(p)
        assert all(g.has_edge(a, b) for a, b in zip(p[:-1], p[1:]))


def cost_tables():
    @st.composite
    def build(draw):
        n1 = draw(st.integers(3, 5))
        n2 = draw(st.integers(3, 7))
        if n1 * (n2 - 2) > 25:
            n2 = 25 // n1 + 2
        g = build_grid(n1, n2, 1, 1)
        values = draw(st.lists(st.floats(0.1, 10.0), min_size=len(g.traversable_edges), max_size=len(g.traversable_edges)))
        return g, dict(zip(g.traversable_edges, values))

    return build()


@settings(max_examples=60, deadline=None)
@given(cost_tables(), st.integers(0, 1000))
def test_matches_enumeration(table, seed):
    g, costs = table
    p = plan(g, costs, rng=np.random.default_rng(seed))
    best, optimal = enumerate_min_cost(g, costs)
    assert p.expected_cost == pytest.approx(best, abs=1e-9)
    assert p.expected_cost == pytest.approx(path_cost(p.vertices, costs), abs=1e-9)
    assert len(set(p.vertices)) == len(p.vertices)


@settings(max_examples=30, deadline=None)
@given(cost_tables(), st.floats(0.01, 100.0))
def test_scaling_keeps_optimal_set(table, lam):
    g, costs = table
    _, before = enumerate_min_cost(g, costs)
    scaled = {e: lam * c for e, c in costs.items()}
    p = plan(g, scaled)
    assert p.vertices in before


def test_zero_wind_oracle():
    g = build_grid(5, 7, 100, 250)
    f = WindField(g, {e: 1.0 for e in g.edges}, {e: 0.0 for e in g.edges}, constant_signal(1.0), 10.0)
    p = oracle_plan(g, f, 15.0)
    assert p.expected_cost == pytest.approx(4 * 100 / 15 + 4 * 250 / 15)


def test_oracle_beats_every_simple_path():
    rng = np.random.default_rng(21)
    g = build_grid(5, 7, 100, 250)
    f = synthesize_field(g, generate_signal(6, (300, 500), 0.0, rng), 10.0, rng)
    p = oracle_plan(g, f, 15.0)
    costs = true_costs(f, 15.0)
    values = [path_cost(q, costs) for q in simple_paths(g, g.start, g.goal)]
    assert min(values) == pytest.approx(p.expected_cost, abs=1e-9)
    assert all(v >= p.expected_cost - 1e-9 for v in values)
    for e, c in costs.items():
        assert c == pytest.approx(g.distance(*e) / (15.0 + f.coeff[e] * 0.5))


def test_oracle_uses_fast_column():
    g = build_grid(4, 6, 100, 250)
    coeff = {e: 0.0 for e in g.edges}
    # Strong updraft in the rightmost column only.
    for r in range(g.n2 - 1):
        lo, hi = g.label(3, r), g.label(3, r + 1)
        coeff[(lo, hi)], coeff[(hi, lo)] = 9.0, -9.0
    f = WindField(g, {e: 1.0 for e in g.edges}, coeff, constant_signal(1.0), 10.0)
    p = oracle_plan(g, f, 15.0)
    # Go right along the bottom interior row, then climb the fast column.
    assert p.vertices == (5, 6, 7, 8, 12, 16, 20)
    best, _ = enumerate_min_cost(g, true_costs(f, 15.0))
    assert best == pytest.approx(p.expected_cost)


def test_true_costs_levels():
    rng = np.random.default_rng(2)
    g = build_grid(4, 5, 100, 250)
    f = synthesize_field(g, generate_signal(3, (300, 500), 0.0, rng), 10.0, rng)
    mean = true_costs(f, 15.0, "mean")
    peak = true_costs(f, 15.0, "peak")
    e = max(g.traversable_edges, key=lambda k: f.coeff[k])
    assert peak[e] < mean[e]
    with pytest.raises(ValueError):
        true_costs(f, 15.0, "median")


def test_path_edges_property():
    g = build_grid(3, 4, 1, 1)
    p = plan(g, {e: 1.0 for e in g.traversable_edges})
    assert p.edges == list(zip(p.vertices[:-1], p.vertices[1:]))
    assert list(itertools.chain.from_iterable(p.edges))[0] == g.start

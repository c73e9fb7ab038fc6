import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windpass.grid import build_grid
from windpass.planner import dijkstra


def brute_force_adjacency(n1, n2):
    pts = [(c, r) for r in range(n2) for c in range(n1)]
    label = {p: r * n1 + c + 1 for p in pts for c, r in [p]}
    out = set()
    for a, b in itertools.product(pts, repeat=2):
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1:
            out.add((label[a], label[b]))
    return out


def test_table_layout_start_goal():
    g = build_grid(5, 7, 100, 250)
    assert g.start == 6
    assert g.goal == 30
    # rows 1-5 and 31-35 are the boundary rows
    for v in list(range(1, 6)) + list(range(31, 36)):
        assert not g.is_traversable(v)
        assert g.neighbors(v) == ()
    for v in range(6, 31):
        assert g.is_traversable(v)


def test_lattice_as_given_five_by_five():
    g = build_grid(5, 5, 100, 250)
    assert g.start == 6
    assert g.goal == 20
    vertical = [e for e in g.edges if g.is_vertical(*e)]
    horizontal_inside = [e for e in g.traversable_edges if not g.is_vertical(*e)]
    assert len(vertical) == 2 * 5 * (5 - 1) == 40
    assert len(horizontal_inside) == 2 * (5 - 1) * (5 - 2) == 24


def test_smallest_grid():
    g = build_grid(3, 3, 1, 1)
    assert len(g.vertices) == 9
    inside = [v for v in g.vertices if g.is_traversable(v)]
    assert inside == [4, 5, 6]
    assert sorted(g.traversable_edges) == [(4, 5), (5, 4), (5, 6), (6, 5)]
    # vertical edges remain for the wind network
    assert sum(g.is_vertical(*e) for e in g.edges) == 2 * 3 * 2


def test_edges_match_brute_force():
    g = build_grid(4, 6, 1, 2)
    assert set(g.edges) == brute_force_adjacency(4, 6)


def test_distances():
    g = build_grid(5, 7, 100, 250)
    assert g.distance(6, 7) == 100
    assert g.distance(6, 11) == 250
    assert g.distance(11, 6) == 250
    with pytest.raises(KeyError):
        g.distance(6, 12)


@pytest.mark.parametrize("n1,n2", [(2, 5), (5, 2), (0, 0)])
def test_rejects_small(n1, n2):
    with pytest.raises(ValueError, match="too small"):
        build_grid(n1, n2, 1, 1)


@pytest.mark.parametrize("dx1,dx2", [(0, 1), (1, -2)])
def test_rejects_nonpositive_lengths(dx1, dx2):
    with pytest.raises(ValueError):
        build_grid(4, 4, dx1, dx2)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 9), st.integers(3, 9), st.floats(1, 500), st.floats(1, 500))
def test_structure_properties(n1, n2, dx1, dx2):
    g = build_grid(n1, n2, dx1, dx2)
    edges = set(g.edges)
    for i, j in edges:
        assert (j, i) in edges
        assert g.distance(i, j) == g.distance(j, i) > 0
        assert g.distance(i, j) == (dx2 if g.is_vertical(i, j) else dx1)
    for v in g.vertices:
        assert len(g.neighbors(v)) <= 4
    for i, j in g.traversable_edges:
        assert g.is_traversable(i) and g.is_traversable(j)
    assert g.coords(g.start) == (0, 1)
    assert g.coords(g.goal) == (n1 - 1, n2 - 2)
    uniform = {e: 1.0 for e in g.traversable_edges}
    path = dijkstra(g, uniform, g.start, g.goal)
    assert path.vertices[0] == g.start and path.vertices[-1] == g.goal
    assert path.expected_cost == (n1 - 1) + (n2 - 3)

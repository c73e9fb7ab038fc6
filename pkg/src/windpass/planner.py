"""Dijkstra over the current edge-cost table, plus a ground-truth oracle planner."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from windpass.grid import Edge, GridGraph
from windpass.windfield import WindField

TIE_TOL = 1e-9
ENUMERATION_LIMIT = 25


@dataclass(frozen=True)
class PlannedPath:
    vertices: tuple[int, ...]
    expected_cost: float

    @property
    def edges(self) -> list[Edge]:
        return list(zip(self.vertices[:-1], self.vertices[1:]))


def path_cost(path, costs: Mapping[Edge, float]) -> float:
    total = 0.0
    for e in zip(path[:-1], path[1:]):
        total += costs[e]
    return total


def _check_costs(graph: GridGraph, costs: Mapping[Edge, float]) -> None:
    for e in graph.traversable_edges:
        c = costs[e]
        if not (c > 0 and math.isfinite(c)):
            raise ValueError(f"edge {e} has nonpositive or non-finite cost {c}")


def dijkstra(
    graph: GridGraph,
    costs: Mapping[Edge, float],
    start: int,
    goal: int,
    rng: np.random.Generator | None = None,
) -> PlannedPath:
    """Dijkstra whose fringe pop picks uniformly among labels tied within ``TIE_TOL``.

    Without ``rng`` the lowest vertex label wins ties.
    """
    if start == goal:
        raise ValueError("start and goal coincide")
    _check_costs(graph, costs)
    dist = {start: 0.0}
    pred: dict[int, int] = {}
    fringe = {start}
    closed: set[int] = set()
    while fringe:
        best = min(dist[v] for v in fringe)
        tied = sorted(v for v in fringe if dist[v] <= best + TIE_TOL)
        u = tied[int(rng.integers(len(tied)))] if rng is not None and len(tied) > 1 else tied[0]
        fringe.discard(u)
        closed.add(u)
        if u == goal:
            break
        for v in graph.neighbors(u):
            if v in closed:
                continue
            alt = dist[u] + costs[(u, v)]
            if v not in dist or alt < dist[v] - TIE_TOL:
                dist[v] = alt
                pred[v] = u
                fringe.add(v)
    if goal not in closed:
        raise ValueError("disconnected: goal unreachable from start")
    path = [goal]
    while path[-1] != start:
        path.append(pred[path[-1]])
    path.reverse()
    return PlannedPath(tuple(path), path_cost(path, costs))


def plan(
    graph: GridGraph,
    costs: Mapping[Edge, float],
    start: int | None = None,
    goal: int | None = None,
    rng: np.random.Generator | None = None,
) -> PlannedPath:
    start = graph.start if start is None else start
    goal = graph.goal if goal is None else goal
    return dijkstra(graph, costs, start, goal, rng)


def simple_paths(graph: GridGraph, start: int, goal: int) -> Iterator[tuple[int, ...]]:
    """Every simple start->goal path through traversable vertices (depth-first)."""
    stack = [(start, (start,), frozenset((start,)))]
    while stack:
        v, path, seen = stack.pop()
        if v == goal:
            yield path
            continue
        for u in graph.neighbors(v):
            if u not in seen:
                stack.append((u, path + (u,), seen | {u}))


def enumerate_min_cost(graph: GridGraph, costs: Mapping[Edge, float], start=None, goal=None):
    """Brute-force minimum over all simple paths; returns (cost, list of optimal paths)."""
    start = graph.start if start is None else start
    goal = graph.goal if goal is None else goal
    best = math.inf
    best_paths: list[tuple[int, ...]] = []
    for p in simple_paths(graph, start, goal):
        c = path_cost(p, costs)
        if c < best - TIE_TOL:
            best, best_paths = c, [p]
        elif c <= best + TIE_TOL:
            best_paths.append(p)
    return best, best_paths


def true_costs(field_: WindField, u0: float, gradient: str = "mean") -> dict[Edge, float]:
    """Static edge costs with the gradient held at its time average (``mean``) or maximum (``peak``)."""
    if gradient == "mean":
        level = field_.signal.mean()
    elif gradient == "peak":
        level = field_.signal.dense_max()
    else:
        raise ValueError(f"unknown gradient level {gradient!r}")
    g = field_.graph
    return {e: g.distance(*e) / (u0 + field_.coeff[e] * level) for e in g.traversable_edges}


def oracle_plan(
    graph: GridGraph, field_: WindField, u0: float, gradient: str = "mean", cross_check: bool = True
) -> PlannedPath:
    costs = true_costs(field_, u0, gradient)
    best = dijkstra(graph, costs, graph.start, graph.goal, rng=None)
    n_traversable = graph.n1 * (graph.n2 - 2)
    if cross_check and n_traversable <= ENUMERATION_LIMIT:
        brute, _ = enumerate_min_cost(graph, costs)
        if abs(brute - best.expected_cost) > TIE_TOL:
            raise AssertionError(f"Dijkstra {best.expected_cost} disagrees with enumeration {brute}")
    return best

"""Edge-cost table and the direct (static-wind) cost updates."""

from __future__ import annotations

from collections.abc import MutableMapping
from typing import Iterator

import numpy as np

from windpass.grid import Edge, GridGraph
from windpass.traversal import EdgeWindow


class CostTable(MutableMapping):
    """Estimated traversal time (seconds) of every traversable directed edge."""

    def __init__(self, costs: dict[Edge, float] | None = None):
        self._costs: dict[Edge, float] = dict(costs or {})

    def __getitem__(self, edge: Edge) -> float:
        return self._costs[edge]

    def __setitem__(self, edge: Edge, value: float) -> None:
        self._costs[edge] = float(value)

    def __delitem__(self, edge: Edge) -> None:
        del self._costs[edge]

    def __iter__(self) -> Iterator[Edge]:
        return iter(self._costs)

    def __len__(self) -> int:
        return len(self._costs)

    def copy(self) -> "CostTable":
        return CostTable(self._costs)

    def as_array(self) -> np.ndarray:
        return np.array([self._costs[e] for e in sorted(self._costs)])


def travel_time(distance: float, u0: float, wind: float) -> float:
    speed = u0 + wind
    if speed <= 0:
        raise ValueError(f"nonpositive ground speed {speed}")
    return distance / speed


def init_costs(graph: GridGraph, u0: float, w_max: float) -> CostTable:
    """Optimistic start: every edge assumed to have the strongest possible tailwind."""
    if u0 + w_max <= 0:
        raise ValueError("u0 + w_max must be positive")
    return CostTable({e: graph.distance(*e) / (u0 + w_max) for e in graph.traversable_edges})


def update_case1(table: CostTable, window: EdgeWindow, u0: float, distance: float) -> CostTable:
    if len(window.samples) == 0:
        raise ValueError("empty measurement window")
    table[window.edge] = travel_time(distance, u0, float(window.samples[-1]))
    return table


def update_case2(table: CostTable, window: EdgeWindow, u0: float, distance: float) -> CostTable:
    if len(window.samples) == 0:
        raise ValueError("empty measurement window")
    table[window.edge] = travel_time(distance, u0, float(np.mean(window.samples)))
    return table


def update_cost_case34(table: CostTable, edge: Edge, rhat: float, distance: float, u0: float) -> CostTable:
    table[edge] = travel_time(distance, u0, rhat)
    return table

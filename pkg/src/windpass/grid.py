"""Directed 4-neighbour grid graph of the urban road network.

Vertices are labelled ``1..n1*n2`` row-major from the bottom-left corner, so the
bottom boundary row holds labels ``1..n1``.  The bottom and top rows exist only
as boundary conditions for the wind model and are never part of a flight path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

Edge = tuple[int, int]


@dataclass(frozen=True)
class GridGraph:
    n1: int
    n2: int
    dx1: float
    dx2: float
    _edges: tuple[Edge, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        edges = []
        for v in range(1, self.n1 * self.n2 + 1):
            for u in self._lattice_neighbors(v):
                edges.append((v, u))
        object.__setattr__(self, "_edges", tuple(edges))

    # -- labelling -------------------------------------------------------
    def label(self, col: int, row: int) -> int:
        return row * self.n1 + col + 1

    def coords(self, v: int) -> tuple[int, int]:
        """(col, row) of vertex ``v``, both zero-based."""
        if not 1 <= v <= self.n1 * self.n2:
            raise KeyError(f"unknown vertex {v}")
        return (v - 1) % self.n1, (v - 1) // self.n1

    @property
    def vertices(self) -> range:
        return range(1, self.n1 * self.n2 + 1)

    @property
    def start(self) -> int:
        return self.label(0, 1)

    @property
    def goal(self) -> int:
        return self.label(self.n1 - 1, self.n2 - 2)

    # -- adjacency -------------------------------------------------------
    def _lattice_neighbors(self, v: int) -> list[int]:
        col, row = self.coords(v)
        out = []
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c, r = col + dc, row + dr
            if 0 <= c < self.n1 and 0 <= r < self.n2:
                out.append(self.label(c, r))
        return out

    def is_traversable(self, v: int) -> bool:
        return 1 <= self.coords(v)[1] <= self.n2 - 2

    @property
    def edges(self) -> tuple[Edge, ...]:
        """Every directed lattice edge, boundary rows included."""
        return self._edges

    @cached_property
    def traversable_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self._edges if self.is_traversable(e[0]) and self.is_traversable(e[1]))

    @cached_property
    def _adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices if self.is_traversable(v)}
        for i, j in self.traversable_edges:
            adj[i].append(j)
        return {v: tuple(nb) for v, nb in adj.items()}

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Traversable out-neighbours; empty for boundary vertices."""
        return self._adjacency.get(v, ())

    def has_edge(self, i: int, j: int) -> bool:
        if not (1 <= i <= self.n1 * self.n2 and 1 <= j <= self.n1 * self.n2):
            return False
        (ci, ri), (cj, rj) = self.coords(i), self.coords(j)
        return abs(ci - cj) + abs(ri - rj) == 1

    def is_vertical(self, i: int, j: int) -> bool:
        """True for x2-aligned edges."""
        return self.coords(i)[0] == self.coords(j)[0]

    def distance(self, i: int, j: int) -> float:
        if not self.has_edge(i, j):
            raise KeyError(f"({i}, {j}) is not an edge")
        return self.dx2 if self.is_vertical(i, j) else self.dx1


def build_grid(n1: int, n2: int, dx1: float, dx2: float) -> GridGraph:
    """Build an ``n1`` x ``n2`` grid (``n2`` counts the two boundary rows)."""
    if n1 < 3 or n2 < 3:
        raise ValueError("grid too small for boundary rows")
    if dx1 <= 0 or dx2 <= 0:
        raise ValueError("edge lengths must be positive")
    return GridGraph(int(n1), int(n2), float(dx1), float(dx2))

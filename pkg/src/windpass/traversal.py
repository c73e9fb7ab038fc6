"""Discrete-time simulation of a single pass along a planned path."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from windpass.grid import Edge
from windpass.windfield import WindField


@dataclass
class EdgeWindow:
    """Measurements collected while crossing one edge, steps ``n..m`` inclusive."""

    edge: Edge
    n: int
    m: int
    samples: np.ndarray
    exact_crossing_time: float

    def __len__(self) -> int:
        return self.m - self.n + 1

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.n, self.m + 1)


@dataclass
class PassRecord:
    pass_index: int
    path: tuple[int, ...]
    windows: list[EdgeWindow] = field(default_factory=list)
    expected_cost: float = float("nan")
    start_step: int = 0

    @property
    def incurred_cost(self) -> float:
        return float(sum(w.exact_crossing_time for w in self.windows))

    @property
    def end_step(self) -> int:
        return self.windows[-1].m if self.windows else self.start_step - 1

    @property
    def n_measurements(self) -> int:
        return sum(len(w) for w in self.windows)


def traverse_edge(
    field_: WindField,
    edge: Edge,
    entry_step: int,
    u0: float,
    dt: float,
    rng: np.random.Generator | None = None,
) -> EdgeWindow:
    """Fly ``edge`` from step ``entry_step`` until its length is covered.

    Ground speed at step ``k`` is ``u0 + w(t_k)`` held over the step.  The exit step
    is the one during which the distance is completed; the exact crossing time is
    interpolated inside that step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if u0 <= field_.w_max:
        raise ValueError("possible stall: headwind can cancel airspeed (need u0 > w_max)")
    d = field_.graph.distance(*edge)
    coeff = field_.coeff[edge]
    # Covered distance per step is at least (u0 - w_max) * dt.
    max_steps = int(math.ceil(d / ((u0 - field_.w_max) * dt))) + 2
    steps = np.arange(entry_step, entry_step + max_steps)
    ground = u0 + coeff * field_.signal.value(steps * dt)
    covered = np.cumsum(ground * dt)
    last = int(np.searchsorted(covered, d, side="left"))
    if last >= max_steps:  # only reachable if the signal exceeds its scaling maximum
        raise RuntimeError(f"edge {edge} not crossed within {max_steps} steps")
    before = covered[last - 1] if last > 0 else 0.0
    crossing = last * dt + (d - before) / ground[last]
    m = entry_step + last
    t = steps[: last + 1] * dt
    samples = np.asarray(field_.measured_wind(edge, t, rng), dtype=float)
    return EdgeWindow(edge, entry_step, m, samples, float(crossing))


def execute_pass(
    field_: WindField,
    path: Sequence[int],
    u0: float,
    dt: float,
    start_step: int,
    rng: np.random.Generator | None = None,
    pass_index: int = 0,
    expected_cost: float = float("nan"),
) -> PassRecord:
    if len(path) < 2:
        raise ValueError("path needs at least one edge")
    graph = field_.graph
    record = PassRecord(pass_index, tuple(int(v) for v in path), expected_cost=expected_cost, start_step=start_step)
    step = start_step
    for i, j in zip(path[:-1], path[1:]):
        if not graph.has_edge(i, j) or not (graph.is_traversable(i) and graph.is_traversable(j)):
            raise ValueError(f"path is disconnected or leaves the traversable region at ({i}, {j})")
        window = traverse_edge(field_, (i, j), step, u0, dt, rng)
        record.windows.append(window)
        step = window.m + 1
    return record

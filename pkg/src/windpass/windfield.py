"""Ground-truth wind: resistor-network edge constants times a pressure-gradient signal.

Vertical (x2) edges carry a fictitious resistance; horizontal edges have none, so
every row is an equipotential.  A unit pressure drop from the bottom boundary row
to the top one drives an upward flow, which is identified with wind speed.  All
edge winds are proportional to one scalar signal ``dpx2(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from windpass.grid import Edge, GridGraph

D0 = 0.5
RESISTANCE_RANGE = (0.5, 1.0)
# Dense sampling used to find the signal maximum when scaling to w_max.
DENSE_POINTS = 200_000
DENSE_PERIODS = 20


@dataclass(frozen=True)
class SignalParams:
    """``d0 + sum a_l cos(2 pi b_l t + c_l) + v(t)`` with ``v ~ N(0, noise_variance)``."""

    d0: float = D0
    amplitudes: tuple[float, ...] = ()
    frequencies: tuple[float, ...] = ()
    phases: tuple[float, ...] = ()
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        if not len(self.amplitudes) == len(self.frequencies) == len(self.phases):
            raise ValueError("amplitudes, frequencies and phases must have equal length")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")

    @property
    def n_terms(self) -> int:
        return len(self.amplitudes)

    @property
    def noisy(self) -> bool:
        return self.noise_variance > 0

    @property
    def time_varying(self) -> bool:
        return any(a != 0 for a in self.amplitudes)

    def mean(self) -> float:
        """Noiseless time average."""
        return self.d0

    def value(self, t, include_noise: bool = False, rng: np.random.Generator | None = None):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.d0, dtype=float)
        for a, b, c in zip(self.amplitudes, self.frequencies, self.phases):
            out = out + a * np.cos(2.0 * np.pi * b * t + c)
        if include_noise and self.noisy:
            if rng is None:
                raise ValueError("a random generator is required for noisy evaluation")
            out = out + rng.normal(0.0, math.sqrt(self.noise_variance), size=t.shape)
        return out if out.ndim else float(out)

    def dense_times(self) -> np.ndarray:
        """Time grid on which the noiseless maximum is taken."""
        if not self.time_varying:
            return np.zeros(1)
        longest = 1.0 / min(b for a, b in zip(self.amplitudes, self.frequencies) if a != 0)
        return np.linspace(0.0, DENSE_PERIODS * longest, DENSE_POINTS)

    def dense_max(self) -> float:
        return float(np.max(np.abs(self.value(self.dense_times()))))

    def to_dict(self) -> dict:
        return {
            "d0": self.d0,
            "amplitudes": list(self.amplitudes),
            "frequencies": list(self.frequencies),
            "phases": list(self.phases),
            "noise_variance": self.noise_variance,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SignalParams":
        return cls(
            d0=float(data["d0"]),
            amplitudes=tuple(map(float, data["amplitudes"])),
            frequencies=tuple(map(float, data["frequencies"])),
            phases=tuple(map(float, data["phases"])),
            noise_variance=float(data["noise_variance"]),
        )


def constant_signal(level: float = 1.0, noise_variance: float = 0.0) -> SignalParams:
    """Time-invariant gradient used by the static scenarios."""
    return SignalParams(d0=level, noise_variance=noise_variance)


def frequency_bounds(freq_range: tuple[float, float], freq_mode: str = "period") -> tuple[float, float]:
    """Map the configured range to frequency bounds in Hz.

    ``period`` reads the range as periods in seconds; ``literal`` as frequencies.
    """
    lo, hi = sorted(float(x) for x in freq_range)
    if lo <= 0:
        raise ValueError("frequency range must be positive")
    if freq_mode == "period":
        return 1.0 / hi, 1.0 / lo
    if freq_mode == "literal":
        return lo, hi
    raise ValueError(f"unknown freq_mode {freq_mode!r}")


def generate_signal(
    n_terms: int,
    freq_range: tuple[float, float],
    noise_variance: float,
    rng: np.random.Generator,
    freq_mode: str = "period",
) -> SignalParams:
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    b_lo, b_hi = frequency_bounds(freq_range, freq_mode)
    raw = rng.uniform(0.0, 1.0, size=n_terms)
    amplitudes = 0.5 * raw / raw.sum()
    frequencies = rng.uniform(b_lo, b_hi, size=n_terms)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_terms)
    return SignalParams(
        d0=D0,
        amplitudes=tuple(float(a) for a in amplitudes),
        frequencies=tuple(float(b) for b in frequencies),
        phases=tuple(float(c) for c in phases),
        noise_variance=float(noise_variance),
    )


def eval_dpx2(signal: SignalParams, t, include_noise: bool = False, rng: np.random.Generator | None = None):
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be nonnegative")
    return signal.value(t, include_noise, rng)


# -- resistor network ---------------------------------------------------


def vertical_edges(graph: GridGraph) -> list[Edge]:
    """Undirected x2-aligned edges as (lower, upper) vertex pairs."""
    return [
        (graph.label(c, r), graph.label(c, r + 1)) for r in range(graph.n2 - 1) for c in range(graph.n1)
    ]


def sample_resistances(graph: GridGraph, rng: np.random.Generator) -> dict[Edge, float]:
    """One Uniform[0.5, 1] draw per vertical edge; horizontal edges get 0."""
    res: dict[Edge, float] = {}
    for lo, hi in vertical_edges(graph):
        r = float(rng.uniform(*RESISTANCE_RANGE))
        res[(lo, hi)] = res[(hi, lo)] = r
    for i, j in graph.edges:
        if not graph.is_vertical(i, j):
            res[(i, j)] = 0.0
    return res


def solve_network(graph: GridGraph, resistances: Mapping[Edge, float]) -> dict[Edge, float]:
    """Per-edge flow under a unit pressure drop from the bottom row to the top row.

    Rows are equipotential, so each row gap is a bank of parallel resistors and the
    gaps are in series.  Horizontal flows follow from nodal conservation.
    """
    n1, n2 = graph.n1, graph.n2
    R = np.empty((n2 - 1, n1))
    for g in range(n2 - 1):
        for c in range(n1):
            r = resistances[(graph.label(c, g), graph.label(c, g + 1))]
            if not r > 0:
                raise ValueError("singular network: vertical resistances must be positive")
            R[g, c] = r

    conductance = (1.0 / R).sum(axis=1)
    total_flow = 1.0 / np.sum(1.0 / conductance)
    drop = total_flow / conductance
    vflow = drop[:, None] / R  # vflow[g, c]: upward flow from row g to g+1

    coeff: dict[Edge, float] = {}
    for g in range(n2 - 1):
        for c in range(n1):
            lo, hi = graph.label(c, g), graph.label(c, g + 1)
            coeff[(lo, hi)] = float(vflow[g, c])
            coeff[(hi, lo)] = -float(vflow[g, c])

    for r in range(n2):
        if 1 <= r <= n2 - 2:
            net_in = vflow[r - 1] - vflow[r]
            hflow = np.cumsum(net_in)[:-1]
        else:
            hflow = np.zeros(n1 - 1)
        for c in range(n1 - 1):
            a, b = graph.label(c, r), graph.label(c + 1, r)
            coeff[(a, b)] = float(hflow[c])
            coeff[(b, a)] = -float(hflow[c])
    return coeff


def scale_to_wmax(coeffs: Mapping[Edge, float], signal: SignalParams, w_max: float) -> tuple[dict[Edge, float], float]:
    """Scale so the largest noiseless edge speed over time equals ``w_max``.

    Returns the scaled map and the common factor.
    """
    peak = max(abs(c) for c in coeffs.values())
    if peak == 0:
        raise ValueError("cannot scale an all-zero coefficient map")
    factor = w_max / (peak * signal.dense_max())
    return {e: c * factor for e, c in coeffs.items()}, factor


@dataclass
class WindField:
    graph: GridGraph
    resistance: dict[Edge, float]
    coeff: dict[Edge, float]
    signal: SignalParams
    w_max: float

    def true_wind(self, edge: Edge, t):
        """Noiseless wind along ``edge`` at time(s) ``t``; positive is a tailwind."""
        if edge not in self.coeff:
            raise KeyError(f"unknown edge {edge}")
        return self.coeff[edge] * self.signal.value(t)

    def measured_wind(self, edge: Edge, t, rng: np.random.Generator | None = None):
        if edge not in self.coeff:
            raise KeyError(f"unknown edge {edge}")
        return self.coeff[edge] * self.signal.value(t, include_noise=self.signal.noisy, rng=rng)

    def mean_wind(self, edge: Edge) -> float:
        return self.coeff[edge] * self.signal.mean()

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "grid": {"n1": g.n1, "n2": g.n2, "dx1": g.dx1, "dx2": g.dx2},
            "w_max": self.w_max,
            "signal": self.signal.to_dict(),
            "resistance": [[i, j, r] for (i, j), r in sorted(self.resistance.items())],
            "coeff": [[i, j, c] for (i, j), c in sorted(self.coeff.items())],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WindField":
        from windpass.grid import build_grid

        grid = build_grid(**data["grid"])
        return cls(
            graph=grid,
            resistance={(int(i), int(j)): float(r) for i, j, r in data["resistance"]},
            coeff={(int(i), int(j)): float(c) for i, j, c in data["coeff"]},
            signal=SignalParams.from_dict(data["signal"]),
            w_max=float(data["w_max"]),
        )


def measure_wind(field_: WindField, edge: Edge, k: int, dt: float, rng: np.random.Generator | None = None) -> float:
    """Measured wind at step ``k``; noisy only when the signal carries noise."""
    if k < 0:
        raise ValueError("time step must be nonnegative")
    return float(field_.measured_wind(edge, k * dt, rng))


def synthesize_field(graph: GridGraph, signal: SignalParams, w_max: float, rng: np.random.Generator) -> WindField:
    resistances = sample_resistances(graph, rng)
    coeffs, _ = scale_to_wmax(solve_network(graph, resistances), signal, w_max)
    return WindField(graph, resistances, coeffs, signal, float(w_max))

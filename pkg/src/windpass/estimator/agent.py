"""The central agent: turns pass measurements into edge-cost estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from windpass.estimator.costs import CostTable, init_costs, travel_time
from windpass.estimator.kalman import KFState, build_kf, kf_predict, kf_step, q_schedule
from windpass.estimator.spectral import fft_dominant_components
from windpass.estimator.stitching import (
    SCALE_EPS,
    StitchedSeries,
    canonical,
    estimate_resistance,
    joint_series,
    normalize,
    oriented,
    quadratic_fit,
    smooth_joint_fit,
    solve_joint_scales,
    stitch_window,
    stitch_window_noisy,
)
from windpass.grid import Edge, GridGraph
from windpass.traversal import EdgeWindow, PassRecord

R_FLOOR = 1e-10


@dataclass
class KFOptions:
    model: str = "oscillator_bank"
    n_modes: int = 6
    q_large: float = 1e-2
    q_small: float = 1e-5
    min_periods: float = 3.0
    refilter_steps: int = 3000


@dataclass
class ResistanceEstimates:
    rhat: dict[Edge, float] = field(default_factory=dict)
    last_update_pass: dict[Edge, int] = field(default_factory=dict)

    def set(self, edge: Edge, value: float, pass_index: int) -> None:
        self.rhat[edge] = value
        self.last_update_pass[edge] = pass_index


class EstimatorState:
    """Agent memory for one trial.

    ``case`` selects the update rule: 1/2 use the measured wind directly, 3/4
    estimate the gradient signal and per-edge constants.  ``stitch_mode``
    picks between one scale per edge solved over all seams (``joint``) and
    window-by-window chaining (``sequential``).  ``estimator='kf'`` smooths the
    scaled measurements with the filter; in sequential mode it also anchors
    each new window on the filter's prediction.
    """

    def __init__(
        self,
        graph: GridGraph,
        case: int,
        u0: float,
        w_max: float,
        dt: float,
        estimator: str = "stitch",
        antisymmetric_updates: bool = True,
        kf_options: KFOptions | None = None,
        static_cost: str = "mean",
        stitch_mode: str = "joint",
    ):
        if case not in (1, 2, 3, 4):
            raise ValueError(f"unknown case {case}")
        if estimator not in ("stitch", "kf"):
            raise ValueError(f"unknown estimator {estimator!r}")
        if static_cost not in ("mean", "peak"):
            raise ValueError(f"unknown static_cost {static_cost!r}")
        if stitch_mode not in ("joint", "sequential"):
            raise ValueError(f"unknown stitch_mode {stitch_mode!r}")
        self.graph = graph
        self.case = case
        self.u0 = u0
        self.w_max = w_max
        self.dt = dt
        self.estimator = estimator
        self.antisymmetric = antisymmetric_updates
        self.static_cost = static_cost
        self.stitch_mode = stitch_mode
        self.windows: list[EdgeWindow] = []
        self.scale_rel_std: dict[tuple[int, int], float] = {}
        self.kf_options = kf_options or KFOptions()
        self.costs: CostTable = init_costs(graph, u0, w_max)
        self.series = StitchedSeries()
        self.resistances = ResistanceEstimates()
        self.latest: dict[frozenset, EdgeWindow] = {}
        self.passes_seen = 0
        # Filter bookkeeping (estimator == "kf").
        self.kf: KFState | None = None
        self.kf_est = np.empty(0)
        self.kf_z = np.empty(0)
        self.kf_r = np.empty(0)
        self.q_latched_small = False

    # -- shared -------------------------------------------------------------
    def _clamp(self, wind: float) -> float:
        return float(np.clip(wind, -self.w_max, self.w_max))

    def _set_cost(self, edge: Edge, wind: float) -> None:
        d = self.graph.distance(*edge)
        wind = self._clamp(wind)
        self.costs[edge] = travel_time(d, self.u0, wind)
        if self.antisymmetric:
            self.costs[(edge[1], edge[0])] = travel_time(d, self.u0, -wind)

    def absorb(self, record: PassRecord) -> None:
        self.passes_seen += 1
        if self.case in (1, 2):
            for window in record.windows:
                if self.case == 1:
                    wind = float(window.samples[-1])
                else:
                    wind = float(np.mean(window.samples))
                self._set_cost(window.edge, wind)
            return
        if self.stitch_mode == "joint":
            self._absorb_joint(record)
            return
        for window in record.windows:
            if self.estimator == "kf":
                self._kf_absorb(window)
            elif self.case == 3:
                stitch_window(self.series, window, self.dt)
            else:
                stitch_window_noisy(self.series, window, self.dt)
            self.latest[frozenset(window.edge)] = window
        if self.estimator == "kf":
            self._kf_reanalyze()
        self._refresh_costs()

    def _absorb_joint(self, record: PassRecord) -> None:
        noisy = self.case == 4
        self.windows.extend(record.windows)
        for window in record.windows:
            self.latest[frozenset(window.edge)] = window
        if noisy:
            fit = smooth_joint_fit(self.windows, self.dt)
            scales, self.scale_rel_std = fit.scales, fit.rel_std
            self.series = StitchedSeries(self.windows[0].n, fit.curve, (self.windows[-1].n, self.windows[-1].m))
        else:
            scales = solve_joint_scales(self.windows, self.dt, noisy)
            self.series = joint_series(self.windows, self.dt, noisy, scales)
        if self.estimator == "kf":
            z, r = [], []
            for window in self.windows:
                key, sign = canonical(window.edge)
                gain = sign * scales.get(key, 0.0)
                _, noise_var = self._window_fit(window) if noisy else (None, R_FLOOR)
                z.append(gain * np.asarray(window.samples, dtype=float))
                r.append(np.full(len(window), max(gain * gain * noise_var, R_FLOOR)))
            self.kf_z = np.concatenate(z)
            self.kf_r = np.concatenate(r)
            self.kf_est = self.series.w.copy()
            self._kf_reanalyze()
        self._refresh_costs()

    def signal_estimate(self) -> tuple[int, np.ndarray]:
        """(first step, normalized gradient estimate) over the stitched range."""
        if self.estimator == "kf" and len(self.kf_est):
            est = self.kf_est
        else:
            est = self.series.w
        return self.series.start_step, normalize(est)

    def _refresh_costs(self) -> None:
        _, edpx2 = self.signal_estimate()
        # "mean": cost at the time-averaged gradient; "peak": at the normalized maximum.
        level = float(np.mean(edpx2)) if self.static_cost == "mean" else 1.0
        for window in self.latest.values():
            try:
                rhat = estimate_resistance(self.series, window, edpx2)
            except ValueError:
                rhat = float(np.mean(window.samples))
            self.resistances.set(window.edge, rhat, self.passes_seen)
            if self.antisymmetric:
                self.resistances.set((window.edge[1], window.edge[0]), -rhat, self.passes_seen)
            self._set_cost(window.edge, rhat * level)

    # -- Kalman-anchored stitching ---------------------------------------------
    def _window_fit(self, window: EdgeWindow) -> tuple[np.ndarray, float]:
        fit = quadratic_fit(window.samples)
        fitted = fit(np.arange(len(window), dtype=float))
        resid = np.asarray(window.samples) - fitted
        dof = max(len(window) - 3, 1)
        return fitted, max(float(resid @ resid) / dof, R_FLOOR)

    def _kf_absorb(self, window: EdgeWindow) -> None:
        samples = np.asarray(window.samples, dtype=float)
        fitted, noise_var = self._window_fit(window)
        values = samples if self.case == 3 else fitted
        if self.kf is None:
            before = len(self.series)
            if self.case == 3:
                stitch_window(self.series, window, self.dt)
            else:
                stitch_window_noisy(self.series, window, self.dt)
            appended = self.series.w[before:]
            r = float(appended[0] / values[0]) if abs(values[0]) > SCALE_EPS else 1.0
            self.kf_est = np.concatenate([self.kf_est, appended])
        else:
            # Half-step seam as in curve-fit stitching, but the running side is the
            # filtered estimate, which pools many windows instead of one.
            probe = self.kf.copy()
            kf_predict(probe)
            seam_prev = 0.5 * (self.kf.estimate + probe.estimate)
            if self.case == 3:
                seam_new = float(samples[0])
                seam_prev = probe.estimate
            else:
                seam_new = float(quadratic_fit(samples)(-0.5))
            r = seam_prev / seam_new if abs(seam_new) > SCALE_EPS else 0.0
            if r == 0.0:
                total = float(samples.sum())
                r = float(np.sum(self.series.w[-len(samples):])) / total if abs(total) > SCALE_EPS else 1.0
            r = oriented(r, self.series, samples)
            est = np.empty(len(window))
            for k, z in enumerate(r * samples):
                kf_step(self.kf, z, r * r * noise_var)
                est[k] = self.kf.estimate
            self.series._append(window, r * values)
            self.kf_est = np.concatenate([self.kf_est, est])
        self.kf_z = np.concatenate([self.kf_z, r * samples])
        self.kf_r = np.concatenate([self.kf_r, np.full(len(window), r * r * noise_var)])

    def _kf_reanalyze(self) -> None:
        opts = self.kf_options
        w = self.series.w
        if len(w) < 2 * opts.n_modes + 1:
            return
        comps = fft_dominant_components(w, self.dt, opts.n_modes)
        if not self.q_latched_small:
            q = q_schedule(
                self.passes_seen, len(w), self.dt, comps[0].frequency, opts.q_large, opts.q_small, opts.min_periods
            )
            self.q_latched_small = q == opts.q_small
        q = opts.q_small if self.q_latched_small else opts.q_large
        begin = max(0, len(w) - opts.refilter_steps)
        offset = float(np.mean(w[begin:]))
        kf = build_kf(comps, self.dt, q, float(np.median(self.kf_r)), model=opts.model, t0=begin * self.dt, offset=offset)
        est = np.empty(len(w) - begin)
        for k in range(begin, len(w)):
            kf_step(kf, self.kf_z[k], self.kf_r[k])
            est[k - begin] = kf.estimate
        self.kf = kf
        self.kf_est = np.concatenate([self.kf_est[:begin], est])

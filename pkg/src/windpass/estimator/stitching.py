"""Stitching per-edge measurement windows into one gradient-signal series.

Each edge sees ``coeff * dpx2(t)`` with its own unknown ``coeff``, so consecutive
windows jump at the seam.  Rescaling every new window to continue the running
series removes the jumps; normalizing by the running maximum then recovers the
gradient signal up to a single positive scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from windpass.traversal import EdgeWindow

SCALE_EPS = 1e-12
KNOT_SPACING = 80.0  # s, well under the slowest signal periods
BLOCK = 0  # samples averaged per row of the smooth fit; 0 means whole windows


class UnscalableWindow(ValueError):
    """The seam anchor of a new window is numerically zero."""


class DegenerateWindow(ValueError):
    """Too few samples for a quadratic fit."""


@dataclass
class StitchedSeries:
    """Running stitched signal; index ``k`` of ``w`` is global step ``start_step + k``."""

    start_step: int = 0
    w: np.ndarray = field(default_factory=lambda: np.empty(0))
    last_window: tuple[int, int] | None = None

    def __len__(self) -> int:
        return len(self.w)

    @property
    def end_step(self) -> int:
        """Step index one past the last stored value."""
        return self.start_step + len(self.w)

    @property
    def edpx2(self) -> np.ndarray:
        return normalize(self.w)

    def segment(self, n: int, m: int, values: np.ndarray | None = None) -> np.ndarray:
        """Slice for steps ``n..m`` inclusive of ``values`` (default: ``edpx2``)."""
        values = self.edpx2 if values is None else values
        if n < self.start_step or m >= self.end_step:
            raise IndexError(f"steps {n}..{m} outside stored range {self.start_step}..{self.end_step - 1}")
        return values[n - self.start_step : m - self.start_step + 1]

    def _append(self, window: EdgeWindow, values: np.ndarray) -> None:
        if len(self.w) == 0:
            self.start_step = window.n
        elif window.n != self.end_step:
            raise ValueError(f"window starts at step {window.n}, series ends at {self.end_step - 1}")
        self.w = np.concatenate([self.w, values])
        self.last_window = (window.n, window.m)


def normalize(w: np.ndarray) -> np.ndarray:
    """Scale by the running peak, oriented so the mean is nonnegative (the gradient is)."""
    w = np.asarray(w, dtype=float)
    if len(w) == 0:
        return np.empty(0)
    peak = np.max(np.abs(w))
    if peak == 0:
        return np.zeros_like(w)
    return w / peak if np.mean(w) >= 0 else -w / peak


def backward_slope(w: np.ndarray, dt: float) -> float:
    """Derivative at the last point; second order when three points exist."""
    if len(w) >= 3:
        return (3.0 * w[-1] - 4.0 * w[-2] + w[-3]) / (2.0 * dt)
    if len(w) == 2:
        return (w[-1] - w[-2]) / dt
    return 0.0


def seam_scale(w: np.ndarray, first_sample: float, dt: float) -> float:
    """Factor mapping the new window onto the extrapolated running series."""
    if abs(first_sample) < SCALE_EPS:
        raise UnscalableWindow("first sample of the new window is zero")
    return (w[-1] + backward_slope(w, dt) * dt) / first_sample


def oriented(r: float, series: StitchedSeries, samples: np.ndarray) -> float:
    """``r`` with its sign forced to keep the series' orientation.

    The gradient never changes sign, so a seam ratio of the wrong sign (an
    extrapolated seam value that crossed zero in noise) can only be an error.
    """
    sign = np.sign(np.mean(series.w)) * np.sign(np.mean(samples))
    return float(sign * abs(r)) if sign != 0 else float(r)


def _hold(series: StitchedSeries, window: EdgeWindow, dt: float) -> np.ndarray:
    # Window carries no usable scale: continue the series at its extrapolated seam value.
    anchor = series.w[-1] + backward_slope(series.w, dt) * dt
    return np.full(len(window), anchor)


def stitch_window(series: StitchedSeries, window: EdgeWindow, dt: float) -> StitchedSeries:
    """Append a noiseless window, scaled to continue the series smoothly."""
    samples = np.asarray(window.samples, dtype=float)
    if len(series) == 0:
        series._append(window, samples.copy())
        return series
    try:
        r = oriented(seam_scale(series.w, samples[0], dt), series, samples)
        values = r * samples
    except UnscalableWindow:
        values = _hold(series, window, dt)
    series._append(window, values)
    return series


def quadratic_fit(y: np.ndarray) -> np.polynomial.Polynomial:
    """Least-squares quadratic in the local step index ``0..len(y)-1``."""
    y = np.asarray(y, dtype=float)
    if len(y) < 3:
        raise DegenerateWindow(f"quadratic fit needs 3 samples, got {len(y)}")
    tau = np.arange(len(y), dtype=float)
    return np.polynomial.Polynomial.fit(tau, y, 2, domain=[0.0, max(len(y) - 1.0, 1.0)], window=[-1.0, 1.0])


def stitch_window_noisy(series: StitchedSeries, window: EdgeWindow, dt: float) -> StitchedSeries:
    """Append the quadratic fit of a noisy window, matched to the previous fit half a step before ``n``."""
    fit = quadratic_fit(window.samples)
    fitted = fit(np.arange(len(window), dtype=float))
    if len(series) == 0:
        series._append(window, fitted)
        return series
    seam_new = float(fit(-0.5))
    prev_n, prev_m = series.last_window if series.last_window else (series.start_step, series.end_step - 1)
    prev = series.segment(prev_n, prev_m, series.w)
    if len(prev) >= 3:
        seam_prev = float(quadratic_fit(prev)(len(prev) - 0.5))
    else:
        seam_prev = float(series.w[-1] + 0.5 * backward_slope(series.w, dt) * dt)
    if abs(seam_new) < SCALE_EPS:
        series._append(window, _hold(series, window, dt))
        return series
    series._append(window, oriented(seam_prev / seam_new, series, fitted) * fitted)
    return series


def estimate_resistance(series: StitchedSeries, window: EdgeWindow, edpx2: np.ndarray | None = None) -> float:
    """Edge constant: time-averaged measured wind over time-averaged estimated gradient.

    ``edpx2`` overrides the series' own normalized signal (e.g. a filtered one).
    """
    denom = float(np.mean(series.segment(window.n, window.m, edpx2)))
    if abs(denom) < 1e-9:
        raise ValueError("indeterminate resistance: estimated gradient averages to zero")
    return float(np.mean(window.samples)) / denom


# -- joint stitching ------------------------------------------------------------
#
# Under the proportional-wind model every traversal of an edge shares one
# constant, so all windows of an edge must use the same scale.  Solving every
# seam equation at once for one scale per undirected edge removes the
# window-to-window drift of sequential stitching.


def canonical(edge: tuple[int, int]) -> tuple[tuple[int, int], int]:
    """Undirected key and the orientation sign of ``edge``."""
    i, j = edge
    return ((i, j), 1) if i < j else ((j, i), -1)


def _extrapolation_variance(n: int, at: float) -> float:
    """Variance factor of a least-squares quadratic over ``0..n-1`` evaluated at ``at``."""
    tau = np.arange(n, dtype=float)
    scale = max(n - 1.0, 1.0)
    X = np.vander(tau / scale, 3, increasing=True)
    x = np.array([1.0, at / scale, (at / scale) ** 2])
    return float(x @ np.linalg.solve(X.T @ X, x))


def _seam_values(prev: EdgeWindow, new: EdgeWindow, dt: float, noisy: bool) -> tuple[float, float, float]:
    """(prev-side value, new-side value, variance factor) for one seam."""
    if noisy:
        a = float(quadratic_fit(prev.samples)(len(prev) - 0.5))
        b = float(quadratic_fit(new.samples)(-0.5))
        var = _extrapolation_variance(len(prev), len(prev) - 0.5) + _extrapolation_variance(len(new), -0.5)
        return a, b, var
    a = float(prev.samples[-1] + backward_slope(np.asarray(prev.samples), dt) * dt)
    return a, float(new.samples[0]), 1.0


def solve_joint_scales(windows: list[EdgeWindow], dt: float, noisy: bool) -> dict[tuple[int, int], float]:
    """Per undirected edge, the factor mapping its canonical-direction wind to the common series.

    Windows must be contiguous in time.  Edges whose windows are numerically
    zero get no scale.
    """
    if not windows:
        return {}
    strength: dict[tuple[int, int], float] = {}
    for w in windows:
        key, _ = canonical(w.edge)
        strength[key] = strength.get(key, 0.0) + float(np.sum(np.abs(w.samples)))
    live = [k for k, s in strength.items() if s > SCALE_EPS]
    if not live:
        return {}
    ref = max(live, key=lambda k: (strength[k], k))
    others = sorted(k for k in live if k != ref)
    col = {k: c for c, k in enumerate(others)}
    if not others:
        return {ref: 1.0}

    rows, rhs = [], []
    for prev, new in zip(windows[:-1], windows[1:]):
        if new.n != prev.m + 1:
            raise ValueError(f"windows not contiguous at step {new.n}")
        (ka, sa), (kb, sb) = canonical(prev.edge), canonical(new.edge)
        if ka not in strength or strength[ka] <= SCALE_EPS or strength[kb] <= SCALE_EPS:
            continue
        a, b, var = _seam_values(prev, new, dt, noisy)
        weight = 1.0 / np.sqrt(var)
        row = np.zeros(len(others))
        const = 0.0
        # sa * x_a * a - sb * x_b * b = 0
        for key, coef in ((ka, sa * a), (kb, -sb * b)):
            if key == ref:
                const -= coef
            else:
                row[col[key]] += coef
        rows.append(weight * row)
        rhs.append(weight * const)
    if not rows:
        return {ref: 1.0}
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    scales = {ref: 1.0}
    scales.update({k: float(sol[col[k]]) for k in others})
    return scales


def _edge_strength(windows: list[EdgeWindow]) -> dict[tuple[int, int], float]:
    strength: dict[tuple[int, int], float] = {}
    for w in windows:
        key, _ = canonical(w.edge)
        strength[key] = strength.get(key, 0.0) + float(np.sum(np.abs(w.samples)))
    return strength


@dataclass
class JointFit:
    scales: dict[tuple[int, int], float]
    curve: np.ndarray
    rel_std: dict[tuple[int, int], float]  # standard error of each scale over its magnitude


def smooth_joint_fit(
    windows: list[EdgeWindow], dt: float, knot_spacing: float | None = None, block: int | None = None
) -> "JointFit":
    """Per-edge scales and a cubic-spline gradient curve fitted together by least squares.

    Every scaled measurement ``scale[e] * wind`` should sit on one smooth curve;
    the strongest edge is pinned to scale one.  The curve is sampled at every
    step of the windows.
    """
    knot_spacing = KNOT_SPACING if knot_spacing is None else knot_spacing
    block = BLOCK if block is None else block
    if not windows:
        return JointFit({}, np.empty(0), {})
    for prev, new in zip(windows[:-1], windows[1:]):
        if new.n != prev.m + 1:
            raise ValueError(f"windows not contiguous at step {new.n}")
    strength = _edge_strength(windows)
    top = max(strength.values())
    live = {k for k, v in strength.items() if v > SCALE_EPS and v > 1e-9 * top}
    n0, n1 = windows[0].n, windows[-1].m + 1
    steps = np.arange(n0, n1)
    if not live:
        return JointFit({}, np.zeros(len(steps)), {})
    ref = max(live, key=lambda k: (strength[k], k))
    others = sorted(live - {ref})
    col = {k: c for c, k in enumerate(others)}

    t0, t1 = n0 * dt, n1 * dt
    n_int = max(1, int(np.ceil((t1 - t0) / knot_spacing)))
    knots = np.concatenate([[t0] * 3, np.linspace(t0, t1, n_int + 1), [t1] * 3])
    n_basis = n_int + 3

    # Rows average the measurements and the basis over blocks of samples; long
    # blocks keep the noise in the scale regressors (and its attenuation bias) small.
    basis_rows, values, counts, keys, signs = [], [], [], [], []
    for w in windows:
        key, sign = canonical(w.edge)
        if key not in live:
            continue
        samples = np.asarray(w.samples, dtype=float)
        t = np.clip(np.arange(w.n, w.m + 1) * dt, t0, t1)
        Bw = BSpline.design_matrix(t, knots, 3).toarray()
        size = len(samples) if block <= 0 else block
        for lo in range(0, len(samples), size):
            chunk = slice(lo, lo + size)
            basis_rows.append(Bw[chunk].mean(axis=0))
            values.append(samples[chunk].mean())
            counts.append(len(samples[chunk]))
            keys.append(key)
            signs.append(sign)
    values = np.array(values)
    weight = np.sqrt(np.array(counts, dtype=float))
    B = np.array(basis_rows)

    rows = np.zeros((len(values), len(others) + n_basis))
    rhs = np.zeros(len(values))
    rows[:, len(others) :] = -B
    for r, (key, sign, v) in enumerate(zip(keys, signs, values)):
        if key == ref:
            rhs[r] = -sign * v
        else:
            rows[r, col[key]] = sign * v
    rows *= weight[:, None]
    rhs *= weight
    # A light curvature penalty keeps the curve defined across unmeasured gaps.
    D = np.diff(np.eye(n_basis), 2, axis=0) if n_basis > 2 else np.zeros((0, n_basis))
    pen = np.hstack([np.zeros((len(D), len(others))), 1e-3 * D])
    A = np.vstack([rows, pen])
    b = np.concatenate([rhs, np.zeros(len(D))])
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    dof = len(values) - len(sol)
    rel_std = {ref: 0.0}
    if others:
        resid = rows @ sol - rhs
        sigma2 = float(resid @ resid) / dof if dof > 0 else np.inf
        cov_diag = np.diag(np.linalg.pinv(A.T @ A))[: len(others)] * sigma2
        for k in others:
            x = abs(sol[col[k]])
            rel_std[k] = float(np.sqrt(cov_diag[col[k]]) / x) if x > SCALE_EPS else np.inf
    scales = {ref: 1.0}
    scales.update({k: float(sol[col[k]]) for k in others})
    curve = BSpline(knots, sol[len(others) :], 3)(steps * dt)
    return JointFit(scales, curve, rel_std)


def joint_series(
    windows: list[EdgeWindow], dt: float, noisy: bool, scales: dict[tuple[int, int], float] | None = None
) -> StitchedSeries:
    """Series from jointly solved per-edge scales.

    Noiseless windows are rescaled verbatim; noisy ones are replaced by the
    jointly fitted smooth curve.
    """
    if noisy:
        fit = smooth_joint_fit(windows, dt)
        series = StitchedSeries()
        if windows:
            series.start_step = windows[0].n
            series.w = fit.curve
            series.last_window = (windows[-1].n, windows[-1].m)
        return series
    if scales is None:
        scales = solve_joint_scales(windows, dt, noisy)
    series = StitchedSeries()
    for w in windows:
        key, sign = canonical(w.edge)
        values = np.asarray(w.samples, dtype=float)
        if key in scales:
            series._append(w, sign * scales[key] * values)
        elif len(series):
            series._append(w, _hold(series, w, dt))
        else:
            series._append(w, np.zeros(len(w)))
    return series

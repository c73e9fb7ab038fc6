"""Dominant Fourier components of a uniformly sampled series."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Component(NamedTuple):
    frequency: float  # Hz
    amplitude: float
    phase: float  # rad, at the first sample


def fft_dominant_components(series, dt: float, n_modes: int) -> list[Component]:
    """The ``n_modes`` strongest non-DC bins of the mean-removed series, strongest first.

    Equal magnitudes (to a relative 1e-9) go to the lower frequency.
    """
    x = np.asarray(series, dtype=float)
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    if len(x) < 2 * n_modes + 1:
        raise ValueError(f"series too short: need {2 * n_modes + 1} samples, got {len(x)}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = len(x)
    spectrum = np.fft.rfft(x - x.mean())
    bins = np.arange(1, len(spectrum))
    mags = np.abs(spectrum[1:])
    # Magnitudes equal to nine significant digits count as tied.
    top = mags.max()
    rounded = np.round(mags / top * 1e9) if top > 0 else mags
    order = np.lexsort((bins, -rounded))[:n_modes]
    out = []
    for idx in order:
        k = int(bins[idx])
        coef = spectrum[k]
        scale = 1.0 if (L % 2 == 0 and k == L // 2) else 2.0
        out.append(Component(k / (L * dt), scale * abs(coef) / L, float(np.angle(coef))))
    return out

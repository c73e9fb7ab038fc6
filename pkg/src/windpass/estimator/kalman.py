"""Kalman filter on a bank of fictitious mass-spring systems.

State layout is ``(y_1..y_N, y'_1..y'_N, y''_1..y''_N)``.  Two transition models:

``coupled``
    Positions and velocities integrate with step ``dt``; accelerations are the
    tridiagonal stiffness coupling of the positions (last row asymmetric), the
    acceleration-to-acceleration block is zero, and ``C`` observes ``y_N`` only.
    Stiffnesses are square roots of the angular frequencies.
``oscillator_bank``
    Independent modes obeying ``y''' = -w^2 y'`` (an offset plus an undamped
    cosine), discretized exactly; ``C`` sums the mode displacements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from windpass.estimator.spectral import Component

MODELS = ("coupled", "oscillator_bank")


@dataclass
class KFState:
    n_modes: int
    xhat: np.ndarray
    P: np.ndarray
    A: np.ndarray
    C: np.ndarray  # shape (3N,)
    Q: np.ndarray
    R: float
    stiffness: np.ndarray
    model: str = "coupled"

    @property
    def estimate(self) -> float:
        return float(self.C @ self.xhat)

    def copy(self) -> "KFState":
        return KFState(
            self.n_modes, self.xhat.copy(), self.P.copy(), self.A, self.C, self.Q, self.R, self.stiffness, self.model
        )


def stiffness_matrix(K: Sequence[float]) -> np.ndarray:
    """Acceleration rows as a function of positions, entries as laid out for the filter."""
    K = np.asarray(K, dtype=float)
    N = len(K)
    S = np.zeros((N, N))
    if N == 1:
        S[0, 0] = -K[0]
        return S
    S[0, 0], S[0, 1] = -(K[0] + K[1]), K[1]
    for l in range(1, N - 1):
        S[l, l - 1] = -K[l]
        S[l, l] = -(K[l] + K[l + 1])
        S[l, l + 1] = K[l + 1]
    S[N - 1, N - 2], S[N - 1, N - 1] = K[N - 2], -K[N - 1]
    return S


def coupled_transition(K: Sequence[float], dt: float) -> np.ndarray:
    N = len(K)
    A = np.zeros((3 * N, 3 * N))
    idx = np.arange(2 * N)
    A[idx, idx] = 1.0
    A[idx, idx + N] = dt
    A[2 * N :, :N] = stiffness_matrix(K)
    return A


def bank_transition(omegas: Sequence[float], dt: float) -> np.ndarray:
    N = len(omegas)
    F = np.zeros((3 * N, 3 * N))
    for l, w in enumerate(omegas):
        F[l, N + l] = 1.0
        F[N + l, 2 * N + l] = 1.0
        F[2 * N + l, N + l] = -(w**2)
    return expm(F * dt)


def _mode_prior(comp: Component, t0: float) -> tuple[float, float, float]:
    w = 2.0 * np.pi * comp.frequency
    ph = w * t0 + comp.phase
    a = comp.amplitude
    return a * np.cos(ph), -a * w * np.sin(ph), -a * w * w * np.cos(ph)


def build_kf(
    components: Sequence[Component],
    dt: float,
    q_scale: float,
    r_var: float,
    model: str = "coupled",
    t0: float = 0.0,
    offset: float = 0.0,
    prior_var: float | None = None,
) -> KFState:
    """Filter seeded from FFT components; ``t0`` is the time since the FFT's first sample."""
    N = len(components)
    if N == 0:
        raise ValueError("need at least one component")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    omegas = np.array([2.0 * np.pi * c.frequency for c in components])
    stiffness = np.sqrt(omegas)

    x0 = np.zeros(3 * N)
    for l, comp in enumerate(components):
        x0[l], x0[N + l], x0[2 * N + l] = _mode_prior(comp, t0)
    C = np.zeros(3 * N)
    if model == "coupled":
        A = coupled_transition(stiffness, dt)
        C[N - 1] = 1.0
        x0[N - 1] += offset
    else:
        A = bank_transition(omegas, dt)
        C[:N] = 1.0
        x0[0] += offset

    amps = np.array([max(c.amplitude, 1e-6) for c in components])
    if prior_var is None:
        pos_var = amps**2 + offset**2 / N
    else:
        pos_var = np.full(N, prior_var)
    scale = np.concatenate([pos_var, pos_var * omegas**2 + 1e-12, pos_var * omegas**4 + 1e-12])
    return KFState(
        n_modes=N,
        xhat=x0,
        P=np.diag(scale),
        A=A,
        C=C,
        # Process noise relative to the prior: q_scale is the per-step fraction of each state's variance.
        Q=q_scale * np.diag(scale),
        R=float(r_var),
        stiffness=stiffness,
        model=model,
    )


def kf_predict(state: KFState) -> KFState:
    state.xhat = state.A @ state.xhat
    state.P = state.A @ state.P @ state.A.T + state.Q
    return state


def kf_update(state: KFState, z: float, r_var: float | None = None) -> KFState:
    R = state.R if r_var is None else r_var
    PC = state.P @ state.C
    S = float(state.C @ PC) + R
    if not S > 0:
        raise FloatingPointError("covariance collapse: innovation variance is not positive")
    gain = PC / S
    state.xhat = state.xhat + gain * (z - float(state.C @ state.xhat))
    # Joseph form keeps P symmetric positive semidefinite.
    I_KC = np.eye(len(gain)) - np.outer(gain, state.C)
    P = I_KC @ state.P @ I_KC.T + R * np.outer(gain, gain)
    state.P = 0.5 * (P + P.T)
    return state


def kf_step(state: KFState, z: float, r_var: float | None = None) -> KFState:
    """One predict + update; ``state.estimate`` is then the gradient estimate at this step."""
    return kf_update(kf_predict(state), z, r_var)


def q_schedule(
    pass_index: int,
    series_length: int,
    dt: float = 0.1,
    dominant_frequency: float | None = None,
    large: float = 1e-2,
    small: float = 1e-5,
    min_periods: float = 3.0,
) -> float:
    """Large process noise until the series spans ``min_periods`` dominant periods."""
    if pass_index <= 1 or not dominant_frequency:
        return large
    spanned = series_length * dt * dominant_frequency
    return small if spanned >= min_periods else large

"""Edge-cost estimation: direct updates, signal stitching, spectral analysis, Kalman filtering."""

from windpass.estimator.agent import EstimatorState, KFOptions, ResistanceEstimates
from windpass.estimator.costs import (
    CostTable,
    init_costs,
    update_case1,
    update_case2,
    update_cost_case34,
)
from windpass.estimator.kalman import KFState, build_kf, kf_step, q_schedule
from windpass.estimator.spectral import Component, fft_dominant_components
from windpass.estimator.stitching import (
    DegenerateWindow,
    JointFit,
    StitchedSeries,
    UnscalableWindow,
    estimate_resistance,
    joint_series,
    normalize,
    smooth_joint_fit,
    solve_joint_scales,
    stitch_window,
    stitch_window_noisy,
)

__all__ = [
    "Component",
    "CostTable",
    "DegenerateWindow",
    "EstimatorState",
    "KFOptions",
    "JointFit",
    "KFState",
    "ResistanceEstimates",
    "StitchedSeries",
    "UnscalableWindow",
    "build_kf",
    "estimate_resistance",
    "fft_dominant_components",
    "init_costs",
    "joint_series",
    "kf_step",
    "normalize",
    "q_schedule",
    "smooth_joint_fit",
    "solve_joint_scales",
    "stitch_window",
    "stitch_window_noisy",
    "update_case1",
    "update_case2",
    "update_cost_case34",
]

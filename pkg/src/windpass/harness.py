"""Trial orchestration, sweeps and CSV/JSON reports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from windpass.estimator.agent import EstimatorState, KFOptions
from windpass.grid import build_grid
from windpass.planner import oracle_plan, path_cost, plan
from windpass.traversal import PassRecord, execute_pass
from windpass.windfield import (
    SignalParams,
    WindField,
    constant_signal,
    generate_signal,
    sample_resistances,
    scale_to_wmax,
    solve_network,
)

log = logging.getLogger(__name__)

PASSES_COLUMNS = ["pass_index", "expected_cost", "incurred_cost", "path", "is_oracle_path"]
SIGNAL_COLUMNS = ["step", "t", "true_dpx2", "estimated_edpx2", "percent_error"]
SUMMARY_COLUMNS = [
    "grid",
    "case",
    "estimator",
    "n_seeds",
    "median_passes",
    "min_passes",
    "max_passes",
    "fraction_converged",
]


class ConfigError(ValueError):
    pass


def fmt(x: Any) -> str:
    """Six significant digits for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.6g}"


@dataclass
class TrialConfig:
    n1: int = 5
    n2: int = 7
    dx1: float = 100.0
    dx2: float = 250.0
    case: int = 1
    estimator: str = "stitch"
    u0: float = 15.0
    w_max: float = 10.0
    dt: float = 0.1
    n_terms: int = 6
    freq_mode: str = "period"
    freq_range: tuple[float, float] = (300.0, 500.0)
    noise_variance: float = 0.025
    max_passes: int = 30
    seed: int = 1
    output_dir: str | None = None
    antisymmetric_updates: bool = True
    static_cost: str = "mean"
    stitch_mode: str = "joint"
    kf_model: str = "oscillator_bank"
    kf_modes: int = 6
    q_large: float = 1e-2
    q_small: float = 1e-5

    def validate(self) -> "TrialConfig":
        if self.case not in (1, 2, 3, 4):
            raise ConfigError(f"case must be 1-4, got {self.case}")
        if self.estimator not in ("stitch", "kf"):
            raise ConfigError(f"estimator must be 'stitch' or 'kf', got {self.estimator!r}")
        if self.estimator == "kf" and self.case in (1, 2):
            raise ConfigError("the kf estimator only applies to cases 3 and 4")
        if not self.u0 > self.w_max:
            raise ConfigError("u0 must exceed w_max")
        if self.max_passes < 1:
            raise ConfigError("max_passes must be at least 1")
        if self.n1 < 3 or self.n2 < 3:
            raise ConfigError("grid too small for boundary rows")
        if self.dt <= 0 or self.dx1 <= 0 or self.dx2 <= 0:
            raise ConfigError("dt and edge lengths must be positive")
        if self.freq_mode not in ("period", "literal"):
            raise ConfigError(f"freq_mode must be 'period' or 'literal', got {self.freq_mode!r}")
        if self.kf_model not in ("coupled", "oscillator_bank"):
            raise ConfigError(f"unknown kf_model {self.kf_model!r}")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance must be nonnegative")
        if self.static_cost not in ("mean", "peak"):
            raise ConfigError(f"static_cost must be 'mean' or 'peak', got {self.static_cost!r}")
        if self.stitch_mode not in ("joint", "sequential"):
            raise ConfigError(f"stitch_mode must be 'joint' or 'sequential', got {self.stitch_mode!r}")
        return self

    @property
    def grid_label(self) -> str:
        """Size of the traversable interior, e.g. ``5x5`` for a 5 x 7 lattice."""
        return f"{self.n1}x{self.n2 - 2}"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["freq_range"] = list(self.freq_range)
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrialConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        try:
            if "freq_range" in kwargs:
                lo, hi = kwargs["freq_range"]
                kwargs["freq_range"] = (float(lo), float(hi))
            cfg = cls(**kwargs)
            for f in dataclasses.fields(cls):
                value = getattr(cfg, f.name)
                if isinstance(f.default, bool):
                    if not isinstance(value, bool):
                        raise ValueError(f"{f.name} must be true or false, got {value!r}")
                elif isinstance(f.default, int):
                    if isinstance(value, float) and not value.is_integer():
                        raise ValueError(f"{f.name} must be an integer, got {value!r}")
                    setattr(cfg, f.name, int(value))
                elif isinstance(f.default, float):
                    setattr(cfg, f.name, float(value))
                elif isinstance(f.default, str) and not isinstance(value, str):
                    raise ValueError(f"{f.name} must be a string, got {value!r}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def table_grid(size: int) -> tuple[int, int]:
    """Lattice dimensions for a ``size`` x ``size`` traversable interior."""
    return size, size + 2


@dataclass
class TrialResult:
    config: TrialConfig
    passes: list[PassRecord]
    convergence_pass: int | None
    oracle_path: tuple[int, ...]
    oracle_cost: float
    cost_digests: list[str]
    scenario: dict
    signal_trace: dict[str, list] = field(default_factory=dict)

    @property
    def paths(self) -> list[tuple[int, ...]]:
        return [p.path for p in self.passes]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "convergence_pass": self.convergence_pass,
            "oracle_path": list(self.oracle_path),
            "oracle_cost": self.oracle_cost,
            "cost_digests": self.cost_digests,
            "passes": [
                {
                    "pass_index": p.pass_index,
                    "path": list(p.path),
                    "expected_cost": p.expected_cost,
                    "incurred_cost": p.incurred_cost,
                    "start_step": p.start_step,
                    "windows": [[w.edge[0], w.edge[1], w.n, w.m, w.exact_crossing_time] for w in p.windows],
                }
                for p in self.passes
            ],
            "scenario": self.scenario,
            "signal_trace": self.signal_trace,
        }


def _seed_streams(seed: int) -> list[np.random.Generator]:
    # Independent streams: resistances, signal, tie-breaking, measurement noise.
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def build_signal(config: TrialConfig, rng: np.random.Generator) -> SignalParams:
    noise = config.noise_variance if config.case in (2, 4) else 0.0
    if config.case in (1, 2):
        return constant_signal(1.0, noise)
    return generate_signal(config.n_terms, config.freq_range, noise, rng, config.freq_mode)


def build_scenario(config: TrialConfig) -> WindField:
    res_rng, sig_rng, _, _ = _seed_streams(config.seed)
    graph = build_grid(config.n1, config.n2, config.dx1, config.dx2)
    resistances = sample_resistances(graph, res_rng)
    signal = build_signal(config, sig_rng)
    coeffs, _ = scale_to_wmax(solve_network(graph, resistances), signal, config.w_max)
    return WindField(graph, resistances, coeffs, signal, config.w_max)


def convergence_pass(paths: Sequence[Sequence[int]], target: Sequence[int]) -> int | None:
    """First pass (1-based) from which every planned path equals ``target``."""
    target = tuple(target)
    first = None
    for idx in range(len(paths) - 1, -1, -1):
        if tuple(paths[idx]) != target:
            break
        first = idx + 1
    return first


def cost_digest(costs: Mapping) -> str:
    blob = ";".join(f"{i},{j}:{costs[(i, j)]:.12e}" for i, j in sorted(costs))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def signal_trace(field_: WindField, state: EstimatorState, dt: float) -> dict[str, list]:
    start, est = state.signal_estimate()
    if len(est) == 0:
        return {"step": [], "t": [], "true_dpx2": [], "estimated_edpx2": [], "percent_error": []}
    steps = np.arange(start, start + len(est))
    truth = np.asarray(field_.signal.value(steps * dt), dtype=float)
    peak = float(np.max(np.abs(truth)))
    scaled = est * peak
    pct = 100.0 * np.abs(scaled - truth) / peak
    return {
        "step": steps.tolist(),
        "t": (steps * dt).tolist(),
        "true_dpx2": truth.tolist(),
        "estimated_edpx2": est.tolist(),
        "percent_error": pct.tolist(),
    }


def make_estimator(config: TrialConfig, graph) -> EstimatorState:
    return EstimatorState(
        graph,
        config.case,
        config.u0,
        config.w_max,
        config.dt,
        estimator=config.estimator,
        antisymmetric_updates=config.antisymmetric_updates,
        kf_options=KFOptions(
            model=config.kf_model, n_modes=config.kf_modes, q_large=config.q_large, q_small=config.q_small
        ),
        static_cost=config.static_cost,
        stitch_mode=config.stitch_mode,
    )


def run_trial(config: TrialConfig, field_: WindField | None = None) -> TrialResult:
    """Run ``max_passes`` sequential passes; deterministic given ``config.seed``."""
    config.validate()
    _, _, plan_rng, noise_rng = _seed_streams(config.seed)
    field_ = build_scenario(config) if field_ is None else field_
    graph = field_.graph
    oracle = oracle_plan(graph, field_, config.u0, gradient=config.static_cost)
    state = make_estimator(config, graph)
    passes: list[PassRecord] = []
    digests: list[str] = []
    step = 0
    for p in range(1, config.max_passes + 1):
        digests.append(cost_digest(state.costs))
        planned = plan(graph, state.costs, rng=plan_rng)
        record = execute_pass(
            field_, planned.vertices, config.u0, config.dt, step, noise_rng, pass_index=p, expected_cost=planned.expected_cost
        )
        state.absorb(record)
        passes.append(record)
        step = record.end_step + 1
    conv = convergence_pass([r.path for r in passes], oracle.vertices)
    trace = signal_trace(field_, state, config.dt) if config.case in (3, 4) else {}
    log.debug("seed %s case %s: converged at %s", config.seed, config.case, conv)
    return TrialResult(
        config=config,
        passes=passes,
        convergence_pass=conv,
        oracle_path=oracle.vertices,
        oracle_cost=oracle.expected_cost,
        cost_digests=digests,
        scenario=field_.to_dict(),
        signal_trace=trace,
    )


# -- sweeps -------------------------------------------------------------------


def _trial_convergence(config: TrialConfig) -> int | None:
    return run_trial(config).convergence_pass


def summarize(values: Sequence[int | None]) -> dict[str, Any]:
    """Median/min/max with non-converged trials ranked above every converged one."""
    ranked = [math.inf if v is None else v for v in values]
    converged = [v for v in values if v is not None]
    med = statistics.median(ranked) if ranked else math.inf
    return {
        "n_seeds": len(values),
        "median_passes": None if math.isinf(med) else med,
        "min_passes": min(converged) if converged else None,
        "max_passes": max(converged) if len(converged) == len(values) and converged else None,
        "fraction_converged": len(converged) / len(values) if values else 0.0,
    }


def run_sweep(
    template: TrialConfig,
    n_seeds: int,
    grids: Iterable[tuple[int, int]] | None = None,
    cases: Iterable[int] | None = None,
    estimators: Iterable[str] | None = None,
    workers: int = 1,
) -> tuple[list[dict], dict[tuple, list[int | None]]]:
    """Run seeds ``1..n_seeds`` for every (grid, case, estimator) cell.

    Returns summary rows and the raw per-seed convergence passes per cell.
    """
    if n_seeds < 1:
        raise ConfigError("n_seeds must be at least 1")
    grids = list(grids) if grids is not None else [(template.n1, template.n2)]
    cases = list(cases) if cases is not None else [template.case]
    estimators = list(estimators) if estimators is not None else [template.estimator]
    cells = []
    for n1, n2 in grids:
        for case in cases:
            for est in estimators:
                if est == "kf" and case in (1, 2):
                    continue
                cells.append((n1, n2, case, est))
    configs = {
        cell: [
            dataclasses.replace(template, n1=cell[0], n2=cell[1], case=cell[2], estimator=cell[3], seed=s)
            for s in range(1, n_seeds + 1)
        ]
        for cell in cells
    }
    raw: dict[tuple, list[int | None]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell, cfgs in configs.items():
                raw[cell] = list(pool.map(_trial_convergence, cfgs))
    else:
        for cell, cfgs in configs.items():
            raw[cell] = [_trial_convergence(c) for c in cfgs]
    rows = []
    for (n1, n2, case, est), values in raw.items():
        row = {"grid": f"{n1}x{n2 - 2}", "case": case, "estimator": est}
        row.update(summarize(values))
        rows.append(row)
    return rows, raw


# -- reports ------------------------------------------------------------------


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def passes_rows(result: Mapping) -> list[list]:
    oracle = list(result["oracle_path"])
    return [
        [p["pass_index"], p["expected_cost"], p["incurred_cost"], "-".join(map(str, p["path"])), list(p["path"]) == oracle]
        for p in result["passes"]
    ]


def emit_reports(result: TrialResult | Mapping, output_dir: str | Path) -> list[Path]:
    """Write passes.csv, signal.csv, scenario.json and result.json for one trial."""
    data = result.to_dict() if isinstance(result, TrialResult) else dict(result)
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    path = out / "passes.csv"
    _write_csv(path, PASSES_COLUMNS, passes_rows(data))
    written.append(path)

    trace = data.get("signal_trace") or {}
    path = out / "signal.csv"
    _write_csv(path, SIGNAL_COLUMNS, zip(*(trace.get(c, []) for c in SIGNAL_COLUMNS)))
    written.append(path)

    path = out / "scenario.json"
    scenario = {"config": data["config"], "field": data["scenario"]}
    path.write_text(json.dumps(scenario, indent=1, sort_keys=True) + "\n")
    written.append(path)

    path = out / "result.json"
    path.write_text(json.dumps(data, sort_keys=True) + "\n")
    written.append(path)
    return written


def emit_summary(rows: Sequence[Mapping], output_dir: str | Path) -> Path:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "summary.csv"
    _write_csv(path, SUMMARY_COLUMNS, ([r[c] for c in SUMMARY_COLUMNS] for r in rows))
    return path


def expected_cost_check(result: TrialResult) -> float:
    """Largest gap between each pass's expected cost and its path summed over the pre-pass table.

    Needs the trial to be re-run; used only in tests.
    """
    config = result.config
    field_ = WindField.from_dict(result.scenario)
    state = make_estimator(config, field_.graph)
    worst = 0.0
    for rec in result.passes:
        worst = max(worst, abs(path_cost(rec.path, state.costs) - rec.expected_cost))
        state.absorb(rec)
    return worst

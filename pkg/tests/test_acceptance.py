"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line, shown in the terminal summary.
Criterion 1 runs 1200 trials and takes several minutes on one core.
"""

import dataclasses
import math
import os
import statistics

import numpy as np
import pytest

from windpass.estimator import StitchedSeries, stitch_window
from windpass.grid import build_grid
from windpass.harness import TrialConfig, build_scenario, emit_reports, run_sweep, run_trial, table_grid
from windpass.planner import enumerate_min_cost, path_cost, plan
from windpass.traversal import execute_pass, traverse_edge
from windpass.windfield import WindField, generate_signal, synthesize_field

TABLE = {
    5: {1: 6, 2: 6, 3: 6, 4: 7},
    7: {1: 12, 2: 12, 3: 12, 4: 14},
    9: {1: 15, 2: 16, 3: 15, 4: 18},
}
SEEDS = 100
WORKERS = os.cpu_count() or 1


def ranked_median(values):
    return statistics.median(math.inf if v is None else v for v in values)


@pytest.fixture(scope="module")
def table_sweep():
    _, raw = run_sweep(
        TrialConfig(),
        SEEDS,
        grids=[table_grid(n) for n in TABLE],
        cases=[1, 2, 3, 4],
        estimators=["stitch"],
        workers=WORKERS,
    )
    return {(n1, case): values for (n1, _, case, _), values in raw.items()}


@pytest.fixture(scope="module")
def case1_results():
    out = []
    for n in TABLE:
        n1, n2 = table_grid(n)
        for seed in range(1, SEEDS + 1):
            out.append(run_trial(TrialConfig(n1=n1, n2=n2, case=1, seed=seed)))
    return out


def test_criterion_01_table_reproduction(table_sweep, verdict):
    misses = []
    cells = []
    for n, row in TABLE.items():
        for case, target in row.items():
            values = table_sweep[(n, case)]
            med = ranked_median(values)
            frac = sum(v is not None for v in values) / len(values)
            ok = abs(med - target) <= 2 and frac >= 0.95
            cells.append(f"{n}x{n}/c{case}: median {med:g} (target {target}) conv {frac:.0%}")
            if not ok:
                misses.append(cells[-1])
    for line in cells:
        print(line)
    verdict(1, not misses, f"{12 - len(misses)}/12 cells within +-2 and >=95% converged" + (f"; misses: {'; '.join(misses)}" if misses else ""))
    assert not misses


def test_criterion_02_case1_lower_bound(table_sweep, verdict):
    bad = []
    for n in TABLE:
        base = ranked_median(table_sweep[(n, 1)])
        for case in (2, 3, 4):
            other = ranked_median(table_sweep[(n, case)])
            if not base <= other:
                bad.append(f"{n}x{n}: case 1 {base:g} > case {case} {other:g}")
    verdict(2, not bad, "case-1 median <= cases 2-4 on every grid" if not bad else "; ".join(bad))
    assert not bad


def test_criterion_03_case1_exactness(case1_results, verdict):
    worst = 0.0
    checked = 0
    for res in case1_results:
        if res.convergence_pass is None:
            continue
        # The convergence pass may still fly edges it has never measured; every later pass flies known ones.
        for rec in res.passes[res.convergence_pass :]:
            worst = max(worst, abs(rec.expected_cost - rec.incurred_cost) / rec.incurred_cost)
            checked += 1
    ok = checked > 0 and worst <= 1e-3
    verdict(3, ok, f"max |expected-incurred|/incurred after convergence = {worst:.2e} over {checked} passes")
    assert ok


def test_criterion_04_optimistic_start(case1_results, verdict):
    failures = 0
    strict_failures = 0
    for res in case1_results:
        first = res.passes[0]
        field_ = WindField.from_dict(res.scenario)
        if first.incurred_cost < first.expected_cost:
            failures += 1
        below_cap = any(field_.coeff[e] < field_.w_max for e in zip(first.path[:-1], first.path[1:]))
        if below_cap and not first.incurred_cost > first.expected_cost:
            strict_failures += 1
    ok = failures == 0 and strict_failures == 0
    verdict(4, ok, f"pass-1 incurred >= expected on {len(case1_results) - failures}/{len(case1_results)} case-1 trials")
    assert ok


def test_criterion_05_planner_oracle(verdict):
    rng = np.random.default_rng(2024)
    shapes = [(n1, n2) for n1 in range(3, 6) for n2 in range(3, 8) if n1 * (n2 - 2) <= 25]
    mismatches = 0
    for k in range(200):
        n1, n2 = shapes[k % len(shapes)]
        g = build_grid(n1, n2, 1.0, 1.0)
        costs = {e: float(rng.uniform(0.1, 10.0)) for e in g.traversable_edges}
        if k % 5 == 0:  # integer costs create exact ties
            costs = {e: float(rng.integers(1, 4)) for e in g.traversable_edges}
        got = plan(g, costs, rng=np.random.default_rng(k))
        _, optimal = enumerate_min_cost(g, costs)
        best = min(path_cost(p, costs) for p in optimal)
        if path_cost(got.vertices, costs) != best:
            mismatches += 1
    verdict(5, mismatches == 0, f"{200 - mismatches}/200 random tables match exhaustive enumeration exactly")
    assert mismatches == 0


def test_criterion_06_windfield_invariants(verdict):
    worst_flow = worst_peak = 0.0
    antisym = True
    for seed in range(1, 51):
        n = (5, 7, 9)[seed % 3]
        n1, n2 = table_grid(n)
        f = build_scenario(TrialConfig(n1=n1, n2=n2, case=3, seed=seed))
        g = f.graph
        for i, j in g.edges:
            antisym &= f.coeff[(i, j)] == -f.coeff[(j, i)]
        for v in g.vertices:
            if g.is_traversable(v):
                net = sum(f.coeff[(v, u)] for u in g.vertices if g.has_edge(v, u))
                worst_flow = max(worst_flow, abs(net))
        t = np.linspace(0.0, f.signal.dense_times()[-1], 1_000_001)
        top = max(abs(c) for c in f.coeff.values()) * float(np.max(np.abs(f.signal.value(t))))
        worst_peak = max(worst_peak, abs(top - f.w_max))
    ok = antisym and worst_flow <= 1e-9 and worst_peak <= 1e-6
    verdict(6, ok, f"antisymmetry exact={antisym}, max nodal imbalance {worst_flow:.1e}, max |peak-w_max| {worst_peak:.1e}")
    assert ok


def test_criterion_07_integrator(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(50):
        g = build_grid(5, 7, 100.0, 250.0)
        sig = generate_signal(6, (300, 500), 0.0, rng)
        f = synthesize_field(g, sig, 10.0, rng)
        edge = g.traversable_edges[int(rng.integers(len(g.traversable_edges)))]
        entry = int(rng.integers(0, 20_000))
        coarse = traverse_edge(f, edge, entry, 15.0, 0.1).exact_crossing_time
        fine = traverse_edge(f, edge, entry * 100, 15.0, 0.001).exact_crossing_time
        worst = max(worst, abs(coarse - fine) / fine)
    verdict(7, worst <= 0.01, f"max relative crossing-time error vs dt=0.001: {worst:.2e}")
    assert worst <= 0.01


def test_criterion_08_stitching_fidelity(verdict):
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        g = build_grid(3, 3, 100.0, 250.0)
        coeff = {e: 0.0 for e in g.edges}
        coeff[(4, 5)], coeff[(5, 4)] = 2.0, -2.0
        coeff[(5, 6)], coeff[(6, 5)] = 4.0, -4.0
        f = WindField(g, {e: 1.0 for e in g.edges}, coeff, generate_signal(6, (300, 500), 0.0, rng), 5.0)
        rec = execute_pass(f, (4, 5, 6), 15.0, 0.1, int(rng.integers(0, 5000)))
        series = StitchedSeries()
        for w in rec.windows:
            stitch_window(series, w, 0.1)
        steps = np.arange(series.start_step, series.end_step)
        truth = f.signal.value(steps * 0.1)
        est = series.edpx2
        scale = float(est @ truth / (est @ est))
        worst = max(worst, float(np.max(np.abs(scale * est - truth)) / np.max(np.abs(truth))))
    verdict(8, worst <= 0.02, f"max error of stitched series vs true gradient (one global scale): {100 * worst:.2e}%")
    assert worst <= 0.02


def final_quarter_error(result):
    pct = np.asarray(result.signal_trace["percent_error"])
    return float(np.mean(pct[-len(pct) // 4 :]))


def test_criterion_09_kf_vs_curve_fit(verdict):
    wins = 0
    conv = {"stitch": [], "kf": []}
    for seed in range(1, 21):
        base = TrialConfig(case=4, seed=seed)
        a = run_trial(base)
        b = run_trial(dataclasses.replace(base, estimator="kf"))
        wins += final_quarter_error(b) < final_quarter_error(a)
        conv["stitch"].append(a.convergence_pass)
        conv["kf"].append(b.convergence_pass)
    med_s, med_k = ranked_median(conv["stitch"]), ranked_median(conv["kf"])
    ok = wins >= 15 and med_k >= med_s - 1
    verdict(9, ok, f"kf lower final-quarter error in {wins}/20 pairs (need 15); median passes kf {med_k:g} vs stitch {med_s:g}")
    assert wins >= 15
    assert med_k >= med_s - 1


def test_criterion_10_determinism(tmp_path, verdict):
    configs = [
        TrialConfig(case=1, seed=11),
        TrialConfig(case=2, seed=12),
        TrialConfig(case=3, seed=13, n1=7, n2=9),
        TrialConfig(case=4, seed=14),
        TrialConfig(case=4, seed=15, estimator="kf", max_passes=10),
    ]
    differing = []
    for k, cfg in enumerate(configs):
        emit_reports(run_trial(cfg), tmp_path / f"{k}a")
        emit_reports(run_trial(dataclasses.replace(cfg)), tmp_path / f"{k}b")
        for name in ("passes.csv", "signal.csv"):
            if (tmp_path / f"{k}a" / name).read_bytes() != (tmp_path / f"{k}b" / name).read_bytes():
                differing.append(f"config {k} {name}")
    verdict(10, not differing, f"{len(configs)} configs re-run with byte-identical CSVs" if not differing else ", ".join(differing))
    assert not differing

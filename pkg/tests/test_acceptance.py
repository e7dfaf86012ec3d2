"""Acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line, printed in the
terminal summary. Seeds and replication counts are fixed in advance.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nonstat_lru import (
    DeterministicVolume,
    ExponentialProfile,
    ParetoVolume,
    PowerLawProfile,
    TrafficMix,
    asymptote,
    hit_probability,
    make_profile,
    small_cache_estimate,
    solve,
    solve_eviction_time,
)
from nonstat_lru.config import ExperimentSpec, SimOverrides
from nonstat_lru.experiments import find_experiments, run_experiment
from nonstat_lru.simulator import SimConfig, default_lookback, default_warmup, estimate_hit_probability
from nonstat_lru.simulator import simulate_irm
from nonstat_lru.stationary import ZipfCatalog, solve_stationary_tc, stationary_hit_probability

PARETO = ParetoVolume(1.0, 3.0)
SEED = 0
REPS = 20


def record(n, ok, detail, started):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f} s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_large_cache_asymptote():
    t0 = time.perf_counter()
    target = 1 - (1 - 3 * 0.08606249132456073) / 1.5  # E_4(1) from scipy.special.expn
    a = asymptote(TrafficMix.single(1.0, ExponentialProfile(10.0), PARETO))
    mix = TrafficMix.single(100.0, ExponentialProfile(10.0), PARETO)
    lookback = default_lookback(mix)
    # capacity must exceed the distinct contents of one replication
    capacity = 10**6
    cfg = SimConfig(mix, capacity, horizon=200.0, warmup=default_warmup(mix, capacity),
                    lookback=lookback, replications=REPS, base_seed=SEED)
    out = estimate_hit_probability(cfg)
    assert out.contents_generated / REPS < capacity
    ok_value = abs(a - 0.5055) <= 1e-3 and abs(a - target) < 1e-12
    ok_sim = out.covers(a)
    record(1, ok_value and ok_sim,
           f"asymptote {a:.6f}; simulation {out.hit_ratio_mean:.5f} "
           f"CI [{out.ci95[0]:.5f}, {out.ci95[1]:.5f}]", t0)
    assert ok_value and ok_sim


def _coverage(profile_factory):
    inside, details = 0, []
    for L in (1.0, 10.0):
        mix = TrafficMix.single(100.0, profile_factory(L), PARETO)
        spec = ExperimentSpec(name=f"agree.L{L:g}", mix=mix, cache_sizes=[1, 10, 100, 1000],
                              sim=SimOverrides(replications=REPS, horizon=200.0, seed=SEED))
        for row in run_experiment(spec).rows:
            hit = row["sim_ci95_lo"] <= row["p_hit_model"] <= row["sim_ci95_hi"]
            inside += hit
            if not hit:
                details.append(f"L={L:g} C={row['C']:g}: model {row['p_hit_model']:.5f} vs "
                               f"[{row['sim_ci95_lo']:.5f}, {row['sim_ci95_hi']:.5f}]")
    return inside, details


@pytest.mark.parametrize("kind", ["exponential", "powerlaw"])
def test_criterion_2_model_matches_simulation(kind):
    t0 = time.perf_counter()
    factory = ExponentialProfile if kind == "exponential" else (lambda L: PowerLawProfile(L, 3.0))
    inside, misses = _coverage(factory)
    ok = inside >= 7
    record(2, ok, f"[{kind}] model inside 95% CI at {inside}/8 points"
           + (f"; outside: {'; '.join(misses)}" if misses else ""), t0)
    assert ok, misses


def test_criterion_3_profile_exponent_values():
    t0 = time.perf_counter()
    p = {}
    for zeta in (4.0, 2.2):
        mix = TrafficMix.single(1e4, PowerLawProfile(10.0, zeta), PARETO)
        p[zeta] = hit_probability(mix, solve_eviction_time(mix, 100.0))
    ok4 = 0.0022 <= p[4.0] <= 0.0042
    ok22 = 0.0007 <= p[2.2] <= 0.0013
    record(3, ok4 and ok22,
           f"zeta=4: {p[4.0]:.6f} in [0.0022, 0.0042] {ok4}; "
           f"zeta=2.2: {p[2.2]:.6f} in [0.0007, 0.0013] {ok22}", t0)
    assert ok4 and ok22


def test_criterion_4_small_cache_law():
    t0 = time.perf_counter()
    mix = TrafficMix.single(1e4, ExponentialProfile(10.0), PARETO)
    errs = {}
    for C in (100, 300, 1000):
        est = small_cache_estimate(mix, C)
        errs[C] = abs(hit_probability(mix, solve_eviction_time(mix, C)) - est) / est
    est1000 = small_cache_estimate(mix, 1000)
    ok = all(e <= 0.10 for e in errs.values()) and abs(est1000 - 0.006667) <= 1e-6
    record(4, ok, "relative gaps " + ", ".join(f"C={C}: {e:.4f}" for C, e in errs.items())
           + f"; estimate at C=1000 {est1000:.7f}", t0)
    assert ok


def _random_configuration(rng):
    kind = rng.choice(["exponential", "powerlaw", "uniform", "triangular"])
    L = float(10 ** rng.uniform(-1, 2.5))
    zeta = float(rng.uniform(1.2, 5.0)) if kind == "powerlaw" else None
    if rng.random() < 0.2:
        vol = DeterministicVolume(float(10 ** rng.uniform(-1, 1)))
    else:
        vol = ParetoVolume(float(10 ** rng.uniform(-1, 1)), float(rng.uniform(1.1, 6.0)))
    mix = TrafficMix.single(float(10 ** rng.uniform(0, 4)), make_profile(kind, L, zeta), vol)
    C = float(10 ** rng.uniform(-1, 6))
    return mix, C


def test_criterion_5_bounds_battery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240611)
    violations = []
    for i in range(50):
        mix, C = _random_configuration(rng)
        sol = solve(mix, C)
        ok = sol.error is None and sol.bounds_ok()
        if sol.error is None and math.isfinite(sol.eviction_time):
            ok &= sol.occupancy_upper >= C * (1 - 1e-9)
            if sol.occupancy_lower is not None:
                ok &= sol.occupancy_lower <= C * (1 + 1e-9)
        ok &= sol.p_hit_asymptote - sol.p_hit <= sol.tail_gap_bound + 1e-9
        if not ok:
            violations.append(f"#{i} {mix} C={C:g}")
    record(5, not violations, f"50 configurations, {len(violations)} violations", t0)
    assert not violations, violations


def test_criterion_6_multiclass_setups():
    t0 = time.perf_counter()
    inside, total, misses = 0, 0, []
    for key in ("S1", "S5"):
        desk = find_experiments(f"fig6-desk.{key}")[0]
        spec = ExperimentSpec(name=desk.name, mix=desk.mix, cache_sizes=[10, 100, 1000],
                              sim=SimOverrides(replications=REPS, seed=SEED))
        for row in run_experiment(spec).rows:
            total += 1
            if row["sim_ci95_lo"] <= row["p_hit_model"] <= row["sim_ci95_hi"]:
                inside += 1
            else:
                misses.append(f"{key} C={row['C']:g}: model {row['p_hit_model']:.5f} vs "
                              f"[{row['sim_ci95_lo']:.5f}, {row['sim_ci95_hi']:.5f}]")
    ok = inside == total
    record(6, ok, f"model inside 95% CI at {inside}/{total} points"
           + (f"; outside: {'; '.join(misses)}" if misses else ""), t0)
    assert ok, misses


def test_criterion_7_stationary_catalogue():
    t0 = time.perf_counter()
    misses, inside, total = [], 0, 0
    sizes = [10, 100, 1000]
    for alpha in (0.8, 1.2):
        cat = ZipfCatalog(10_000, alpha)
        outs = simulate_irm(cat, sizes, n_requests=100_000, replications=REPS, base_seed=SEED)
        for C, out in zip(sizes, outs):
            p = stationary_hit_probability(cat, solve_stationary_tc(cat, C))
            total += 1
            if out.covers(p):
                inside += 1
            else:
                misses.append(f"alpha={alpha} C={C}: model {p:.5f} vs "
                              f"[{out.ci95[0]:.5f}, {out.ci95[1]:.5f}]")
    golden = ZipfCatalog(2, 1.0, total_rate=3.0)
    tc = solve_stationary_tc(golden, 1)
    p = stationary_hit_probability(golden, tc)
    tc_ref = -math.log((math.sqrt(5) - 1) / 2)
    p_ref = (2 / 3) * (1 - math.exp(-2 * tc_ref)) + (1 / 3) * (1 - math.exp(-tc_ref))
    ok_golden = abs(tc - tc_ref) <= 1e-9 and abs(p - p_ref) <= 1e-9
    ok = inside == total and ok_golden
    record(7, ok, f"model inside IRM 95% CI at {inside}/{total} points; golden ratio T_c {tc:.10f} "
           f"p_hit {p:.10f} ({'match' if ok_golden else 'mismatch'})"
           + (f"; outside: {'; '.join(misses)}" if misses else ""), t0)
    assert ok, misses


def test_criterion_8_determinism_and_scale_invariance():
    t0 = time.perf_counter()
    spec = find_experiments("fig1-desk.L1")[0]
    first, second = run_experiment(spec).to_csv(), run_experiment(spec).to_csv()
    identical = first == second
    worst = 0.0
    mixes = [TrafficMix.single(100.0, ExponentialProfile(10.0), PARETO),
             TrafficMix.single(100.0, PowerLawProfile(10.0, 2.2), PARETO),
             find_experiments("fig6-desk.S1")[0].mix]
    for mix in mixes:
        for C in (1, 10, 100, 1000):
            a = solve(mix, C).p_hit
            b = solve(mix.with_gamma(10 * mix.gamma), 10 * C).p_hit
            worst = max(worst, abs(a - b))
    ok = identical and worst < 1e-6
    record(8, ok, f"byte-identical CSV {identical}; max |p_hit change| under 10x scaling {worst:.2e}", t0)
    assert ok

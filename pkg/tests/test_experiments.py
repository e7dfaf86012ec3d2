import csv
import io
import math

import pytest

from nonstat_lru import ExponentialProfile, ParetoVolume, TrafficMix, solve
from nonstat_lru.config import ExperimentSpec, SimOverrides
from nonstat_lru.errors import ConfigError, NumericError
from nonstat_lru.experiments import (
    DESK_GAMMA,
    FULL_GAMMA,
    builtin_experiments,
    find_experiments,
    run_experiment,
    write_outputs,
)
from nonstat_lru.stationary import ZipfCatalog

MIX = TrafficMix.single(100.0, ExponentialProfile(1.0), ParetoVolume(1.0, 3.0))
SIM = SimOverrides(replications=3, horizon=30.0, warmup=10.0, lookback=7.0, seed=1)


def rows_of(table):
    return list(csv.DictReader(io.StringIO(table.to_csv())))


def test_model_only_table():
    spec = ExperimentSpec(name="m", mix=MIX, cache_sizes=[1, 10, 100])
    table = run_experiment(spec)
    assert table.columns == ["C", "T_C", "p_hit_model", "p_hit_asymptote",
                             "small_cache_estimate", "bounds_ok", "error"]
    rows = rows_of(table)
    assert [float(r["C"]) for r in rows] == [1, 10, 100]
    assert float(rows[1]["p_hit_model"]) == pytest.approx(solve(MIX, 10.0).p_hit, rel=1e-9)
    assert all(r["bounds_ok"] == "true" and r["error"] == "" for r in rows)


def test_simulation_columns():
    spec = ExperimentSpec(name="s", mix=MIX, cache_sizes=[5, 50], sim=SIM)
    table = run_experiment(spec)
    for col in ["p_hit_sim_mean", "sim_ci95_lo", "sim_ci95_hi", "rel_err_model_vs_sim"]:
        assert col in table.columns
    for r in table.rows:
        assert r["sim_ci95_lo"] <= r["p_hit_sim_mean"] <= r["sim_ci95_hi"]
        assert r["rel_err_model_vs_sim"] == pytest.approx(
            (r["p_hit_model"] - r["p_hit_sim_mean"]) / r["p_hit_sim_mean"])
    assert "model inside simulation 95% CI" in table.summary()


def test_simulation_only_and_skip():
    spec = ExperimentSpec(name="s", mix=MIX, cache_sizes=[5], sim=SIM)
    sim_only = run_experiment(spec, model=False)
    assert "p_hit_model" not in sim_only.columns and "p_hit_sim_mean" in sim_only.columns
    no_sim = run_experiment(spec, simulate=False)
    assert "p_hit_sim_mean" not in no_sim.columns
    with pytest.raises(ConfigError):
        run_experiment(ExperimentSpec(name="x", mix=MIX, cache_sizes=[5]), model=False)


def test_csv_is_byte_identical_across_runs():
    spec = ExperimentSpec(name="s", mix=MIX, cache_sizes=[5, 50], sim=SIM)
    assert run_experiment(spec).to_csv() == run_experiment(spec).to_csv()
    other_seed = run_experiment(spec, seed=2).to_csv()
    assert other_seed != run_experiment(spec).to_csv()


def test_overrides_take_precedence():
    spec = ExperimentSpec(name="s", mix=MIX, cache_sizes=[5], sim=SIM)
    a = run_experiment(spec, replications=4)
    b = run_experiment(ExperimentSpec(name="s", mix=MIX, cache_sizes=[5],
                                      sim=SimOverrides(replications=4, horizon=30.0, warmup=10.0,
                                                       lookback=7.0, seed=1)))
    assert a.to_csv() == b.to_csv()


def test_failures_recorded_in_row(monkeypatch):
    from nonstat_lru import analytic

    real = analytic.solve

    def flaky(mix, C, *a):
        if C == 10:
            raise NumericError("did not converge")
        return real(mix, C, *a)

    monkeypatch.setattr(analytic, "solve", flaky)
    table = run_experiment(ExperimentSpec(name="f", mix=MIX, cache_sizes=[1, 10, 100]))
    assert len(table.failed_rows) == 1
    assert table.rows[1]["error"].startswith("NumericError")
    assert table.rows[1]["bounds_ok"] is False
    assert "failed 1" in table.summary()


def test_stationary_table():
    spec = ExperimentSpec(name="z", catalog=ZipfCatalog(1000, 0.8), cache_sizes=[10, 100],
                          sim=SimOverrides(replications=3, requests=2000))
    table = run_experiment(spec)
    assert table.columns[:3] == ["C", "T_C", "p_hit_model"]
    assert "bounds_ok" not in table.columns
    assert all(0 < r["p_hit_sim_mean"] < 1 for r in table.rows)


def test_sizes_beyond_catalogue_rejected():
    with pytest.raises(ConfigError) as info:
        ExperimentSpec(name="z", catalog=ZipfCatalog(5, 0.8), cache_sizes=[2, 10])
    assert info.value.path == "cache_sizes"


def test_non_finite_values_formatted():
    spec = ExperimentSpec(name="z", catalog=ZipfCatalog(10, 0.8), cache_sizes=[5, 10])
    rows = rows_of(run_experiment(spec))
    assert rows[1]["T_C"] == "inf" and rows[1]["p_hit_model"] == "1"


def test_write_outputs(tmp_path):
    spec = ExperimentSpec(name="w", mix=MIX, cache_sizes=[1, 10], outputs=("csv", "summary"))
    table = run_experiment(spec)
    paths = write_outputs(spec, table, tmp_path / "out")
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["w.csv", "w.summary.txt"]
    assert open(paths[0]).read() == table.to_csv()
    assert "bound violations 0" in open(paths[1]).read()


# --- built-in setups ---------------------------------------------------------------------

def test_builtin_names():
    specs = builtin_experiments()
    names = [s.name for s in specs]
    assert len(names) == len(set(names))
    groups = {s.group for s in specs}
    for g in ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"]:
        assert g in groups and f"{g}-desk" in groups
    assert len(find_experiments("fig6")) == 5
    assert [s.name for s in find_experiments("fig1-desk.L10")] == ["fig1-desk.L10"]
    with pytest.raises(ConfigError):
        find_experiments("fig99")


def test_desk_variants_are_scaled_copies():
    full = {s.name: s for s in builtin_experiments()}
    for name, desk in full.items():
        if "-desk." not in name or desk.mix is None:
            continue
        ref = full[name.replace("-desk", "")]
        assert desk.mix == ref.mix.with_gamma(DESK_GAMMA)
        assert ref.mix.gamma == FULL_GAMMA
        ratio = FULL_GAMMA / DESK_GAMMA
        assert desk.cache_sizes == tuple(c / ratio for c in ref.cache_sizes if c / ratio >= 1)
        assert desk.sim.replications == 20


def test_setup_weights():
    s1 = find_experiments("fig6.S1")[0]
    assert [c.weight for c in s1.mix.classes] == [0.4, 0.1, 0.1, 0.4]
    assert [c.profile.lifetime for c in s1.mix.classes] == [1.0, 10.0, 50.0, 300.0]
    s5 = find_experiments("fig6.S5")[0]
    assert [c.weight for c in s5.mix.classes] == [0.05, 0.45, 0.45, 0.05]


def test_volume_sweeps_keep_their_invariant():
    for s in find_experiments("fig3"):
        assert s.mix.classes[0].volumes.beta == 3.0
    for s in find_experiments("fig4"):
        assert s.mix.classes[0].volumes.mean == pytest.approx(1.5)


def test_lifetime_ordering_full_scale():
    curves = [run_experiment(s).column("p_hit_model") for s in find_experiments("fig1")]
    sizes = find_experiments("fig1")[0].cache_sizes
    for shorter, longer in zip(curves, curves[1:]):
        assert all(a > b for a, b, C in zip(shorter, longer, sizes) if C <= 1e4)


def test_mean_volume_only_matters_for_large_caches():
    curves = {s.name: run_experiment(s).column("p_hit_model") for s in find_experiments("fig3")}
    sizes = find_experiments("fig3")[0].cache_sizes
    small = [i for i, C in enumerate(sizes) if C <= 1e4]
    large = [i for i, C in enumerate(sizes) if C >= 3e5]
    vals = list(curves.values())
    for i in small:
        col = [v[i] for v in vals]
        assert max(col) / min(col) - 1 < 0.08
    for i in large:
        col = [v[i] for v in vals]
        assert max(col) / min(col) - 1 > 0.2


@pytest.mark.parametrize("group", ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"])
def test_full_scale_bounds_hold(group):
    for spec in find_experiments(group):
        table = run_experiment(spec)
        assert not table.failed_rows
        assert all(table.column("bounds_ok"))
        p = table.column("p_hit_model")
        assert all(b >= a for a, b in zip(p, p[1:]))
        assert all(math.isfinite(x) for x in table.column("T_C"))

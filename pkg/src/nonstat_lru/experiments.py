"""Sweeps over cache sizes: model tables, optional simulation, built-in setups."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List

from . import analytic, simulator, stationary
from .analytic import ContentClass, TrafficMix
from .config import ExperimentSpec, SimOverrides
from .errors import ConfigError, DomainError
from .profiles import ExponentialProfile, PowerLawProfile
from .stationary import ZipfCatalog
from .volumes import ParetoVolume

__all__ = [
    "ResultTable",
    "run_experiment",
    "builtin_experiments",
    "find_experiments",
    "write_outputs",
    "FULL_GAMMA",
    "DESK_GAMMA",
]

FULL_GAMMA = 1e4  # contents per day
DESK_GAMMA = 100.0
# model depends on (gamma, C) only through C / gamma
DESK_SCALE = FULL_GAMMA / DESK_GAMMA
FULL_SIZES = (100, 300, 1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000)

MODEL_COLUMNS = ["C", "T_C", "p_hit_model", "p_hit_asymptote", "small_cache_estimate"]
SIM_COLUMNS = ["p_hit_sim_mean", "sim_ci95_lo", "sim_ci95_hi"]
STATIONARY_COLUMNS = ["C", "T_C", "p_hit_model"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.10g" % v


@dataclass
class ResultTable:
    name: str
    columns: List[str]
    rows: List[Dict[str, object]] = field(default_factory=list)

    @property
    def failed_rows(self):
        return [r for r in self.rows if r.get("error")]

    def column(self, name):
        return [r.get(name) for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def summary(self):
        lines = [f"experiment {self.name}",
                 f"points {len(self.rows)}, failed {len(self.failed_rows)}"]
        if "bounds_ok" in self.columns:
            bad = sum(1 for r in self.rows if r.get("bounds_ok") is False)
            lines.append(f"bound violations {bad}")
        if "p_hit_sim_mean" in self.columns and "p_hit_model" in self.columns:
            ok = [r for r in self.rows if not r.get("error")]
            inside = sum(1 for r in ok if r["sim_ci95_lo"] <= r["p_hit_model"] <= r["sim_ci95_hi"])
            lines.append(f"model inside simulation 95% CI at {inside}/{len(ok)} points")
            errs = [(abs(r["rel_err_model_vs_sim"]), r["C"]) for r in ok
                    if math.isfinite(r["rel_err_model_vs_sim"])]
            if errs:
                e, c = max(errs)
                lines.append(f"max |relative error| model vs simulation {e:.4g} at C={c:g}")
        return "\n".join(lines) + "\n"


def _model_row(sol):
    return {
        "C": sol.cache_size,
        "T_C": sol.eviction_time,
        "p_hit_model": sol.p_hit,
        "p_hit_asymptote": sol.p_hit_asymptote,
        "small_cache_estimate": sol.small_cache_estimate,
        "bounds_ok": sol.bounds_ok(),
        "error": sol.error or "",
    }


def _stationary_row(cat, C):
    try:
        tc = stationary.solve_stationary_tc(cat, C)
        return {"C": C, "T_C": tc, "p_hit_model": stationary.stationary_hit_probability(cat, tc),
                "error": ""}
    except ArithmeticError as exc:
        return {"C": C, "T_C": math.nan, "p_hit_model": math.nan,
                "error": f"{type(exc).__name__}: {exc}"}


def _simulate(spec, sim, n_jobs):
    caps = [int(c) for c in spec.cache_sizes]
    reps = sim.replications or 20
    seed = sim.seed or 0
    if spec.catalog is not None:
        return simulator.simulate_irm(spec.catalog, caps, n_requests=sim.requests or 100_000,
                                      replications=reps, base_seed=seed, n_jobs=n_jobs)
    try:
        cfg = simulator.make_sim_config(spec.mix, max(caps), sim.horizon, sim.warmup,
                                        sim.lookback, reps, seed)
    except DomainError as exc:
        raise ConfigError("sim", str(exc)) from None
    return simulator.estimate_hit_curve(spec.mix, caps, cfg.horizon, cfg.warmup, cfg.lookback,
                                        cfg.replications, cfg.base_seed, n_jobs)


def run_experiment(spec: ExperimentSpec, seed=None, replications=None, n_jobs=1,
                   model=True, simulate=True):
    """Evaluate one experiment and return its :class:`ResultTable`.

    ``seed`` and ``replications`` override the values in ``spec.sim``.
    Simulation runs only when the experiment has a ``sim`` section and ``simulate``
    is true; ``model=False`` drops the analytic columns. Solver failures at
    individual sizes land in the row's ``error`` column.
    """
    sim = spec.sim
    if sim is not None and (seed is not None or replications is not None):
        sim = replace(sim,
                      seed=sim.seed if seed is None else int(seed),
                      replications=sim.replications if replications is None else int(replications))
    do_sim = sim is not None and simulate
    if not model and not do_sim:
        raise ConfigError("sim", "nothing to compute: no simulation section and model disabled")

    if spec.catalog is not None:
        rows = [_stationary_row(spec.catalog, C) for C in spec.cache_sizes]
        columns = list(STATIONARY_COLUMNS)
    else:
        rows = [_model_row(s) for s in analytic.solve_curve(spec.mix, spec.cache_sizes)]
        columns = list(MODEL_COLUMNS)
    if not model:
        rows = [{"C": r["C"], "error": ""} for r in rows]
        columns = ["C"]

    if do_sim:
        outcomes = _simulate(spec, sim, n_jobs)
        for row, out in zip(rows, outcomes):
            lo, hi = out.ci95
            row.update(p_hit_sim_mean=out.hit_ratio_mean, sim_ci95_lo=lo, sim_ci95_hi=hi)
            if model:
                p = row["p_hit_model"]
                row["rel_err_model_vs_sim"] = ((p - out.hit_ratio_mean) / out.hit_ratio_mean
                                               if out.hit_ratio_mean > 0 else math.nan)
        columns += SIM_COLUMNS + (["rel_err_model_vs_sim"] if model else [])
    if model and spec.mix is not None:
        columns.append("bounds_ok")
    columns.append("error")
    return ResultTable(spec.name, columns, rows)


def write_outputs(spec, table, out_dir):
    """Write ``<name>.csv`` and/or ``<name>.summary.txt``; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if "csv" in spec.outputs:
        p = os.path.join(out_dir, f"{spec.name}.csv")
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(table.to_csv())
        paths.append(p)
    if "summary" in spec.outputs:
        p = os.path.join(out_dir, f"{spec.name}.summary.txt")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(table.summary())
        paths.append(p)
    return paths


# --- built-in setups ---------------------------------------------------------------

PARETO_DEFAULT = ParetoVolume(1.0, 3.0)
LIFETIMES = (1.0, 10.0, 50.0, 300.0)
MEAN_VOLUMES = (1.5, 3.0, 6.0, 15.0)
VOLUME_EXPONENTS = (1.5, 2.0, 2.5, 3.0)
PROFILE_EXPONENTS = (2.2, 3.0, 4.0)
ZIPF_EXPONENTS = (0.8, 1.0, 1.2)
# class weights (percent) for lifetimes 1, 10, 50 and 300 days
CLASS_SETUPS = {
    "S1": (40, 10, 10, 40),
    "S2": (30, 20, 20, 30),
    "S3": (20, 30, 30, 20),
    "S4": (10, 40, 40, 10),
    "S5": (5, 45, 45, 5),
}
CATALOG_SIZE = 10_000_000


def _tag(x):
    return f"{x:g}"


def _full_and_desk(group, key, mix, description):
    full = ExperimentSpec(name=f"{group}.{key}", mix=mix, cache_sizes=FULL_SIZES,
                          outputs=("csv", "summary"), description=description)
    desk_sizes = [c / DESK_SCALE for c in FULL_SIZES if c / DESK_SCALE >= 1]
    desk = ExperimentSpec(name=f"{group}-desk.{key}", mix=mix.with_gamma(DESK_GAMMA),
                          cache_sizes=desk_sizes, sim=SimOverrides(replications=20, seed=0),
                          outputs=("csv", "summary"),
                          description=description + " (reduced scale, simulated)")
    return [full, desk]


def builtin_experiments():
    """Named setups; every group comes with a ``<group>-desk`` simulated variant.

    Full-scale setups use 10^4 new contents per day and are model-only. Desk
    variants divide both the arrival rate and the cache sizes by 100, which
    leaves the model unchanged, and add a 20-replication simulation.
    """
    specs = []
    single = TrafficMix.single
    for L in LIFETIMES:
        specs += _full_and_desk("fig1", f"L{_tag(L)}",
                                single(FULL_GAMMA, ExponentialProfile(L), PARETO_DEFAULT),
                                f"exponential profile, L={_tag(L)} days")
    for L in LIFETIMES:
        specs += _full_and_desk("fig2", f"L{_tag(L)}",
                                single(FULL_GAMMA, PowerLawProfile(L, 3.0), PARETO_DEFAULT),
                                f"power-law profile zeta=3, L={_tag(L)} days")
    for ev in MEAN_VOLUMES:
        specs += _full_and_desk("fig3", f"EV{_tag(ev)}",
                                single(FULL_GAMMA, ExponentialProfile(10.0),
                                       ParetoVolume.from_mean(ev, 3.0)),
                                f"mean volume {_tag(ev)}, beta=3, exponential L=10 days")
    for beta in VOLUME_EXPONENTS:
        specs += _full_and_desk("fig4", f"beta{_tag(beta)}",
                                single(FULL_GAMMA, ExponentialProfile(10.0),
                                       ParetoVolume.from_mean(1.5, beta)),
                                f"Pareto beta={_tag(beta)} at mean volume 1.5, exponential L=10 days")
    for zeta in PROFILE_EXPONENTS:
        specs += _full_and_desk("fig5", f"zeta{_tag(zeta)}",
                                single(FULL_GAMMA, PowerLawProfile(10.0, zeta), PARETO_DEFAULT),
                                f"power-law profile zeta={_tag(zeta)}, L=10 days")
    for key, pct in CLASS_SETUPS.items():
        classes = [ContentClass(p / 100.0, ExponentialProfile(L), PARETO_DEFAULT)
                   for p, L in zip(pct, LIFETIMES)]
        specs += _full_and_desk("fig6", key, TrafficMix(FULL_GAMMA, classes),
                                f"four exponential classes L=1/10/50/300 days, weights {'/'.join(map(str, pct))} %")
    for alpha in ZIPF_EXPONENTS:
        key = f"alpha{_tag(alpha)}"
        specs.append(ExperimentSpec(
            name=f"fig7.{key}", catalog=ZipfCatalog(CATALOG_SIZE, alpha),
            cache_sizes=FULL_SIZES, outputs=("csv", "summary"),
            description=f"static Zipf catalogue M=1e7, alpha={_tag(alpha)}"))
        specs.append(ExperimentSpec(
            name=f"fig7-desk.{key}", catalog=ZipfCatalog(int(CATALOG_SIZE / DESK_SCALE), alpha),
            cache_sizes=[c / DESK_SCALE for c in FULL_SIZES if c / DESK_SCALE >= 1],
            sim=SimOverrides(replications=20, seed=0), outputs=("csv", "summary"),
            description=f"static Zipf catalogue M=1e5, alpha={_tag(alpha)}, IRM simulation"))
    return specs


def find_experiments(name, specs=None):
    """Match an exact experiment name or a whole group such as ``fig1-desk``."""
    specs = builtin_experiments() if specs is None else specs
    hits = [s for s in specs if s.name == name] or [s for s in specs if s.group == name]
    if not hits:
        raise ConfigError("name", f"no built-in experiment or group called {name!r}")
    return hits

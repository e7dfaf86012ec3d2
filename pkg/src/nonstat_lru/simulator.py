"""Monte Carlo ground truth: synthetic non-stationary workloads fed to an exact LRU.

Given its Poisson(V) request count, a content's request times are i.i.d. draws
from its profile shifted by the birth time. Because the profile integrates to
one, this is the same law as an inhomogeneous Poisson process with intensity
``V * profile(t - birth)``, without any thinning.
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import analytic
from ._validation import check_cache_sizes, check_positive
from .analytic import TrafficMix
from .errors import DegenerateResultError, DomainError
from .profiles import PowerLawProfile
from .stationary import ZipfCatalog

__all__ = [
    "LRUCache",
    "run_lru",
    "WorkloadChunk",
    "WorkloadGenerator",
    "generate_workload",
    "write_workload",
    "SimConfig",
    "SimOutcome",
    "default_lookback",
    "default_warmup",
    "make_sim_config",
    "estimate_hit_probability",
    "estimate_hit_curve",
    "simulate_irm",
    "LRUSimulator",
]

MEASUREMENT_DAYS = 200.0
LOOKBACK_QUANTILE = 0.999
POWER_LAW_LOOKBACK_CAP = 100.0  # in units of L
# Births per generation chunk; bounds the memory of one chunk.
CHUNK_CONTENTS = 50_000


class LRUCache:
    """Exact LRU over hashable keys, capacity counted in distinct contents."""

    def __init__(self, capacity):
        if int(capacity) != capacity or capacity < 1:
            raise DomainError(f"capacity must be a positive integer, got {capacity!r}")
        self.capacity = int(capacity)
        self._store = OrderedDict()

    def __len__(self):
        return len(self._store)

    def __contains__(self, key):
        return key in self._store

    def request(self, key):
        """Serve one request; return True on a hit."""
        return self.replay((key,)) == 1

    def replay(self, keys):
        """Serve ``keys`` in order and return the number of hits."""
        store = self._store
        touch = store.move_to_end
        evict = store.popitem
        cap = self.capacity
        hits = 0
        for key in keys:
            if key in store:
                touch(key)
                hits += 1
            else:
                store[key] = None
                if len(store) > cap:
                    evict(last=False)
        return hits


def run_lru(stream, capacity):
    """Feed a time-ordered stream of content ids to an empty LRU cache.

    Returns ``(hits, misses)``.
    """
    keys = list(stream)
    hits = LRUCache(capacity).replay(keys)
    return hits, len(keys) - hits


@dataclass
class WorkloadChunk:
    times: np.ndarray
    content_ids: np.ndarray
    class_index: np.ndarray

    def __len__(self):
        return len(self.times)


class WorkloadGenerator:
    """Time-ordered request stream on ``[0, horizon]``, produced in chunks.

    Births are drawn on a fixed grid of windows ``[j*w, (j+1)*w)`` anchored at
    time 0, each window with its own random stream derived from ``seed_seq``
    and ``j``. The contents born in a given window are therefore the same
    whatever the lookback or horizon, which couples runs that differ only in
    those settings. Requests never precede their content's birth, so once a
    window is drawn every pending request earlier than its end is final; only
    requests still in the future are carried over.
    """

    def __init__(self, mix, horizon, lookback, seed_seq, chunk_days=None):
        self.mix = mix
        self.horizon = check_positive("horizon", horizon)
        self.lookback = check_positive("lookback", lookback, allow_zero=True)
        if not isinstance(seed_seq, np.random.SeedSequence):
            seed_seq = np.random.SeedSequence(seed_seq)
        self.seed_seq = seed_seq
        self.chunk_days = chunk_days or max(CHUNK_CONTENTS / mix.gamma, 1e-6)
        self.contents_generated = 0
        self.requests_generated = 0

    def _window_rng(self, j):
        ss = self.seed_seq
        key = ss.spawn_key + (int(j < 0), abs(int(j)))
        return np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=key))

    def _births(self, j, first_id):
        """Contents born in window ``j`` (clipped to ``[-lookback, horizon]``)."""
        rng, mix, w = self._window_rng(j), self.mix, self.chunk_days
        n = rng.poisson(mix.gamma * w)
        births = w * (j + rng.random(n))
        K = len(mix.classes)
        if K == 1:
            klass = np.zeros(n, dtype=np.int64)
        else:
            klass = rng.choice(K, size=n, p=[c.weight for c in mix.classes])
        volumes = np.empty(n)
        for k, cls in enumerate(mix.classes):
            sel = klass == k
            volumes[sel] = cls.volumes.sample(rng.random(int(sel.sum())))
        counts = rng.poisson(volumes)
        offsets = np.empty(int(counts.sum()))
        owner = np.repeat(np.arange(n), counts)
        req_class = klass[owner]
        for k, cls in enumerate(mix.classes):
            sel = req_class == k
            offsets[sel] = cls.profile.quantile(rng.random(int(sel.sum())))
        # everything is drawn for the full window first so clipping cannot
        # change the draws of the contents that are kept
        keep = (births >= -self.lookback) & (births < self.horizon)
        new_id = np.cumsum(keep) - 1 + first_id
        n_kept = int(keep.sum())
        self.contents_generated += n_kept
        req_keep = keep[owner]
        return (births[owner][req_keep] + offsets[req_keep], new_id[owner][req_keep],
                req_class[req_keep], n_kept)

    def __iter__(self):
        empty_f, empty_i = np.empty(0), np.empty(0, dtype=np.int64)
        p_times, p_ids, p_cls = empty_f, empty_i, empty_i
        w = self.chunk_days
        j = math.floor(-self.lookback / w)
        next_id = 0
        while j * w < self.horizon:
            t1 = min((j + 1) * w, self.horizon)
            times, ids, cls, n_new = self._births(j, next_id)
            next_id += n_new
            times = np.concatenate([p_times, times])
            ids = np.concatenate([p_ids, ids])
            cls = np.concatenate([p_cls, cls])
            live = times <= self.horizon
            times, ids, cls = times[live], ids[live], cls[live]
            final = times < t1 if t1 < self.horizon else np.ones(len(times), dtype=bool)
            p_times, p_ids, p_cls = times[~final], ids[~final], cls[~final]
            out = final & (times >= 0)
            order = np.argsort(times[out], kind="stable")
            chunk = WorkloadChunk(times[out][order], ids[out][order], cls[out][order])
            self.requests_generated += len(chunk)
            j += 1
            if len(chunk):
                yield chunk


def generate_workload(mix, horizon, lookback, seed, replication=None):
    """Whole request stream as one :class:`WorkloadChunk` (small runs only).

    With ``replication`` given this is exactly the stream that replication
    ``r`` of :func:`estimate_hit_curve` sees for ``base_seed=seed``.
    """
    gen = WorkloadGenerator(mix, horizon, lookback, _seed_seq(seed, replication))
    chunks = list(gen)
    if not chunks:
        empty = np.empty(0)
        return WorkloadChunk(empty, empty.astype(np.int64), empty.astype(np.int64))
    return WorkloadChunk(*(np.concatenate([getattr(c, f) for c in chunks])
                           for f in ("times", "content_ids", "class_index")))


def write_workload(path, mix, horizon, lookback, seed, replication=None):
    """Export a request stream as ``time_days,content_id,class_index`` rows."""
    gen = WorkloadGenerator(mix, horizon, lookback, _seed_seq(seed, replication))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_days", "content_id", "class_index"])
        for chunk in gen:
            for t, i, k in zip(chunk.times.tolist(), chunk.content_ids.tolist(),
                               chunk.class_index.tolist()):
                w.writerow([f"{t:.12g}", i, k])
    return gen.requests_generated


def _seed_seq(seed, replication=None):
    # replication streams derive from (seed, r) and never overlap across r
    entropy = [int(seed)] if replication is None else [int(seed), int(replication)]
    return np.random.SeedSequence(entropy)


def _rng(seed, replication=None):
    return np.random.default_rng(_seed_seq(seed, replication))


# --- replicated estimation -------------------------------------------------

def default_lookback(mix):
    """Pre-window generation span: the 0.999 profile quantile of the slowest class.

    Power-law classes are capped at ``100 L``; the requests they still miss are
    bounded by the tail mass beyond the cap.
    """
    spans = []
    for cls in mix.classes:
        q = cls.profile.quantile(LOOKBACK_QUANTILE)
        if isinstance(cls.profile, PowerLawProfile):
            q = min(q, POWER_LAW_LOOKBACK_CAP * cls.profile.lifetime)
        spans.append(q)
    return max(spans)


def default_warmup(mix, capacity):
    """``max(5 L_max, 3 tc)``, with the ``3 tc`` term capped at the default lookback.

    Contents idle for longer than the lookback span receive almost no further
    requests, so whether a cold cache still holds them is immaterial.
    """
    tc = analytic.solve_eviction_time(mix, float(capacity))
    return max(5.0 * mix.max_lifetime, min(3.0 * tc, default_lookback(mix)))


@dataclass(frozen=True)
class SimConfig:
    mix: TrafficMix
    cache_capacity: int
    horizon: float
    warmup: float
    lookback: float
    replications: int = 20
    base_seed: int = 0

    def __post_init__(self):
        if not (0 <= self.warmup < self.horizon):
            raise DomainError("warmup must be non-negative and shorter than the horizon")
        if self.lookback < 0:
            raise DomainError("lookback must be non-negative")
        if self.replications < 1:
            raise DomainError("at least one replication is required")
        if not (0 <= int(self.base_seed) < 2 ** 64):
            raise DomainError("base seed must be a 64-bit unsigned integer")
        if int(self.cache_capacity) != self.cache_capacity or self.cache_capacity < 1:
            raise DomainError("cache capacity must be a positive integer")


def make_sim_config(mix, capacity, horizon=None, warmup=None, lookback=None,
                    replications=20, base_seed=0):
    """Fill unspecified windows with the defaults above."""
    if lookback is None:
        lookback = default_lookback(mix)
    if warmup is None:
        warmup = default_warmup(mix, capacity)
    if horizon is None:
        horizon = warmup + MEASUREMENT_DAYS
    return SimConfig(mix, int(capacity), float(horizon), float(warmup), float(lookback),
                     int(replications), int(base_seed))


@dataclass
class SimOutcome:
    hits: int
    misses: int
    hit_ratio_mean: float
    ci95_halfwidth: float
    per_replication: List[Tuple[int, int]] = field(default_factory=list)
    contents_generated: int = 0
    requests_generated: int = 0

    @property
    def ci95(self):
        return self.hit_ratio_mean - self.ci95_halfwidth, self.hit_ratio_mean + self.ci95_halfwidth

    def covers(self, value):
        lo, hi = self.ci95
        return lo <= value <= hi


def _aggregate(per_rep, contents=0, requests=0):
    ratios = []
    for h, m in per_rep:
        if h + m == 0:
            raise DegenerateResultError("a replication measured no requests")
        ratios.append(h / (h + m))
    ratios = np.asarray(ratios)
    n = len(ratios)
    if n > 1:
        half = stats.t.ppf(0.975, n - 1) * ratios.std(ddof=1) / math.sqrt(n)
    else:
        half = math.inf
    return SimOutcome(
        hits=int(sum(h for h, _ in per_rep)),
        misses=int(sum(m for _, m in per_rep)),
        hit_ratio_mean=float(ratios.mean()),
        ci95_halfwidth=float(half),
        per_replication=[(int(h), int(m)) for h, m in per_rep],
        contents_generated=int(contents),
        requests_generated=int(requests),
    )


def _replicate(args):
    mix, capacities, horizon, warmup, lookback, seed, r = args
    gen = WorkloadGenerator(mix, horizon, lookback, _seed_seq(seed, r))
    caches = [LRUCache(c) for c in capacities]
    hits = [0] * len(caches)
    measured = 0
    for chunk in gen:
        ids = chunk.content_ids.tolist()
        split = int(np.searchsorted(chunk.times, warmup, side="left"))
        head, tail = ids[:split], ids[split:]
        for j, cache in enumerate(caches):
            cache.replay(head)
            hits[j] += cache.replay(tail)
        measured += len(tail)
    return hits, measured, gen.contents_generated, gen.requests_generated


def _map(fn, jobs, n_jobs):
    if n_jobs and n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def estimate_hit_curve(mix, capacities, horizon, warmup, lookback, replications=20,
                       base_seed=0, n_jobs=1):
    """One :class:`SimOutcome` per capacity, all measured on shared streams.

    Replication ``r`` uses the stream seeded by ``(base_seed, r)`` for every
    capacity, so outcomes for different capacities are paired.
    """
    capacities = [int(c) for c in capacities]
    cfg = SimConfig(mix, max(capacities), horizon, warmup, lookback, replications, base_seed)
    jobs = [(mix, capacities, cfg.horizon, cfg.warmup, cfg.lookback, cfg.base_seed, r)
            for r in range(cfg.replications)]
    results = _map(_replicate, jobs, n_jobs)
    contents = sum(r[2] for r in results)
    requests = sum(r[3] for r in results)
    out = []
    for j in range(len(capacities)):
        per_rep = [(r[0][j], r[1] - r[0][j]) for r in results]
        out.append(_aggregate(per_rep, contents, requests))
    return out


def estimate_hit_probability(cfg, n_jobs=1):
    """Replicated hit-ratio estimate for a single :class:`SimConfig`."""
    return estimate_hit_curve(cfg.mix, [cfg.cache_capacity], cfg.horizon, cfg.warmup,
                              cfg.lookback, cfg.replications, cfg.base_seed, n_jobs)[0]


def _irm_replicate(args):
    catalog, capacities, n_requests, warmup_requests, seed, r = args
    rng = _rng(seed, r)
    cdf = np.cumsum(catalog.probabilities())
    u = rng.random(warmup_requests + n_requests) * cdf[-1]
    ids = np.minimum(np.searchsorted(cdf, u, side="right"), catalog.catalog_size - 1).tolist()
    head, tail = ids[:warmup_requests], ids[warmup_requests:]
    hits = []
    for c in capacities:
        cache = LRUCache(c)
        cache.replay(head)
        hits.append(cache.replay(tail))
    return hits


def simulate_irm(catalog: ZipfCatalog, capacities: Sequence[int], n_requests=100_000,
                 warmup_requests=None, replications=20, base_seed=0, n_jobs=1):
    """LRU hit ratios under i.i.d. Zipf requests (the stationary workload)."""
    if warmup_requests is None:
        warmup_requests = 5 * catalog.catalog_size
    jobs = [(catalog, [int(c) for c in capacities], int(n_requests), int(warmup_requests),
             int(base_seed), r) for r in range(replications)]
    results = _map(_irm_replicate, jobs, n_jobs)
    return [_aggregate([(r[j], n_requests - r[j]) for r in results], 0,
                       replications * n_requests)
            for j in range(len(capacities))]


class LRUSimulator(BaseEstimator):
    """Estimator wrapper: cache capacities in, simulated hit ratios out.

    ``horizon``, ``warmup`` and ``lookback`` default to the rules in
    :func:`make_sim_config`, resolved against the largest capacity seen by
    :meth:`fit`.
    """

    def __init__(self, mix=None, horizon=None, warmup=None, lookback=None,
                 replications=20, base_seed=0, n_jobs=1):
        self.mix = mix
        self.horizon = horizon
        self.warmup = warmup
        self.lookback = lookback
        self.replications = replications
        self.base_seed = base_seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        sizes = check_cache_sizes(X)
        cfg = make_sim_config(self.mix, int(sizes.max()), self.horizon, self.warmup,
                              self.lookback, self.replications, self.base_seed)
        self.config_ = cfg
        return self

    def simulate(self, X):
        check_is_fitted(self, "config_")
        cfg = self.config_
        caps = [int(c) for c in check_cache_sizes(X)]
        return estimate_hit_curve(cfg.mix, caps, cfg.horizon, cfg.warmup, cfg.lookback,
                                  cfg.replications, cfg.base_seed, self.n_jobs)

    def predict(self, X):
        """Mean simulated hit ratio per capacity."""
        self.outcomes_ = self.simulate(X)
        return np.array([o.hit_ratio_mean for o in self.outcomes_])

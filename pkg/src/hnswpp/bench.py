"""Benchmark harness: recall/accuracy metrics, repeated runs, ablation
grids, and threshold sweeps with a stable CSV schema.

LID profiles and ground truth are computed before any clock starts, so
reported build times cover graph construction only. Per-repeat seeds are
derived from one master seed, making every non-timing column of the CSV
reproducible run to run.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .graph import VARIANTS, HnswIndex, IndexConfig, SearchOutcome, build_index
from .io import DatasetSpec, load_dataset
from .lid import LidProfile, build_profile
from .oracle import GroundTruth, build_ground_truth

MASTER_SEED_ENV = "HNSWPP_SEED"

CSV_FIELDS = [
    "variant",
    "dataset",
    "n_base",
    "n_queries",
    "dim",
    "k",
    "m",
    "m0",
    "ef_construction",
    "ef_search",
    "top_l",
    "lid_threshold",
    "repeat",
    "rng_seed",
    "recall_at_k",
    "accuracy_at_k",
    "build_seconds",
    "query_seconds_mean",
    "query_seconds_median",
    "query_seconds_p99",
    "skip_count_total",
    "hops_mean",
    "parallel_queries",
]


def recall_at_k(result: SearchOutcome, truth_row, k: int) -> float:
    """Fraction of the true top-k labels present in the returned top-k."""
    truth_row = np.asarray(truth_row).reshape(-1)
    if truth_row.size < k:
        raise InputError(f"ground-truth row holds {truth_row.size} labels, need k={k}")
    returned = {label for label, _ in result.neighbors[:k]}
    return len(returned & set(truth_row[:k].tolist())) / k


def accuracy_at_k(result: SearchOutcome, truth_row, k: int) -> float:
    """1.0 when the true nearest neighbor appears in the returned top-k.

    Averaged over a query batch this is the fraction of queries whose
    rank-1 neighbor was found.
    """
    truth_row = np.asarray(truth_row).reshape(-1)
    if truth_row.size < k:
        raise InputError(f"ground-truth row holds {truth_row.size} labels, need k={k}")
    returned = {label for label, _ in result.neighbors[:k]}
    return 1.0 if int(truth_row[0]) in returned else 0.0


@dataclass
class RunReport:
    """Aggregate of several seeded runs of one configuration.

    Quality and structural columns are medians across repeats; repeats
    share the dataset, ground truth, and LID profile.
    """

    variant: str
    dataset_id: str
    config: dict
    recall_at_k: float
    accuracy_at_k: float
    build_seconds: float
    query_seconds_mean: float
    query_seconds_median: float
    query_seconds_p99: float
    skip_count_total: int
    hops_mean: float
    runs: int

    def __post_init__(self):
        if not 0.0 <= self.recall_at_k <= 1.0:
            raise InputError("recall_at_k must lie in [0,1]")
        if not 0.0 <= self.accuracy_at_k <= 1.0:
            raise InputError("accuracy_at_k must lie in [0,1]")


@dataclass
class BenchContext:
    """Everything repeats share: data, ground truth, and the LID profile."""

    base: np.ndarray
    queries: np.ndarray
    gt: GroundTruth
    profile: LidProfile | None
    dataset_id: str


def derive_seed(master_seed: int, repeat: int) -> int:
    """Per-repeat seed from the master seed; stable across platforms."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(repeat,))
    return int(ss.generate_state(1)[0])


_kernels_warm = False


def _warm_kernels(dim: int) -> None:
    """One throwaway mini-build so JIT compilation and cache loading never
    land inside a timed section."""
    global _kernels_warm
    if _kernels_warm:
        return
    rng = np.random.Generator(np.random.Philox(0))
    data = rng.random((32, dim)).astype(np.float32)
    config = IndexConfig(m=4, ef_construction=8, ef_search=8, variant="basic", rng_seed=0)
    index = build_index(data, config)
    index.search(data[0], 1)
    _kernels_warm = True


def master_seed_default(config: IndexConfig) -> int:
    env = os.environ.get(MASTER_SEED_ENV)
    return int(env) if env else config.rng_seed


def prepare_context(
    spec: DatasetSpec, k: int, lid_k: int = 128, with_profile: bool = True
) -> BenchContext:
    """Load the dataset and precompute ground truth and the LID profile.

    This runs before any timed section; build times never include it.
    """
    base, queries = load_dataset(spec)
    if queries.shape[0] < 1:
        raise InputError("benchmarks need at least one query vector")
    gt = build_ground_truth(base, queries, k)
    profile = build_profile(base, k=min(lid_k, len(base) - 1)) if with_profile else None
    return BenchContext(
        base=base, queries=queries, gt=gt, profile=profile, dataset_id=spec.dataset_id
    )


_SENTINEL = object()  # "use the index's own default threshold behavior"


def _timed_queries(
    index: HnswIndex, queries: np.ndarray, k: int, lid_threshold, threads: int, warmup: int
):
    """Run the query batch, returning outcomes and per-query seconds.

    A warm-up slice runs first and is excluded from the statistics. With
    threads > 1 the batch fans out over a thread pool and the per-query
    wall-clock times include scheduling noise; rows carry the flag.
    """
    nq = len(queries)
    kwargs = {} if lid_threshold is _SENTINEL else {"lid_threshold": lid_threshold}
    for qi in range(min(warmup, nq)):
        index.search(queries[qi], k, **kwargs)

    def one(qi: int):
        t0 = time.perf_counter()
        out = index.search(queries[qi], k, **kwargs)
        return out, time.perf_counter() - t0

    if threads <= 1:
        results = [one(qi) for qi in range(nq)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(nq)))
    outcomes = [r[0] for r in results]
    seconds = [r[1] for r in results]
    return outcomes, seconds


def _evaluate_repeat(
    ctx: BenchContext,
    config: IndexConfig,
    k: int,
    repeat: int,
    rng_seed: int,
    lid_threshold,
    threads: int,
    warmup: int,
    index: HnswIndex | None = None,
    build_seconds: float | None = None,
) -> dict:
    if index is None:
        cfg = replace(config, rng_seed=rng_seed)
        t0 = time.perf_counter()
        index = build_index(ctx.base, cfg, profile=ctx.profile)
        build_seconds = time.perf_counter() - t0
    outcomes, seconds = _timed_queries(index, ctx.queries, k, lid_threshold, threads, warmup)
    recalls = [recall_at_k(o, ctx.gt.labels[i], k) for i, o in enumerate(outcomes)]
    accs = [accuracy_at_k(o, ctx.gt.labels[i], k) for i, o in enumerate(outcomes)]
    if lid_threshold is _SENTINEL:
        thr = config.lid_threshold if config.variant == "full" else None
    else:
        thr = lid_threshold
    return {
        "variant": config.variant,
        "dataset": ctx.dataset_id,
        "n_base": len(ctx.base),
        "n_queries": len(ctx.queries),
        "dim": ctx.base.shape[1],
        "k": k,
        "m": config.m,
        "m0": config.m0,
        "ef_construction": config.ef_construction,
        "ef_search": config.ef_search,
        "top_l": config.top_l,
        "lid_threshold": "" if thr is None else thr,
        "repeat": repeat,
        "rng_seed": rng_seed,
        "recall_at_k": float(np.mean(recalls)),
        "accuracy_at_k": float(np.mean(accs)),
        "build_seconds": build_seconds,
        "query_seconds_mean": float(np.mean(seconds)),
        "query_seconds_median": float(np.median(seconds)),
        "query_seconds_p99": float(np.percentile(seconds, 99)),
        "skip_count_total": int(sum(o.skip_count for o in outcomes)),
        "hops_mean": float(np.mean([o.hops for o in outcomes])),
        "parallel_queries": threads if threads > 1 else 1,
    }


def _aggregate(rows: list[dict], config: IndexConfig, dataset_id: str) -> RunReport:
    med = lambda key: float(statistics.median(r[key] for r in rows))
    return RunReport(
        variant=config.variant,
        dataset_id=dataset_id,
        config=config.as_dict(),
        recall_at_k=med("recall_at_k"),
        accuracy_at_k=med("accuracy_at_k"),
        build_seconds=med("build_seconds"),
        query_seconds_mean=med("query_seconds_mean"),
        query_seconds_median=med("query_seconds_median"),
        query_seconds_p99=med("query_seconds_p99"),
        skip_count_total=int(statistics.median(r["skip_count_total"] for r in rows)),
        hops_mean=med("hops_mean"),
        runs=len(rows),
    )


def run_benchmark(
    spec: DatasetSpec,
    config: IndexConfig,
    repeats: int,
    k: int = 10,
    master_seed: int | None = None,
    threads: int = 1,
    warmup: int = 50,
    ctx: BenchContext | None = None,
    out_csv=None,
) -> tuple[RunReport, list[dict]]:
    """Build `repeats` indexes under derived seeds and query them all.

    Returns the aggregate report plus the per-repeat CSV rows. Partial
    failures propagate; nothing is reported for an incomplete run.
    """
    if repeats < 1:
        raise InputError("repeats must be >= 1")
    if ctx is None:
        ctx = prepare_context(spec, k)
    _warm_kernels(ctx.base.shape[1])
    master = master_seed if master_seed is not None else master_seed_default(config)
    rows = []
    for r in range(repeats):
        rows.append(
            _evaluate_repeat(
                ctx, config, k, r, derive_seed(master, r), _SENTINEL, threads, warmup
            )
        )
    if out_csv:
        write_csv(out_csv, rows)
    return _aggregate(rows, config, ctx.dataset_id), rows


def run_ablation(
    spec: DatasetSpec,
    base_config: IndexConfig,
    repeats: int,
    k: int = 10,
    master_seed: int | None = None,
    threads: int = 1,
    warmup: int = 50,
    ctx: BenchContext | None = None,
    out_csv=None,
    variants=VARIANTS,
) -> tuple[list[RunReport], list[dict]]:
    """One report per variant with every other parameter held fixed.

    All variants share the dataset, ground truth, profile, and the same
    derived per-repeat seeds. Builds are interleaved repeat-major (every
    variant builds under seed r before any builds under seed r+1) so slow
    machine drift spreads evenly across variants instead of biasing the
    build-time ratios.
    """
    if ctx is None:
        ctx = prepare_context(spec, k)
    _warm_kernels(ctx.base.shape[1])
    master = master_seed if master_seed is not None else master_seed_default(base_config)
    rows_by_variant: dict[str, list[dict]] = {v: [] for v in variants}
    for r in range(repeats):
        seed = derive_seed(master, r)
        for variant in variants:
            config = replace(base_config, variant=variant)
            rows_by_variant[variant].append(
                _evaluate_repeat(ctx, config, k, r, seed, _SENTINEL, threads, warmup)
            )
    reports = []
    all_rows = []
    for variant in variants:
        config = replace(base_config, variant=variant)
        reports.append(_aggregate(rows_by_variant[variant], config, ctx.dataset_id))
        all_rows.extend(rows_by_variant[variant])
    if out_csv:
        write_csv(out_csv, all_rows)
    return reports, all_rows


def run_threshold_sweep(
    spec: DatasetSpec,
    config: IndexConfig,
    thresholds,
    repeats: int = 1,
    k: int = 10,
    master_seed: int | None = None,
    threads: int = 1,
    warmup: int = 50,
    ctx: BenchContext | None = None,
    out_csv=None,
) -> list[dict]:
    """Query one build per repeat at every threshold.

    Thresholds only affect search, so each repeat builds a single index
    and sweeps the whole grid against it; one CSV row per
    (threshold, repeat).
    """
    thresholds = list(thresholds)
    if any(t2 < t1 for t1, t2 in zip(thresholds, thresholds[1:])):
        raise InputError("thresholds must be ascending")
    if ctx is None:
        ctx = prepare_context(spec, k)
    _warm_kernels(ctx.base.shape[1])
    master = master_seed if master_seed is not None else master_seed_default(config)
    rows = []
    for r in range(repeats):
        seed = derive_seed(master, r)
        cfg = replace(config, rng_seed=seed)
        t0 = time.perf_counter()
        index = build_index(ctx.base, cfg, profile=ctx.profile)
        build_seconds = time.perf_counter() - t0
        for thr in thresholds:
            rows.append(
                _evaluate_repeat(
                    ctx, config, k, r, seed, thr, threads, warmup,
                    index=index, build_seconds=build_seconds,
                )
            )
    if out_csv:
        write_csv(out_csv, rows)
    return rows


def write_csv(path, rows: list[dict]) -> None:
    """Emit rows under the fixed header; schema never varies per run."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row.get(key, "") for key in CSV_FIELDS})

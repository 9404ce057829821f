"""Command-line benchmark harness.

Subcommands: gen (synthetic data), lid (LID profile), gt (ground truth),
build (construct and snapshot an index), query (recall/accuracy report),
ablate (variant grid), sweep (LID threshold sweep). Exit codes: 0 on
success, 2 for input errors, 3 for invariant violations. The master seed
for repeated runs can also be set through the HNSWPP_SEED environment
variable.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, io
from .errors import InputError, InvariantViolation
from .graph import VARIANTS, IndexConfig, build_index
from .lid import build_profile
from .oracle import build_ground_truth


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--m0", type=int, default=None)
    p.add_argument("--ef-construction", type=int, default=128)
    p.add_argument("--ef-search", type=int, default=64)
    p.add_argument("--top-l", type=int, default=4)
    p.add_argument("--ml", type=float, default=None)
    p.add_argument("--lid-threshold", type=float, default=None)
    p.add_argument("--epsilon", default="auto",
                   help="skip-bridge distance threshold, or 'auto' for the dataset average")
    p.add_argument("--seed", type=int, default=None,
                   help="build seed / master seed for repeats; defaults to "
                        "$HNSWPP_SEED for repeated runs, else 0")
    p.add_argument("--lid-only-skip", action="store_true",
                   help="skip predicate tests only the LID clause, not the distance clause")


def _config_from_args(args) -> IndexConfig:
    eps = args.epsilon
    if isinstance(eps, str) and eps != "auto":
        eps = float(eps)
    return IndexConfig(
        m=args.m,
        m0=args.m0,
        ef_construction=args.ef_construction,
        ef_search=args.ef_search,
        top_l=args.top_l,
        ml=args.ml,
        lid_threshold=args.lid_threshold,
        distance_epsilon=eps,
        variant=args.variant,
        rng_seed=0 if args.seed is None else args.seed,
        skip_distance_check=not args.lid_only_skip,
    )


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="fvecs/bvecs vector file")
    src.add_argument("--preset", choices=sorted(io.PRESETS), help="built-in synthetic dataset")
    src.add_argument("--synthetic", choices=("uniform", "gaussian"),
                     help="ad-hoc synthetic source; size it with --dim/--clusters/--spread")
    p.add_argument("--dim", type=int, default=None, help="dimension for synthetic sources")
    p.add_argument("--clusters", type=int, default=16)
    p.add_argument("--spread", type=float, default=0.12)
    p.add_argument("--base-count", type=int, default=10_000)
    p.add_argument("--query-count", type=int, default=1_000)
    p.add_argument("--data-seed", type=int, default=42)


def _spec_from_args(args) -> io.DatasetSpec:
    if args.preset:
        spec = io.dataset_preset(args.preset, seed=args.data_seed)
        return replace(spec, base_count=args.base_count, query_count=args.query_count)
    if args.synthetic:
        if not args.dim:
            raise InputError("--synthetic needs --dim")
        return io.DatasetSpec(
            source=args.synthetic,
            dim=args.dim,
            base_count=args.base_count,
            query_count=args.query_count,
            seed=args.data_seed,
            clusters=args.clusters,
            spread=args.spread,
        )
    return io.DatasetSpec(
        source=args.data,
        dim=args.dim or 0,
        base_count=args.base_count,
        query_count=args.query_count,
        seed=args.data_seed,
    )


def _load_vectors(path: str) -> np.ndarray:
    return io.load_bvecs(path) if Path(path).suffix == ".bvecs" else io.load_fvecs(path)


def cmd_gen(args) -> int:
    if args.preset:
        spec = io.dataset_preset(args.preset, seed=args.seed)
        data = io.generate_synthetic(
            spec.source, spec.dim, args.n, args.seed, spec.clusters, spec.spread
        )
    else:
        data = io.generate_synthetic(
            args.kind, args.dim, args.n, args.seed, args.clusters, args.spread
        )
    io.write_fvecs(args.out, data)
    print(f"wrote {len(data)} x {data.shape[1]} vectors to {args.out}")
    return 0


def cmd_lid(args) -> int:
    data = _load_vectors(args.data)
    if args.base_count:
        data = data[: args.base_count]
    profile = build_profile(data, k=args.k, sample_pairs=args.sample_pairs, seed=args.seed)
    io.save_profile(profile, args.out)
    print(
        f"profile over {len(profile)} points: mean raw LID {profile.raw_lids.mean():.2f}, "
        f"avg distance {profile.avg_distance:.4f} -> {args.out}"
    )
    return 0


def cmd_gt(args) -> int:
    data = _load_vectors(args.data)
    if args.queries:
        base, queries = data, _load_vectors(args.queries)
    else:
        total = args.base_count + args.query_count
        if len(data) < total:
            raise InputError(f"{args.data} holds {len(data)} vectors, need {total}")
        base, queries = data[: args.base_count], data[args.base_count : total]
    gt = build_ground_truth(base, queries, args.k)
    io.save_ground_truth(gt, args.out)
    print(f"ground truth for {len(queries)} queries at k={args.k} -> {args.out}")
    return 0


def cmd_build(args) -> int:
    import time

    data = _load_vectors(args.data)
    if args.base_count:
        data = data[: args.base_count]
    config = _config_from_args(args)
    profile = None
    if args.profile:
        profile = io.load_profile(args.profile)
    elif config.variant in ("lid_based", "full"):
        print("no --profile given; computing one (not counted as build time)")
        profile = build_profile(data, k=config.ef_construction)
    t0 = time.perf_counter()
    index = build_index(data, config, profile=profile)
    build_seconds = time.perf_counter() - t0
    if args.check:
        violations = index.check_invariants()
        if violations:
            for violation in violations:
                print(f"invariant violation: {violation}", file=sys.stderr)
            raise InvariantViolation(f"{len(violations)} violations")
    io.save_index(index, args.out)
    print(f"built {config.variant} index over {index.count} vectors "
          f"in {build_seconds:.2f}s -> {args.out}")
    return 0


def cmd_query(args) -> int:
    profile = io.load_profile(args.profile) if args.profile else None
    index = io.load_index(args.index, profile=profile, ef_search=args.ef_search)
    queries = _load_vectors(args.queries)
    if args.gt:
        gt = io.load_ground_truth(args.gt)
    else:
        gt = build_ground_truth(index.vectors, queries, args.k)
    kwargs = {}
    if args.lid_threshold is not None:
        kwargs["lid_threshold"] = args.lid_threshold
    recalls, accs, skips = [], [], 0
    for i in range(len(queries)):
        out = index.search(queries[i], args.k, **kwargs)
        recalls.append(bench.recall_at_k(out, gt.labels[i], args.k))
        accs.append(bench.accuracy_at_k(out, gt.labels[i], args.k))
        skips += out.skip_count
    print(
        f"recall@{args.k}={np.mean(recalls):.4f} accuracy@{args.k}={np.mean(accs):.4f} "
        f"skips={skips} over {len(queries)} queries"
    )
    return 0


def cmd_ablate(args) -> int:
    spec = _spec_from_args(args)
    config = _config_from_args(args)
    reports, _rows = bench.run_ablation(
        spec, config, args.repeats, k=args.k, master_seed=args.seed,
        threads=args.threads, out_csv=args.out,
    )
    for rep in reports:
        print(
            f"{rep.variant:12s} recall@{args.k}={rep.recall_at_k:.4f} "
            f"accuracy@{args.k}={rep.accuracy_at_k:.4f} "
            f"build={rep.build_seconds:.2f}s query_med={rep.query_seconds_median * 1e3:.3f}ms "
            f"skips={rep.skip_count_total}"
        )
    print(f"rows -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    config = _config_from_args(args)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    rows = bench.run_threshold_sweep(
        spec, config, thresholds, repeats=args.repeats, k=args.k,
        master_seed=args.seed, threads=args.threads, out_csv=args.out,
    )
    for row in rows:
        print(
            f"threshold={row['lid_threshold']} repeat={row['repeat']} "
            f"skips={row['skip_count_total']} recall@{args.k}={row['recall_at_k']:.4f} "
            f"query_med={row['query_seconds_median'] * 1e3:.3f}ms"
        )
    print(f"rows -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hnswpp-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic vectors into an fvecs file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--kind", choices=("uniform", "gaussian"))
    group.add_argument("--preset", choices=sorted(io.PRESETS))
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--n", type=int, default=11_000)
    p.add_argument("--clusters", type=int, default=16)
    p.add_argument("--spread", type=float, default=0.12)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("lid", help="compute a LID profile for a vector file")
    p.add_argument("--data", required=True)
    p.add_argument("--base-count", type=int, default=None)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--sample-pairs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lid)

    p = sub.add_parser("gt", help="compute exact ground truth")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", default=None, help="separate query file; else split --data")
    p.add_argument("--base-count", type=int, default=10_000)
    p.add_argument("--query-count", type=int, default=1_000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gt)

    p = sub.add_parser("build", help="construct an index and snapshot it")
    p.add_argument("--data", required=True)
    p.add_argument("--base-count", type=int, default=None)
    p.add_argument("--profile", default=None, help="LID profile file (computed if omitted)")
    p.add_argument("--check", action="store_true", help="run the structural invariant suite")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="query a snapshot against ground truth")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--gt", default=None, help="ground-truth file (recomputed if omitted)")
    p.add_argument("--profile", default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--ef-search", type=int, default=64)
    p.add_argument("--lid-threshold", type=float, default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("ablate", help="run all four variants on one dataset")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="sweep the LID threshold on one build per repeat")
    _add_dataset_flags(p)
    _add_config_flags(p)
    p.add_argument("--thresholds", default="0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # console script target
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

"""Benchmark-harness metrics, CSV schema, and CLI behavior."""

import csv
import struct
import time

import numpy as np
import pytest

from hnswpp import (
    DatasetSpec,
    IndexConfig,
    InputError,
    SearchOutcome,
    build_ground_truth,
    recall_at_k,
    accuracy_at_k,
    run_ablation,
    run_benchmark,
    run_threshold_sweep,
)
from hnswpp.bench import CSV_FIELDS, derive_seed, prepare_context
from hnswpp.cli import main


def outcome_from_labels(labels):
    return SearchOutcome(
        neighbors=[(int(l), float(i)) for i, l in enumerate(labels)],
        skip_count=0,
        w1=tuple(labels),
        w2=(),
        hops=0,
    )


SMOKE_SPEC = DatasetSpec(source="gaussian", dim=6, base_count=200, query_count=40,
                         seed=11, clusters=4, spread=0.2)
SMOKE_CONFIG = IndexConfig(m=4, ef_construction=16, ef_search=16, variant="full",
                           lid_threshold=0.8, rng_seed=0)


class TestRecallAccuracy:
    def test_perfect_recall(self):
        truth = np.arange(10)
        assert recall_at_k(outcome_from_labels(range(10)), truth, 10) == 1.0

    def test_zero_overlap(self):
        truth = np.arange(10)
        assert recall_at_k(outcome_from_labels(range(100, 110)), truth, 10) == 0.0

    def test_half_overlap(self):
        truth = np.arange(10)
        returned = list(range(5)) + list(range(50, 55))
        assert recall_at_k(outcome_from_labels(returned), truth, 10) == 0.5

    def test_truth_row_too_short_rejected(self):
        with pytest.raises(InputError):
            recall_at_k(outcome_from_labels(range(10)), np.arange(5), 10)

    def test_accuracy_hit_anywhere_in_topk(self):
        truth = np.array([42, 1, 2])
        assert accuracy_at_k(outcome_from_labels([7, 8, 42]), truth, 3) == 1.0

    def test_accuracy_miss(self):
        truth = np.array([42, 1, 2])
        assert accuracy_at_k(outcome_from_labels([7, 8, 9]), truth, 3) == 0.0

    def test_accuracy_batch_fraction_matches_hand_count(self):
        # 10-query batch against brute force: accuracy equals the hand count
        rng = np.random.default_rng(0)
        base = rng.random((50, 4)).astype(np.float32)
        queries = rng.random((10, 4)).astype(np.float32)
        gt = build_ground_truth(base, queries, 5)
        hits = 0
        values = []
        for i in range(10):
            returned = gt.labels[i].tolist()
            if i % 3 == 0:  # corrupt some rows to drop the true NN
                returned = [l for l in returned if l != gt.labels[i, 0]] + [49]
            out = outcome_from_labels(returned)
            values.append(accuracy_at_k(out, gt.labels[i], 5))
            hits += int(gt.labels[i, 0] in returned)
        assert np.mean(values) == hits / 10

    def test_oracle_replay_scores_one(self):
        # feeding ground truth back through the harness metrics yields 1.0
        rng = np.random.default_rng(1)
        base = rng.random((60, 3)).astype(np.float32)
        queries = rng.random((12, 3)).astype(np.float32)
        gt = build_ground_truth(base, queries, 8)
        for i in range(12):
            out = outcome_from_labels(gt.labels[i])
            assert recall_at_k(out, gt.labels[i], 8) == 1.0
            assert accuracy_at_k(out, gt.labels[i], 8) == 1.0


class TestRunBenchmark:
    def test_smoke_run_completes(self):
        report, rows = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, repeats=1, k=5, warmup=5)
        assert report.recall_at_k > 0
        assert report.runs == 1
        assert len(rows) == 1
        assert rows[0]["build_seconds"] > 0

    def test_repeats_echoed_and_aggregated(self):
        report, rows = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, repeats=3, k=5, warmup=0)
        assert report.runs == 3
        assert len(rows) == 3
        assert [r["repeat"] for r in rows] == [0, 1, 2]
        seeds = {r["rng_seed"] for r in rows}
        assert len(seeds) == 3

    def test_variants_share_dataset(self):
        ctx = prepare_context(SMOKE_SPEC, k=5, lid_k=16)
        _, rows_a = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 1, k=5, ctx=ctx, warmup=0)
        basic = IndexConfig(m=4, ef_construction=16, ef_search=16, variant="basic", rng_seed=0)
        _, rows_b = run_benchmark(SMOKE_SPEC, basic, 1, k=5, ctx=ctx, warmup=0)
        assert rows_a[0]["dataset"] == rows_b[0]["dataset"]
        assert rows_a[0]["rng_seed"] == rows_b[0]["rng_seed"]

    def test_nontiming_columns_reproduce(self):
        _, rows_a = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 2, k=5, master_seed=9, warmup=0)
        _, rows_b = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 2, k=5, master_seed=9, warmup=0)
        timing = {c for c in CSV_FIELDS if "seconds" in c}
        for ra, rb in zip(rows_a, rows_b):
            for col in CSV_FIELDS:
                if col not in timing:
                    assert ra[col] == rb[col], col

    def test_build_time_excludes_profile_and_gt(self, monkeypatch):
        # the context (profile + ground truth) is computed before any build
        # clock starts; a slow profile must not inflate build_seconds
        import hnswpp.bench as bench_mod

        real_prepare = bench_mod.prepare_context

        def slow_prepare(*args, **kwargs):
            ctx = real_prepare(*args, **kwargs)
            time.sleep(0.5)
            return ctx

        monkeypatch.setattr(bench_mod, "prepare_context", slow_prepare)
        report, _ = bench_mod.run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 1, k=5, warmup=0)
        assert report.build_seconds < 0.5

    def test_derive_seed_stable(self):
        assert derive_seed(0, 0) == derive_seed(0, 0)
        assert derive_seed(0, 0) != derive_seed(0, 1)
        assert derive_seed(0, 1) != derive_seed(1, 1)


class TestAblation:
    def test_four_reports_one_csv(self, tmp_path):
        out = tmp_path / "ablation.csv"
        reports, rows = run_ablation(SMOKE_SPEC, SMOKE_CONFIG, 1, k=5, warmup=0, out_csv=out)
        assert [r.variant for r in reports] == ["basic", "multi_branch", "lid_based", "full"]
        with open(out) as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == 4
        assert list(parsed[0].keys()) == CSV_FIELDS


class TestThresholdSweep:
    def test_unreachable_threshold_never_skips(self):
        rows = run_threshold_sweep(SMOKE_SPEC, SMOKE_CONFIG, [1.1], repeats=1, k=5, warmup=0)
        assert rows[0]["skip_count_total"] == 0

    def test_skips_nonincreasing_and_quality_stable(self, tmp_path):
        out = tmp_path / "sweep.csv"
        thresholds = [0.3, 0.5, 0.7, 0.9, 1.0, 1.1]
        rows = run_threshold_sweep(
            SMOKE_SPEC, SMOKE_CONFIG, thresholds, repeats=1, k=5, warmup=0, out_csv=out
        )
        with open(out) as fh:
            parsed = list(csv.DictReader(fh))
        skips = [int(r["skip_count_total"]) for r in parsed]
        assert skips == sorted(skips, reverse=True)
        # quality at the unreachable threshold equals skip-disabled quality
        _, base_rows = run_benchmark(
            SMOKE_SPEC,
            IndexConfig(**{**SMOKE_CONFIG.as_dict(), "lid_threshold": None}),
            1, k=5, warmup=0,
        )
        assert rows[-1]["recall_at_k"] == base_rows[0]["recall_at_k"]

    def test_descending_thresholds_rejected(self):
        with pytest.raises(InputError):
            run_threshold_sweep(SMOKE_SPEC, SMOKE_CONFIG, [0.9, 0.5], repeats=1, k=5)

    def test_one_build_per_repeat(self, tmp_path):
        rows = run_threshold_sweep(
            SMOKE_SPEC, SMOKE_CONFIG, [0.5, 0.9], repeats=2, k=5, warmup=0
        )
        assert len(rows) == 4
        by_repeat = {}
        for row in rows:
            by_repeat.setdefault(row["repeat"], set()).add(row["build_seconds"])
        for builds in by_repeat.values():
            assert len(builds) == 1  # same build timed once, reused per threshold


class TestParallelQueries:
    def test_threaded_batch_flagged_and_equivalent(self):
        report, rows = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 1, k=5, threads=4, warmup=0)
        assert rows[0]["parallel_queries"] == 4
        _, serial = run_benchmark(SMOKE_SPEC, SMOKE_CONFIG, 1, k=5, threads=1, warmup=0)
        assert rows[0]["recall_at_k"] == serial[0]["recall_at_k"]
        assert rows[0]["skip_count_total"] == serial[0]["skip_count_total"]


class TestCli:
    def _gen(self, tmp_path, n=260, dim=6):
        data_path = tmp_path / "data.fvecs"
        code = main([
            "gen", "--kind", "gaussian", "--dim", str(dim), "--n", str(n),
            "--clusters", "4", "--spread", "0.2", "--seed", "3",
            "--out", str(data_path),
        ])
        assert code == 0
        return data_path

    def test_full_pipeline(self, tmp_path):
        data = self._gen(tmp_path)
        profile = tmp_path / "profile.csv"
        assert main(["lid", "--data", str(data), "--base-count", "200",
                     "--k", "16", "--out", str(profile)]) == 0
        gt = tmp_path / "gt.bin"
        assert main(["gt", "--data", str(data), "--base-count", "200",
                     "--query-count", "60", "--k", "5", "--out", str(gt)]) == 0
        index = tmp_path / "index.bin"
        assert main(["build", "--data", str(data), "--base-count", "200",
                     "--profile", str(profile), "--variant", "full",
                     "--m", "4", "--ef-construction", "16", "--ef-search", "16",
                     "--lid-threshold", "0.8", "--check",
                     "--out", str(index)]) == 0
        queries = tmp_path / "queries.fvecs"
        from hnswpp import load_fvecs, write_fvecs

        write_fvecs(queries, load_fvecs(data)[200:260])
        assert main(["query", "--index", str(index), "--queries", str(queries),
                     "--gt", str(gt), "--k", "5", "--ef-search", "16",
                     "--profile", str(profile), "--lid-threshold", "0.8"]) == 0

    def test_ablate_and_sweep_csv(self, tmp_path):
        out = tmp_path / "ablate.csv"
        code = main([
            "ablate", "--preset", "gaussian", "--base-count", "150",
            "--query-count", "30", "--m", "4", "--ef-construction", "16",
            "--ef-search", "16", "--lid-threshold", "0.8", "--repeats", "1",
            "--k", "5", "--out", str(out),
        ])
        assert code == 0
        with open(out) as fh:
            assert len(list(csv.DictReader(fh))) == 4
        sweep_out = tmp_path / "sweep.csv"
        code = main([
            "sweep", "--preset", "gaussian", "--base-count", "150",
            "--query-count", "30", "--m", "4", "--ef-construction", "16",
            "--ef-search", "16", "--thresholds", "0.5,0.9", "--repeats", "1",
            "--k", "5", "--out", str(sweep_out),
        ])
        assert code == 0
        with open(sweep_out) as fh:
            assert len(list(csv.DictReader(fh))) == 2

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["lid", "--data", str(tmp_path / "nope.fvecs"),
                     "--out", str(tmp_path / "p.csv")]) == 2

    def test_malformed_file_exits_2(self, tmp_path):
        bad = tmp_path / "bad.fvecs"
        bad.write_bytes(struct.pack("<If", 3, 1.0))
        assert main(["lid", "--data", str(bad), "--out", str(tmp_path / "p.csv")]) == 2

    def test_invariant_violation_exits_3(self, tmp_path, monkeypatch):
        data = self._gen(tmp_path, n=60)
        from hnswpp.graph import HnswIndex

        monkeypatch.setattr(HnswIndex, "check_invariants", lambda self: ["forced failure"])
        code = main(["build", "--data", str(data), "--variant", "basic",
                     "--m", "4", "--ef-construction", "16", "--check",
                     "--out", str(tmp_path / "index.bin")])
        assert code == 3

"""Sweep the skip-bridge LID threshold on one build: skips fall as the
threshold rises while quality stays flat.

Run: python demos/04_threshold_sweep.py
"""

from hnswpp import DatasetSpec, IndexConfig, run_threshold_sweep

spec = DatasetSpec(source="gaussian", dim=12, base_count=4000, query_count=400,
                   seed=42, clusters=16, spread=0.12)
config = IndexConfig(m=16, ef_construction=128, ef_search=64, variant="full",
                     lid_threshold=0.8, rng_seed=0)

rows = run_threshold_sweep(
    spec, config, thresholds=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1],
    repeats=1, k=10, warmup=20,
)

print(f"{'threshold':>9s} {'skips':>6s} {'recall@10':>9s} {'accuracy':>8s} {'query ms':>9s}")
for row in rows:
    print(f"{row['lid_threshold']:9.2f} {row['skip_count_total']:6d} "
          f"{row['recall_at_k']:9.4f} {row['accuracy_at_k']:8.4f} "
          f"{row['query_seconds_median'] * 1e3:9.4f}")
print("\nthe skip count is non-increasing in the threshold; above 1.0 the "
      "predicate can never fire")

"""Run the four index variants on one dataset and compare quality and
timing, mirroring the benchmark harness at demo scale.

Run: python demos/03_variant_ablation.py
"""

from hnswpp import DatasetSpec, IndexConfig, run_ablation

spec = DatasetSpec(source="gaussian", dim=12, base_count=4000, query_count=400,
                   seed=42, clusters=16, spread=0.12)
config = IndexConfig(m=16, ef_construction=128, ef_search=64, lid_threshold=0.8, rng_seed=0)

reports, rows = run_ablation(spec, config, repeats=2, k=10, warmup=20,
                             out_csv="/tmp/ablation_demo.csv")

print(f"{'variant':14s} {'recall@10':>9s} {'acc@10':>7s} {'build s':>8s} "
      f"{'query ms':>9s} {'skips':>6s}")
for rep in reports:
    print(f"{rep.variant:14s} {rep.recall_at_k:9.4f} {rep.accuracy_at_k:7.4f} "
          f"{rep.build_seconds:8.3f} {rep.query_seconds_median * 1e3:9.4f} "
          f"{rep.skip_count_total:6d}")
print("\nper-repeat rows written to /tmp/ablation_demo.csv")

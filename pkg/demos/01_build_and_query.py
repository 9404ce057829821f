"""Build the full dual-branch index on synthetic clustered data, query it,
and score recall against the exact oracle.

Run: python demos/01_build_and_query.py
"""

import numpy as np

import hnswpp as hp

rng_seed = 42
data = hp.generate_synthetic("gaussian", dim=12, n=4400, seed=rng_seed, clusters=16, spread=0.12)
base, queries = data[:4000], data[4000:]
print(f"dataset: {base.shape[0]} base vectors, {queries.shape[0]} queries, dim {base.shape[1]}")

# LID profile first: it drives layer placement and the skip bridges.
profile = hp.build_profile(base, k=64)
print(f"LID: mean {profile.raw_lids.mean():.2f}, "
      f"min {profile.raw_lids.min():.2f}, max {profile.raw_lids.max():.2f}; "
      f"avg pairwise distance {profile.avg_distance:.3f}")

config = hp.IndexConfig(
    m=16,
    ef_construction=128,
    ef_search=64,
    variant="full",
    lid_threshold=0.8,
    rng_seed=rng_seed,
)
index = hp.build_index(base, config, profile=profile)
print(f"built variant={config.variant} over {index.count} nodes; "
      f"violations: {index.check_invariants() or 'none'}")

gt = hp.build_ground_truth(base, queries, 10)
recall = accuracy = skips = 0.0
for i in range(len(queries)):
    out = index.search(queries[i], 10)
    recall += hp.recall_at_k(out, gt.labels[i], 10)
    accuracy += hp.accuracy_at_k(out, gt.labels[i], 10)
    skips += out.skip_count
n = len(queries)
print(f"recall@10 {recall / n:.4f}  accuracy@10 {accuracy / n:.4f}  "
      f"skips {skips:.0f} over {n} queries")

out = index.search(queries[0], 5)
print("\nfirst query, top 5 (label, distance):")
for label, dist in out.neighbors:
    print(f"  {label:5d}  {dist:.4f}")
print(f"branch results disjoint: {not set(out.w1) & set(out.w2)} "
      f"(|w1|={len(out.w1)}, |w2|={len(out.w2)}), hops {out.hops}")

"""Estimate local intrinsic dimensionality, normalize it, and inspect the
layer assignment it produces.

Run: python demos/02_lid_profiles.py
"""

import math

import numpy as np

import hnswpp as hp

# The estimator recovers the generating dimension of a uniform ball.
rng = np.random.default_rng(0)
dim = 5
direction = rng.normal(size=(1500, dim))
direction /= np.linalg.norm(direction, axis=1, keepdims=True)
radius = rng.random(1500) ** (1.0 / dim)
ball = (direction * radius[:, None]).astype(np.float32)
profile = hp.build_profile(ball, k=128)
print(f"uniform {dim}-ball: mean LID estimate {profile.raw_lids.mean():.2f} "
      f"(generating dimension {dim})")

# Closed-form check: distances (1, e, e) give exactly 2.
print(f"hand case (1, e, e): {hp.estimate_lid([1.0, math.e, math.e]):.6f}")

# Clustered data: boundary points sit in sparser neighborhoods.
data = hp.generate_synthetic("gaussian", dim=12, n=4000, seed=7, clusters=16, spread=0.12)
profile = hp.build_profile(data, k=128)
lids = profile.raw_lids
print(f"\nclustered synthetic: LID mean {lids.mean():.2f}, "
      f"p5 {np.percentile(lids, 5):.2f}, p95 {np.percentile(lids, 95):.2f}")

normalized = hp.normalize_lids(lids)
print(f"normalized range: [{normalized.min():.1f}, {normalized.max():.1f}]")

assignment = hp.assign_layers(normalized, top_l=4, ml=1 / math.log(16), rng_seed=3)
print(f"branch sizes: {assignment.branch_sizes()}")
for b in range(2):
    mask = assignment.branches == b
    counts = np.bincount(assignment.layers[mask], minlength=4)
    print(f"branch {b} layer occupancy (0..3): {counts.tolist()}")

# High-LID nodes go up: mean normalized LID per layer is increasing.
for layer in range(4):
    mask = assignment.layers == layer
    print(f"layer {layer}: {mask.sum():5d} nodes, mean normalized LID "
          f"{normalized[mask].mean():.3f}")

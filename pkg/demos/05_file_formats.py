"""Exercise every persistence surface: vector files, LID profiles, layer
assignments, ground truth, and index snapshots.

Run: python demos/05_file_formats.py
"""

import tempfile
from pathlib import Path

import numpy as np

import hnswpp as hp

tmp = Path(tempfile.mkdtemp())
data = hp.generate_synthetic("gaussian", dim=8, n=600, seed=5, clusters=4, spread=0.2)
base, queries = data[:500], data[500:]

# fvecs round trip is byte-exact
fv = tmp / "base.fvecs"
hp.write_fvecs(fv, base)
again = tmp / "again.fvecs"
hp.write_fvecs(again, hp.load_fvecs(fv))
print(f"fvecs round trip byte-identical: {fv.read_bytes() == again.read_bytes()}")

profile = hp.build_profile(base, k=32)
pf = tmp / "profile.csv"
hp.save_profile(profile, pf)
print(f"profile round trip equal: {hp.load_profile(pf) == profile}")

assignment = hp.assign_layers(profile.normalized_lids, top_l=4, ml=0.36, rng_seed=1)
af = tmp / "assignment.csv"
hp.save_assignment(assignment, af)
print(f"assignment round trip equal: {hp.load_assignment(af) == assignment}")

gt = hp.build_ground_truth(base, queries, 10)
gf = tmp / "gt.bin"
hp.save_ground_truth(gt, gf)
loaded_gt = hp.load_ground_truth(gf)
print(f"ground truth labels equal: {np.array_equal(loaded_gt.labels, gt.labels)}")

config = hp.IndexConfig(m=4, ef_construction=32, ef_search=32, variant="full",
                        lid_threshold=0.8, rng_seed=2)
index = hp.build_index(base, config, profile=profile)
sf = tmp / "index.bin"
hp.save_index(index, sf)
loaded = hp.load_index(sf, profile=profile, ef_search=32)
same = all(
    index.search(queries[i], 5).neighbors == loaded.search(queries[i], 5).neighbors
    for i in range(20)
)
print(f"snapshot answers match the in-memory index: {same}")

# malformed inputs produce diagnostics, never crashes
bad = tmp / "bad.fvecs"
bad.write_bytes(b"\x02\x00\x00\x00\x00\x00")
try:
    hp.load_fvecs(bad)
except hp.FormatError as exc:
    print(f"malformed fvecs rejected: {exc}")

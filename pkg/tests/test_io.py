"""File-format round trips and malformed-input diagnostics."""

import struct

import numpy as np
import pytest

from hnswpp import (
    FormatError,
    IndexConfig,
    LidProfile,
    build_ground_truth,
    build_index,
    build_profile,
    dataset_preset,
    generate_synthetic,
    load_assignment,
    load_bvecs,
    load_dataset,
    load_fvecs,
    load_ground_truth,
    load_index,
    load_profile,
    random_assignment,
    save_assignment,
    save_ground_truth,
    save_index,
    save_profile,
    write_bvecs,
    write_fvecs,
)


class TestFvecs:
    def test_single_handcrafted_record(self, tmp_path):
        path = tmp_path / "one.fvecs"
        path.write_bytes(struct.pack("<Iff", 2, 1.0, 2.0))
        data = load_fvecs(path)
        np.testing.assert_array_equal(data, [[1.0, 2.0]])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.fvecs"
        path.write_bytes(b"")
        assert load_fvecs(path).shape[0] == 0

    def test_round_trip_bytes(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.random((37, 13)).astype(np.float32)
        path = tmp_path / "rt.fvecs"
        write_fvecs(path, data)
        original = path.read_bytes()
        write_fvecs(path, load_fvecs(path))
        assert path.read_bytes() == original

    def test_truncated_record_names_offset(self, tmp_path):
        path = tmp_path / "bad.fvecs"
        path.write_bytes(struct.pack("<Iff", 2, 1.0, 2.0) + struct.pack("<If", 2, 3.0))
        with pytest.raises(FormatError, match="byte 16"):
            load_fvecs(path)

    def test_inconsistent_dimension(self, tmp_path):
        path = tmp_path / "mixed.fvecs"
        path.write_bytes(struct.pack("<Iff", 2, 1.0, 2.0) + struct.pack("<Ifff", 3, 1.0, 2.0, 3.0))
        with pytest.raises(FormatError, match="inconsistent|truncated"):
            load_fvecs(path)

    def test_zero_dimension(self, tmp_path):
        path = tmp_path / "zero.fvecs"
        path.write_bytes(struct.pack("<I", 0))
        with pytest.raises(FormatError, match="zero dimension"):
            load_fvecs(path)


class TestBvecs:
    def test_bytes_widen_to_float(self, tmp_path):
        path = tmp_path / "one.bvecs"
        path.write_bytes(struct.pack("<I", 3) + bytes([0, 128, 255]))
        np.testing.assert_array_equal(load_bvecs(path), [[0.0, 128.0, 255.0]])

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.bvecs"
        path.write_bytes(b"")
        assert load_bvecs(path).shape[0] == 0

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        data = rng.integers(0, 256, size=(20, 5))
        path = tmp_path / "rt.bvecs"
        write_bvecs(path, data)
        original = path.read_bytes()
        write_bvecs(path, load_bvecs(path))
        assert path.read_bytes() == original

    def test_truncated(self, tmp_path):
        path = tmp_path / "bad.bvecs"
        path.write_bytes(struct.pack("<I", 4) + bytes([1, 2]))
        with pytest.raises(FormatError, match="truncated"):
            load_bvecs(path)


class TestSynthetic:
    def test_same_seed_identical(self):
        a = generate_synthetic("gaussian", 6, 500, 9, clusters=4, spread=0.1)
        b = generate_synthetic("gaussian", 6, 500, 9, clusters=4, spread=0.1)
        assert a.tobytes() == b.tobytes()

    def test_random_preset_shape(self):
        # matches the protocol shape: d=100, 11,000 points
        spec = dataset_preset("random")
        base, queries = load_dataset(spec)
        assert base.shape == (10_000, 100)
        assert queries.shape == (1_000, 100)

    def test_gaussian_preset_shape(self):
        # d=12 synthetic clustered source
        spec = dataset_preset("gaussian")
        base, queries = load_dataset(spec)
        assert base.shape[1] == 12
        assert len(base) == 10_000 and len(queries) == 1_000

    def test_uniform_range(self):
        data = generate_synthetic("uniform", 8, 100, 3)
        assert data.min() >= 0.0 and data.max() <= 1.0


class TestProfileRoundTrip:
    def test_round_trip_equality(self, tmp_path):
        rng = np.random.default_rng(2)
        data = rng.random((60, 4)).astype(np.float32)
        profile = build_profile(data, k=8)
        path = tmp_path / "profile.csv"
        save_profile(profile, path)
        loaded = load_profile(path)
        assert loaded == profile

    def test_round_trip_bytes(self, tmp_path):
        rng = np.random.default_rng(3)
        profile = build_profile(rng.random((40, 3)).astype(np.float32), k=6)
        path = tmp_path / "profile.csv"
        save_profile(profile, path)
        original = path.read_bytes()
        save_profile(load_profile(path), path)
        assert path.read_bytes() == original

    def test_bad_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("nope\n1,2,3\n")
        with pytest.raises(FormatError, match="header"):
            load_profile(path)

    def test_missing_trailer(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("label,raw_lid,normalized_lid\n0,5.0,0.0\n1,6.0,1.0\n")
        with pytest.raises(FormatError, match="avg_distance"):
            load_profile(path)

    def test_gap_in_labels(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text(
            "label,raw_lid,normalized_lid\n0,5.0,0.0\n2,6.0,1.0\n#avg_distance=1.0\n#k_used=4\n"
        )
        with pytest.raises(FormatError, match="labels must cover"):
            load_profile(path)


class TestAssignmentRoundTrip:
    def test_round_trip(self, tmp_path):
        assignment = random_assignment(50, 4, 0.4, 7, branches=2)
        path = tmp_path / "assign.csv"
        save_assignment(assignment, path)
        assert load_assignment(path) == assignment

    def test_bad_branch_index(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("label,layer,branch\n0,0,0\n1,0,3\n#branches=2\n")
        with pytest.raises(FormatError, match="branch index"):
            load_assignment(path)


class TestGroundTruthRoundTrip:
    def _make(self):
        rng = np.random.default_rng(4)
        base = rng.random((30, 5)).astype(np.float32)
        queries = rng.random((6, 5)).astype(np.float32)
        return build_ground_truth(base, queries, 4)

    def test_round_trip_bytes(self, tmp_path):
        gt = self._make()
        path = tmp_path / "gt.bin"
        save_ground_truth(gt, path)
        original = path.read_bytes()
        meta = (tmp_path / "gt.bin.meta").read_text()
        loaded = load_ground_truth(path)
        save_ground_truth(loaded, path)
        assert path.read_bytes() == original
        assert (tmp_path / "gt.bin.meta").read_text() == meta
        assert loaded.k_gt == gt.k_gt
        np.testing.assert_array_equal(loaded.labels, gt.labels)

    def test_missing_sidecar(self, tmp_path):
        gt = self._make()
        path = tmp_path / "gt.bin"
        save_ground_truth(gt, path)
        (tmp_path / "gt.bin.meta").unlink()
        with pytest.raises(FormatError, match="sidecar"):
            load_ground_truth(path)

    def test_ragged_rows_rejected(self, tmp_path):
        gt = self._make()
        path = tmp_path / "gt.bin"
        save_ground_truth(gt, path)
        raw = bytearray(path.read_bytes())
        raw[0] = 200  # corrupt the first row's k field
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            load_ground_truth(path)


class TestLoaderTotality:
    def test_loaders_parse_or_diagnose_arbitrary_bytes(self, tmp_path):
        # every loader either returns data or raises FormatError; no other
        # exception type escapes on garbage input
        rng = np.random.default_rng(99)
        loaders = [load_fvecs, load_bvecs, load_profile, load_assignment, load_index]
        for trial in range(25):
            blob = rng.bytes(int(rng.integers(0, 200)))
            path = tmp_path / f"junk_{trial}"
            path.write_bytes(blob)
            for loader in loaders:
                try:
                    loader(path)
                except FormatError:
                    pass

    def test_ground_truth_loader_totality(self, tmp_path):
        rng = np.random.default_rng(100)
        for trial in range(10):
            path = tmp_path / f"junk_{trial}"
            path.write_bytes(rng.bytes(int(rng.integers(0, 120))))
            (tmp_path / f"junk_{trial}.meta").write_text("k_gt=3 base_sha256=x query_sha256=y\n")
            try:
                load_ground_truth(path)
            except FormatError:
                pass


class TestSnapshot:
    def _build(self, variant="full", n=120, seed=5):
        rng = np.random.default_rng(seed)
        data = rng.random((n, 6)).astype(np.float32)
        profile = build_profile(data, k=8)
        config = IndexConfig(
            m=4, ef_construction=16, ef_search=16, variant=variant,
            lid_threshold=0.8, rng_seed=seed,
        )
        return data, profile, build_index(data, config, profile=profile)

    def test_round_trip_bytes(self, tmp_path):
        _, profile, index = self._build()
        path = tmp_path / "index.bin"
        save_index(index, path)
        original = path.read_bytes()
        loaded = load_index(path, profile=profile)
        save_index(loaded, path)
        assert path.read_bytes() == original

    def test_loaded_index_answers_queries(self, tmp_path):
        data, profile, index = self._build()
        path = tmp_path / "index.bin"
        save_index(index, path)
        loaded = load_index(path, profile=profile, ef_search=16)
        for qi in (0, 3, 11):
            a = index.search(data[qi], 5)
            b = loaded.search(data[qi], 5)
            assert [l for l, _ in a.neighbors] == [l for l, _ in b.neighbors]

    def test_corrupted_magic(self, tmp_path):
        _, _, index = self._build(variant="basic")
        path = tmp_path / "index.bin"
        save_index(index, path)
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="magic"):
            load_index(path)

    def test_truncated_snapshot(self, tmp_path):
        _, _, index = self._build(variant="basic")
        path = tmp_path / "index.bin"
        save_index(index, path)
        path.write_bytes(path.read_bytes()[:40])
        with pytest.raises(FormatError):
            load_index(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        _, _, index = self._build(variant="basic")
        path = tmp_path / "index.bin"
        save_index(index, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            load_index(path)

    def test_branch_byte_outside_variant_rejected(self, tmp_path):
        # a single-branch snapshot claiming a node on branch 1 is corrupt
        _, _, index = self._build(variant="basic")
        path = tmp_path / "index.bin"
        save_index(index, path)
        raw = bytearray(path.read_bytes())
        n, dim = index.count, index.dim
        offset = 8 + 24 + n * dim * 4  # first (layer, branch) pair
        raw[offset + 1] = 1
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="branch"):
            load_index(path)

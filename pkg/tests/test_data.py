"""Synthetic data generation, disk layout, and image ingestion."""

import numpy as np
import pytest

from gaxkit import formats
from gaxkit.data import (Dataset, DatasetSpec, gen_data, ingest_images,
                         load_dataset, make_blobs, write_dataset)


def _files_under(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            DatasetSpec(class_count=1)
        with pytest.raises(ValueError):
            DatasetSpec(train=-1)
        with pytest.raises(ValueError):
            DatasetSpec(kind="bogus")


class TestBlobs:
    def test_values_in_unit_interval(self):
        ds = make_blobs(DatasetSpec(train=20, val=10, test=10, seed=1))
        for split in (ds.train, ds.val, ds.test):
            assert split.x.min() >= 0.0 and split.x.max() <= 1.0

    def test_deterministic_per_seed(self):
        spec = DatasetSpec(train=10, val=5, test=5, seed=7)
        a, b = make_blobs(spec), make_blobs(spec)
        np.testing.assert_array_equal(a.train.x, b.train.x)
        np.testing.assert_array_equal(a.train.y, b.train.y)

    def test_linear_probe_learns_blobs(self):
        from gaxkit import LinearModel, StopRule, train
        spec = DatasetSpec(class_count=2, train=120, val=60, test=60,
                           image_shape=(3, 16, 16), seed=3)
        ds = make_blobs(spec)
        probe = LinearModel.init((3, 16, 16), 2, seed=0)
        result = train(probe, ds,
                       StopRule(target_val_accuracy=None, max_iterations=300),
                       seed=0)
        assert result.val_accuracy > 0.9

    def test_balanced_labels(self):
        ds = make_blobs(DatasetSpec(class_count=4, train=40, val=8, test=8,
                                    seed=2))
        counts = np.bincount(ds.train.y, minlength=4)
        np.testing.assert_array_equal(counts, [10, 10, 10, 10])


class TestDiskRoundTrip:
    def test_gen_data_byte_identical_across_runs(self, tmp_path):
        spec = DatasetSpec(class_count=2, train=10, val=4, test=4,
                           image_shape=(3, 8, 8), seed=7)
        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        gen_data(spec, out1)
        gen_data(spec, out2)
        files1, files2 = _files_under(out1), _files_under(out2)
        assert files1 == files2 and files1
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()

    def test_load_matches_memory(self, tmp_path):
        spec = DatasetSpec(class_count=3, train=9, val=3, test=3,
                           image_shape=(3, 8, 8), seed=5)
        ds = make_blobs(spec)
        write_dataset(ds, tmp_path)
        loaded = load_dataset(tmp_path)
        np.testing.assert_array_equal(loaded.train.x, ds.train.x)
        np.testing.assert_array_equal(loaded.train.y, ds.train.y)
        assert loaded.train.ids == ds.train.ids
        assert loaded.class_count == 3

    def test_single_channel_uses_pgm(self, tmp_path):
        spec = DatasetSpec(train=2, val=0, test=0, image_shape=(1, 6, 6),
                           seed=0)
        gen_data(spec, tmp_path)
        assert list(tmp_path.glob("train/class_*/*.pgm"))

    def test_zero_samples_gives_valid_manifest(self, tmp_path):
        spec = DatasetSpec(train=0, val=0, test=0, seed=0)
        gen_data(spec, tmp_path)
        loaded = load_dataset(tmp_path)
        assert len(loaded.train) == 0
        assert (tmp_path / "train" / "class_0").is_dir()
        assert (tmp_path / "test" / "class_1").is_dir()


class TestIngest:
    def _write_class_dirs(self, root, shapes, *, color=False):
        rng = np.random.default_rng(0)
        for ci, shape in enumerate(shapes):
            d = root / f"class_{ci}"
            d.mkdir(parents=True)
            for i in range(2):
                if color:
                    img = rng.integers(0, 256, size=(*shape, 3), dtype=np.uint8)
                    formats.write_ppm(d / f"s{i}.ppm", img)
                else:
                    img = rng.integers(0, 256, size=shape, dtype=np.uint8)
                    formats.write_pgm(d / f"s{i}.pgm", img)

    def test_grayscale_stack_replicates_channels(self, tmp_path):
        self._write_class_dirs(tmp_path, [(8, 8), (8, 8)])
        split = ingest_images(tmp_path, (8, 8), grayscale_stack=True)
        assert split.x.shape == (4, 3, 8, 8)
        np.testing.assert_array_equal(split.x[:, 0], split.x[:, 1])
        np.testing.assert_array_equal(split.x[:, 0], split.x[:, 2])

    def test_same_size_resize_only_rescales(self, tmp_path):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        d = tmp_path / "class_a"
        d.mkdir()
        formats.write_ppm(d / "x.ppm", img)
        split = ingest_images(tmp_path, (6, 6))
        np.testing.assert_array_equal(split.x[0],
                                      np.moveaxis(img, 2, 0) / 255.0)

    def test_mixed_sizes_resized_to_target(self, tmp_path):
        self._write_class_dirs(tmp_path, [(5, 7), (12, 4)], color=True)
        split = ingest_images(tmp_path, (8, 8))
        assert split.x.shape == (4, 3, 8, 8)
        assert split.x.min() >= 0.0 and split.x.max() <= 1.0

    def test_corrupt_file_skipped_with_warning(self, tmp_path):
        self._write_class_dirs(tmp_path, [(4, 4), (4, 4)])
        (tmp_path / "class_0" / "bad.pgm").write_bytes(b"not an image")
        with pytest.warns(UserWarning, match="skipping"):
            split = ingest_images(tmp_path, (4, 4))
        assert len(split) == 4

    def test_empty_class_folder_is_error(self, tmp_path):
        self._write_class_dirs(tmp_path, [(4, 4)])
        (tmp_path / "class_empty").mkdir()
        with pytest.raises(ValueError, match="empty class"):
            ingest_images(tmp_path, (4, 4))

    def test_class_names_follow_directory_order(self, tmp_path):
        self._write_class_dirs(tmp_path, [(4, 4), (4, 4)])
        split = ingest_images(tmp_path, (4, 4))
        assert split.class_names == ["class_0", "class_1"]
        np.testing.assert_array_equal(np.unique(split.y), [0, 1])

"""CSV loading, split construction, oversampling, and batch stream tests."""

import numpy as np
import pytest

from chemimg.dataset import (
    ArrayImageSource,
    BadLabel,
    BatchStream,
    DatasetSplit,
    FoldSplit,
    LabeledRecord,
    MissingSmilesColumn,
    MoleculeImageSource,
    SingleClass,
    TooFewRecords,
    eval_batches,
    label_matrix,
    load_csv,
    load_table,
    make_split,
    oversample_minority,
    read_manifest,
    write_manifest,
)
from chemimg.raster import ChannelSchema


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def toy_records(n, seed=0):
    rng = np.random.default_rng(seed)
    return [LabeledRecord("C" * (1 + i % 3), [float(rng.integers(0, 2))], i)
            for i in range(n)]


class TestLoadCsv:
    def test_basic(self, tmp_path):
        p = write_csv(tmp_path / "d.csv",
                      "smiles,tox\nCCO,1\nCC,0\nc1ccccc1,1\n")
        records = load_csv(p)
        assert len(records) == 3
        assert records[0].smiles == "CCO"
        assert records[0].labels == [1.0]
        assert [r.record_id for r in records] == [0, 1, 2]

    def test_multi_task_with_blanks(self, tmp_path):
        p = write_csv(tmp_path / "d.csv",
                      "smiles,a,b,c\nCCO,1,,0\nCC,,0.5,\n")
        records = load_csv(p)
        assert records[0].labels == [1.0, None, 0.0]
        assert records[1].labels == [None, 0.5, None]

    def test_smiles_column_anywhere(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,smiles,b\n1,CCO,0\n")
        records, names = load_table(p)
        assert records[0].smiles == "CCO"
        assert names == ["a", "b"]

    def test_missing_smiles_column(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "smile,tox\nCCO,1\n")
        with pytest.raises(MissingSmilesColumn):
            load_csv(p)

    def test_non_numeric_label(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "smiles,tox\nCCO,maybe\n")
        with pytest.raises(BadLabel):
            load_csv(p)

    def test_all_labels_missing(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "smiles,a,b\nCCO,,\n")
        with pytest.raises(BadLabel):
            load_csv(p)

    def test_binary_validation(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "smiles,tox\nCCO,0.7\n")
        assert load_csv(p)  # fine when not declared binary
        with pytest.raises(BadLabel):
            load_csv(p, binary_tasks={"tox"})

    def test_label_matrix(self):
        records = [LabeledRecord("C", [1.0, None], 0),
                   LabeledRecord("CC", [None, 0.0], 1)]
        labels, mask = label_matrix(records)
        assert labels.tolist() == [[1.0, 0.0], [0.0, 0.0]]
        assert mask.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def assert_partition(split, n):
    test = set(split.test_ids)
    assert len(split.test_ids) == len(test)
    for fold in split.folds:
        train, val = set(fold.train_ids), set(fold.validation_ids)
        assert not test & (train | val)
        assert not train & val
        assert train | val | test == set(range(n))


class TestMakeSplit:
    def test_sixth_of_600(self):
        split = make_split(toy_records(600), 1 / 6, k=5, seed=1)
        assert len(split.test_ids) == 100
        sizes = [len(f.validation_ids) for f in split.folds]
        assert all(99 <= s <= 101 for s in sizes)
        assert sum(sizes) == 500

    def test_tenth_of_600(self):
        split = make_split(toy_records(600), 1 / 10, k=5, seed=1)
        assert len(split.test_ids) == 60
        sizes = [len(f.validation_ids) for f in split.folds]
        assert all(107 <= s <= 109 for s in sizes)

    def test_minimum_case(self):
        split = make_split(toy_records(6), 1 / 6, k=5, seed=0)
        assert len(split.test_ids) == 1
        assert all(len(f.validation_ids) == 1 for f in split.folds)
        assert_partition(split, 6)

    def test_partition_property(self):
        for n in (6, 13, 20, 47):
            for seed in range(3):
                split = make_split(toy_records(n), 1 / 6, k=5, seed=seed)
                assert_partition(split, n)

    def test_determinism(self):
        a = make_split(toy_records(50), 1 / 6, seed=7)
        b = make_split(toy_records(50), 1 / 6, seed=7)
        assert a.test_ids == b.test_ids
        assert all(fa.train_ids == fb.train_ids
                   for fa, fb in zip(a.folds, b.folds))
        c = make_split(toy_records(50), 1 / 6, seed=8)
        assert a.test_ids != c.test_ids

    def test_too_few_records(self):
        with pytest.raises(TooFewRecords):
            make_split(toy_records(5), 1 / 6, k=5, seed=0)
        # 7 records minus 2 test leaves 5 for 5 folds: legal; minus more is not
        with pytest.raises(TooFewRecords):
            make_split(toy_records(6), 0.5, k=5, seed=0)


class TestOversample:
    def test_nine_to_one(self):
        labels = np.array([[1.0]] * 100 + [[0.0]] * 900)
        train = list(range(1000))
        out = oversample_minority(train, labels, 0)
        assert len(out) == 1800
        counts = np.bincount(out)
        assert all(counts[i] == 9 for i in range(100))
        assert all(counts[i] == 1 for i in range(100, 1000))

    def test_balanced_unchanged(self):
        labels = np.array([[1.0]] * 500 + [[0.0]] * 500)
        train = list(range(1000))
        assert oversample_minority(train, labels, 0) == train

    def test_ten_three(self):
        labels = np.array([[0.0]] * 10 + [[1.0]] * 3)
        out = oversample_minority(list(range(13)), labels, 0)
        assert len(out) == 19
        counts = np.bincount(out)
        assert all(counts[i] == 3 for i in (10, 11, 12))

    def test_single_class_raises(self):
        labels = np.array([[1.0]] * 5)
        with pytest.raises(SingleClass):
            oversample_minority(list(range(5)), labels, 0)

    def test_never_adds_foreign_ids(self):
        labels = np.array([[i % 4 == 0] for i in range(40)], dtype=float)
        train = list(range(0, 40, 2))
        out = oversample_minority(train, labels, 0)
        assert set(out) == set(train)

    def test_ratio_band_after_oversampling(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            n = int(rng.integers(10, 80))
            labels = rng.integers(0, 2, size=(n, 1)).astype(float)
            if labels.sum() in (0, n):
                continue
            out = oversample_minority(list(range(n)), labels, 0)
            pos = sum(labels[i, 0] == 1 for i in out)
            neg = len(out) - pos
            ratio = max(pos, neg) / min(pos, neg)
            assert 1.0 <= ratio < 2.0

    def test_missing_labels_not_duplicated(self):
        labels = [[1.0], [1.0], [0.0]] + [[None]] * 3 + [[0.0]] * 4
        rows = [r if r[0] is not None else [np.nan] for r in labels]
        matrix = np.array(rows, dtype=float)
        out = oversample_minority(list(range(10)), matrix, 0)
        counts = np.bincount(out, minlength=10)
        # 2 positives vs 5 negatives: ratio 2 duplicates the positives;
        # unlabeled rows 3..5 must stay single copies
        assert counts.tolist() == [2, 2, 1, 1, 1, 1, 1, 1, 1, 1]


class TestManifest:
    def test_round_trip(self, tmp_path):
        split = make_split(toy_records(30), 1 / 6, seed=3)
        path = tmp_path / "split.json"
        write_manifest(split, path)
        back = read_manifest(path)
        assert back.seed == split.seed
        assert back.test_ids == split.test_ids
        for a, b in zip(back.folds, split.folds):
            assert a.train_ids == b.train_ids
            assert a.validation_ids == b.validation_ids

    def test_identical_files_for_same_seed(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_manifest(make_split(toy_records(30), 1 / 6, seed=3), a)
        write_manifest(make_split(toy_records(30), 1 / 6, seed=3), b)
        assert a.read_bytes() == b.read_bytes()


def simple_split(train_ids, val_ids=()):
    return DatasetSplit(seed=0, test_ids=[],
                        folds=[FoldSplit(list(train_ids), list(val_ids))])


class TestBatchStream:
    def test_batch_sizes(self):
        records = toy_records(65)
        source = ArrayImageSource(
            [np.zeros((8, 8, 1), dtype=np.float32)] * 65)
        stream = BatchStream(simple_split(range(65)), 0, source, records,
                             batch=32, augment=False, seed=0)
        sizes = [x.shape[0] for x, _, _ in stream.epoch(0)]
        assert sizes == [32, 32, 1]

    def test_epoch_replay_identical(self):
        records = toy_records(20)
        rng = np.random.default_rng(0)
        imgs = [rng.normal(size=(8, 8, 1)).astype(np.float32)
                for _ in range(20)]
        source = ArrayImageSource(imgs)
        stream = BatchStream(simple_split(range(20)), 0, source, records,
                             batch=8, augment=False, seed=5)
        a = list(stream.epoch(0))
        b = list(stream.epoch(0))
        for (xa, ya, ma), (xb, yb, mb) in zip(a, b):
            assert np.array_equal(xa, xb)
            assert np.array_equal(ya, yb)
            assert np.array_equal(ma, mb)

    def test_epochs_differ_in_order(self):
        records = toy_records(20)
        imgs = [np.full((4, 4, 1), i, dtype=np.float32) for i in range(20)]
        source = ArrayImageSource(imgs)
        stream = BatchStream(simple_split(range(20)), 0, source, records,
                             batch=20, augment=False, seed=5)
        x0 = next(iter(stream.epoch(0)))[0]
        x1 = next(iter(stream.epoch(1)))[0]
        assert not np.array_equal(x0, x1)

    def test_every_id_covered_each_epoch(self):
        records = toy_records(33)
        imgs = [np.full((4, 4, 1), i, dtype=np.float32) for i in range(33)]
        source = ArrayImageSource(imgs)
        stream = BatchStream(simple_split(range(33)), 0, source, records,
                             batch=10, augment=False, seed=1)
        seen = set()
        for x, _, _ in stream.epoch(4):
            seen.update(int(v) for v in x[:, 0, 0, 0])
        assert seen == set(range(33))

    def test_rotated_benzene_keeps_six_atom_pixels(self):
        records = [LabeledRecord("c1ccccc1", [1.0], i) for i in range(8)]
        source = MoleculeImageSource(records, ChannelSchema("Std"))
        stream = BatchStream(simple_split(range(8)), 0, source, records,
                             batch=4, augment=True, seed=2)
        for x, _, _ in stream.epoch(0):
            for img in x:
                assert int((img == 6.0).sum()) == 6

    def test_labels_and_mask_follow_ids(self):
        records = [LabeledRecord("C", [float(i % 2), None], i)
                   for i in range(10)]
        imgs = [np.full((4, 4, 1), i, dtype=np.float32) for i in range(10)]
        source = ArrayImageSource(imgs)
        stream = BatchStream(simple_split(range(10)), 0, source, records,
                             batch=5, augment=False, seed=3)
        for x, y, m in stream.epoch(0):
            ids = [int(v) for v in x[:, 0, 0, 0]]
            assert y[:, 0].tolist() == [i % 2 for i in ids]
            assert np.all(m[:, 0] == 1.0)
            assert np.all(m[:, 1] == 0.0)

    def test_eval_batches_preserve_order(self):
        records = toy_records(7)
        imgs = [np.full((4, 4, 1), i, dtype=np.float32) for i in range(7)]
        source = ArrayImageSource(imgs)
        batches = list(eval_batches([3, 1, 5], source, records, batch=2))
        got = [int(v) for x, _, _ in batches for v in x[:, 0, 0, 0]]
        assert got == [3, 1, 5]


class TestMoleculeImageSource:
    def test_noise_stable_per_record(self):
        records = [LabeledRecord("C", [1.0], i) for i in range(3)]
        source = MoleculeImageSource(
            records, ChannelSchema("Noise", noise_density=0.02, seed=1))
        a = source.image(0)
        assert np.array_equal(a, source.image(0))
        assert np.array_equal(a, source.image_rotated(0, 90.0))
        assert not np.array_equal(a, source.image(1))
        assert int((a != 0).sum()) == 128

    def test_truth_uses_record_label(self):
        records = [LabeledRecord("c1ccccc1", [1.0], 0),
                   LabeledRecord("c1ccccc1", [0.0], 1)]
        source = MoleculeImageSource(records, ChannelSchema("Truth"))
        assert source.image(0).any()
        assert not source.image(1).any()

    def test_rotation_fallback_when_pose_leaves_field(self):
        # 26 carbons: ~28 A wide, fits axis-aligned, exceeds the field
        # during a 45 degree pose only via bounding box growth
        records = [LabeledRecord("C" * 26, [1.0], 0)]
        source = MoleculeImageSource(records, ChannelSchema("Std"))
        base = source.image(0)
        for ang in (0.0, 30.0, 45.0, 60.0, 90.0):
            img = source.image_rotated(0, ang)
            assert int((img == 6.0).sum()) == 26 or np.array_equal(img, base)

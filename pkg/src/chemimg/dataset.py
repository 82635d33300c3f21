"""Labeled SMILES tables, split construction, oversampling, batch streams.

Splits are seeded and fully reproducible: a shuffled permutation yields
the test block first, the remainder is cut into k near-equal folds, and
minority oversampling happens after splitting, only inside training
partitions. Batch streams re-derive their RNG from (seed, epoch) so any
epoch can be replayed in isolation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import raster
from .layout import center_and_rotate, generate_coords
from .metrics import SingleClass
from .molgraph import molecule_from_smiles
from .percept import annotate_atoms


class DatasetError(ValueError):
    pass


class MissingSmilesColumn(DatasetError):
    pass


class BadLabel(DatasetError):
    pass


class TooFewRecords(DatasetError):
    pass


@dataclass
class LabeledRecord:
    smiles: str
    labels: list[float | None]
    record_id: int


@dataclass
class FoldSplit:
    train_ids: list[int]
    validation_ids: list[int]


@dataclass
class DatasetSplit:
    seed: int
    test_ids: list[int]
    folds: list[FoldSplit] = field(default_factory=list)


def load_table(path) -> tuple[list[LabeledRecord], list[str]]:
    """Read a labeled CSV; returns (records, task names).

    The file must have a header with a "smiles" column; every other column
    is one task. Empty cells are missing labels.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingSmilesColumn(f"{path}: empty file") from None
        if "smiles" not in header:
            raise MissingSmilesColumn(
                f"{path}: no 'smiles' column in header {header}")
        smiles_col = header.index("smiles")
        task_names = [h for i, h in enumerate(header) if i != smiles_col]
        task_cols = [i for i in range(len(header)) if i != smiles_col]

        records = []
        for row_idx, row in enumerate(reader):
            labels: list[float | None] = []
            for col in task_cols:
                cell = row[col].strip() if col < len(row) else ""
                if cell == "":
                    labels.append(None)
                    continue
                try:
                    labels.append(float(cell))
                except ValueError:
                    raise BadLabel(
                        f"{path} row {row_idx}: non-numeric label "
                        f"{cell!r} in column {header[col]!r}") from None
            if not any(l is not None for l in labels):
                raise BadLabel(f"{path} row {row_idx}: every label missing")
            records.append(LabeledRecord(row[smiles_col].strip(), labels,
                                         row_idx))
    return records, task_names


def load_csv(path, binary_tasks: set[str] | None = None
             ) -> list[LabeledRecord]:
    """Records only, with optional binary-label validation."""
    records, names = load_table(path)
    if binary_tasks:
        check = [i for i, n in enumerate(names) if n in binary_tasks]
        for rec in records:
            for i in check:
                v = rec.labels[i]
                if v is not None and v not in (0.0, 1.0):
                    raise BadLabel(
                        f"record {rec.record_id}: task {names[i]!r} "
                        f"declared binary but holds {v}")
    return records


def label_matrix(records) -> tuple[np.ndarray, np.ndarray]:
    """(labels, mask) float arrays of shape (N, tasks); missing -> 0, mask 0."""
    n_tasks = len(records[0].labels) if records else 0
    labels = np.zeros((len(records), n_tasks), dtype=np.float64)
    mask = np.zeros((len(records), n_tasks), dtype=np.float64)
    for r, rec in enumerate(records):
        for t, v in enumerate(rec.labels):
            if v is not None:
                labels[r, t] = v
                mask[r, t] = 1.0
    return labels, mask


def make_split(records, test_fraction: float, k: int = 5,
               seed: int = 0) -> DatasetSplit:
    """Seeded shuffle; test block first, then k near-equal CV folds."""
    n = len(records)
    if n < k + 1:
        raise TooFewRecords(f"{n} records cannot fill {k} folds plus test")
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must be in (0,1), got "
                           f"{test_fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = round(test_fraction * n)
    test_ids = [int(i) for i in perm[:n_test]]
    rest = perm[n_test:]
    if len(rest) < k:
        raise TooFewRecords(
            f"only {len(rest)} records left for {k} folds after the test "
            f"split")
    chunks = np.array_split(rest, k)
    folds = []
    for f in range(k):
        validation = [int(i) for i in chunks[f]]
        train = [int(i) for g, chunk in enumerate(chunks) if g != f
                 for i in chunk]
        folds.append(FoldSplit(train_ids=train, validation_ids=validation))
    return DatasetSplit(seed=seed, test_ids=test_ids, folds=folds)


def oversample_minority(train_ids, labels, task_index: int) -> list[int]:
    """Duplicate minority-class ids so each appears floor(maj/min) times.

    `labels` is indexable by record id; missing labels are ignored for the
    ratio and never duplicated. Happens after splitting, training ids only.
    """
    def task_label(rid):
        row = labels[rid]
        value = row[task_index] if not np.isscalar(row) else row
        return None if value is None or (isinstance(value, float)
                                         and np.isnan(value)) else value

    pos = [i for i in train_ids if task_label(i) == 1]
    neg = [i for i in train_ids if task_label(i) == 0]
    if not pos or not neg:
        raise SingleClass(
            f"task {task_index} has a single class in this training fold")
    minority = set(pos if len(pos) <= len(neg) else neg)
    ratio = max(len(pos), len(neg)) // min(len(pos), len(neg))
    out = list(train_ids)
    if ratio > 1:
        for rid in train_ids:
            if rid in minority:
                out.extend([rid] * (ratio - 1))
    return out


def write_manifest(split: DatasetSplit, path) -> None:
    payload = {
        "seed": split.seed,
        "test_ids": split.test_ids,
        "folds": [{"train_ids": f.train_ids,
                   "validation_ids": f.validation_ids}
                  for f in split.folds],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_manifest(path) -> DatasetSplit:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return DatasetSplit(
        seed=payload["seed"],
        test_ids=[int(i) for i in payload["test_ids"]],
        folds=[FoldSplit([int(i) for i in f["train_ids"]],
                         [int(i) for i in f["validation_ids"]])
               for f in payload["folds"]],
    )


class ImageSource(Protocol):
    """Anything that yields one image per record id."""

    def image(self, record_id: int) -> np.ndarray: ...

    def image_rotated(self, record_id: int, angle: float) -> np.ndarray: ...


class MoleculeImageSource:
    """Encodes records on demand; rotation re-rasterizes at the
    coordinate level so channel values stay categorical.

    When a rotated pose leaves the pixel field or collides, the unrotated
    image is used for that example instead of failing the batch.
    """

    def __init__(self, records, schema: raster.ChannelSchema,
                 truth_task: int = 0):
        self.records = {r.record_id: r for r in records}
        self.schema = schema
        self.truth_task = truth_task
        self._cache: dict[int, np.ndarray] = {}
        self._geometry: dict[int, tuple] = {}

    def _prepare(self, record_id: int):
        if record_id not in self._geometry:
            rec = self.records[record_id]
            mol = molecule_from_smiles(rec.smiles)
            coords = generate_coords(mol)
            needs_ann = self.schema.kind in raster.ENGINEERED
            ann = annotate_atoms(mol) if needs_ann else None
            self._geometry[record_id] = (mol, coords, ann)
        return self._geometry[record_id]

    def _label_for_truth(self, record_id: int) -> float:
        value = self.records[record_id].labels[self.truth_task]
        if value is None:
            raise BadLabel(
                f"record {record_id} lacks the Truth task label")
        return value

    def _render(self, record_id: int, angle: float) -> np.ndarray:
        kind = self.schema.kind
        if kind == "Noise":
            # per-record seed: same record, same speckle, any epoch
            seed = int(np.random.SeedSequence(
                [self.schema.seed, record_id]).generate_state(1)[0])
            return raster.make_noise_image(seed, self.schema.noise_density)
        mol, coords, ann = self._prepare(record_id)
        posed = center_and_rotate(coords, angle)
        if kind == "Truth":
            return raster.make_truth_image(
                mol, posed, self._label_for_truth(record_id))
        return raster.rasterize(mol, posed, ann, self.schema)

    def image(self, record_id: int) -> np.ndarray:
        if record_id not in self._cache:
            self._cache[record_id] = self._render(record_id, 0.0)
        return self._cache[record_id]

    def image_rotated(self, record_id: int, angle: float) -> np.ndarray:
        if self.schema.kind == "Noise":
            return self.image(record_id)
        try:
            return self._render(record_id, angle)
        except (raster.MoleculeTooLarge, raster.AtomPixelCollision):
            return self.image(record_id)


class ArrayImageSource:
    """Pre-encoded tensors (e.g. from a CIMG file), keyed by record id.

    Rotation falls back to nearest-neighbor pixel rotation: exact channel
    values, aliased geometry.
    """

    def __init__(self, images, record_ids=None):
        ids = record_ids if record_ids is not None else range(len(images))
        self._images = {int(i): img for i, img in zip(ids, images)}

    def image(self, record_id: int) -> np.ndarray:
        return self._images[record_id]

    def image_rotated(self, record_id: int, angle: float) -> np.ndarray:
        return raster.rotate_image_nn(self._images[record_id], angle)


class BatchStream:
    """Deterministic per-epoch training batches for one fold."""

    def __init__(self, split: DatasetSplit, fold: int, source: ImageSource,
                 records, batch: int = 32, augment: bool = True,
                 seed: int = 0):
        self.train_ids = list(split.folds[fold].train_ids)
        self.source = source
        self.batch = batch
        self.augment = augment
        self.seed = seed
        self.labels, self.mask = label_matrix(records)

    def epoch(self, epoch_index: int):
        """Yield (images, labels, mask) batches for one epoch.

        The RNG is derived from (seed, epoch_index): replaying an epoch
        yields the identical stream.
        """
        rng = np.random.default_rng((self.seed, epoch_index))
        order = rng.permutation(len(self.train_ids))
        ids = [self.train_ids[i] for i in order]
        angles = rng.uniform(0.0, 180.0, size=len(ids))
        for start in range(0, len(ids), self.batch):
            chunk = ids[start:start + self.batch]
            chunk_angles = angles[start:start + self.batch]
            if self.augment:
                images = [self.source.image_rotated(i, float(a))
                          for i, a in zip(chunk, chunk_angles)]
            else:
                images = [self.source.image(i) for i in chunk]
            yield (np.stack(images),
                   self.labels[chunk],
                   self.mask[chunk])


def batch_stream(split, fold, source, records, batch: int = 32,
                 augment: bool = True, seed: int = 0) -> BatchStream:
    return BatchStream(split, fold, source, records, batch=batch,
                       augment=augment, seed=seed)


def eval_batches(ids, source: ImageSource, records, batch: int = 32):
    """Unaugmented, unshuffled batches for validation and test."""
    labels, mask = label_matrix(records)
    ids = list(ids)
    for start in range(0, len(ids), batch):
        chunk = ids[start:start + batch]
        yield (np.stack([source.image(i) for i in chunk]),
               labels[chunk],
               mask[chunk])

"""Replayable experiment runs shared by the CLI subcommands.

A run directory is self-describing: config.json echoes every knob,
split.json fixes the partition, skipped.csv explains dropped rows, and
history/evaluation CSVs sit next to their rendered figures. Rerunning
with the same config reproduces the manifests and (single-threaded) the
history byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from . import nn, pipeline, raster, report
from .dataset import (
    DatasetError,
    MoleculeImageSource,
    BatchStream,
    label_matrix,
    load_table,
    make_split,
    oversample_minority,
    read_manifest,
    write_manifest,
)
from .metrics import classification_report, regression_report

# CLI spelling -> channel schema kind
SCHEMA_BY_FLAG = {
    "std": "Std", "reda": "RedA", "redb": "RedB",
    "enga": "EngA", "engb": "EngB", "engc": "EngC", "engd": "EngD",
    "noise": "Noise", "truth": "Truth", "scrambled": "Scrambled",
}

TRUTH_BAND = (0.99, 1.0)
CHANCE_BAND = (0.40, 0.60)


@dataclass
class ExperimentConfig:
    input_csv: str
    out_dir: str
    schema: str = "std"
    noise_density: float = 0.02
    test_fraction: float = 1.0 / 6.0
    folds: int = 5
    seed: int = 0
    arch: str = "T1_F8"
    epochs: int = 100
    patience: int = 25
    batch: int = 32
    rotate: bool = True
    oversample_task: str | None = None
    fold: int = 0
    standardize: bool | None = None
    shuffle_labels: bool = False

    def __post_init__(self):
        if self.schema not in SCHEMA_BY_FLAG:
            raise DatasetError(f"unknown schema {self.schema!r}")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True,
                          indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def read(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())


def build_schema(config: ExperimentConfig) -> raster.ChannelSchema:
    return raster.ChannelSchema(
        kind=SCHEMA_BY_FLAG[config.schema],
        noise_density=config.noise_density,
        seed=config.seed,
        scramble_seed=config.seed,
    )


def infer_head(records) -> str:
    """Sigmoid when every present label is 0/1, linear otherwise."""
    for rec in records:
        for value in rec.labels:
            if value is not None and value not in (0.0, 1.0):
                return "linear"
    return "sigmoid"


def _shuffled_label_view(records, seed: int):
    """Copies of `records` with labels permuted between molecules.

    Used as the encoder's view in the negative self-test: images carry
    another molecule's label while training still sees the originals,
    so any apparent signal would be fabricated by the harness.
    """
    rng = np.random.default_rng((seed, 104729))
    perm = rng.permutation(len(records))
    return [dataclasses.replace(rec, labels=list(records[j].labels))
            for rec, j in zip(records, perm)]


def _prepare_records(config: ExperimentConfig):
    """Load, probe encodability, and reindex survivors densely.

    Returns (records, encode_view, task_names, skips). record_ids run
    0..m-1 in original CSV order, as the split and label matrices
    expect. encode_view is what the image source must see: identical to
    records except under shuffle_labels, where labels are permuted
    between molecules (images then carry decoupled labels while
    training targets stay original).
    """
    records, task_names = load_table(config.input_csv)
    view = records
    if config.shuffle_labels:
        view = _shuffled_label_view(records, config.seed)
    schema = build_schema(config)
    probe = MoleculeImageSource(view, schema)
    kept, skips = pipeline.probe_source(probe, view)
    kept_set = set(kept)
    keep_flags = [rec.record_id in kept_set for rec in records]
    records = [dataclasses.replace(rec, record_id=i) for i, rec in
               enumerate(r for r, k in zip(records, keep_flags) if k)]
    view = records if not config.shuffle_labels else [
        dataclasses.replace(rec, record_id=i) for i, rec in
        enumerate(v for v, k in zip(view, keep_flags) if k)]
    return records, view, task_names, skips


def _eval_arrays(ids, source, labels, mask):
    images = np.stack([source.image(i) for i in ids])
    return images, labels[list(ids)], mask[list(ids)]


@dataclass
class RunResult:
    config: ExperimentConfig
    model: nn.TrainedModel
    split: object
    task_names: list
    fold: int
    val_metric: float
    head: str
    out_dir: str


def run_training(config: ExperimentConfig, log=None) -> list[RunResult]:
    """Train one fold (or all folds when config.fold is -1).

    Writes per-fold model_fold{f}.cmdl, history_fold{f}.csv and .png,
    plus config.json, split.json and skipped.csv, into config.out_dir.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    config.write(os.path.join(config.out_dir, "config.json"))
    records, encode_view, task_names, skips = _prepare_records(config)
    pipeline.write_skip_log(skips, os.path.join(config.out_dir,
                                                "skipped.csv"))
    schema = build_schema(config)
    split = make_split(records, config.test_fraction, k=config.folds,
                       seed=config.seed)
    write_manifest(split, os.path.join(config.out_dir, "split.json"))

    source = MoleculeImageSource(encode_view, schema)
    labels, mask = label_matrix(records)
    head = infer_head(records)
    if config.oversample_task is not None:
        if config.oversample_task not in task_names:
            raise DatasetError(
                f"task {config.oversample_task!r} not in {task_names}")
        task_index = task_names.index(config.oversample_task)
        for fold_split in split.folds:
            fold_split.train_ids = oversample_minority(
                fold_split.train_ids, labels, task_index)

    standardize = config.standardize
    if standardize is None:
        standardize = schema.kind in raster.ENGINEERED

    folds = range(config.folds) if config.fold == -1 else [config.fold]
    results = []
    for fold in folds:
        if not 0 <= fold < config.folds:
            raise DatasetError(f"fold {fold} outside 0..{config.folds - 1}")
        standardizer = None
        if standardize:
            train_images = np.stack(
                [source.image(i)
                 for i in sorted(set(split.folds[fold].train_ids))])
            standardizer = nn.ChannelStandardizer().fit(train_images)
            with open(os.path.join(config.out_dir,
                                   f"standardizer_fold{fold}.json"),
                      "w") as fh:
                json.dump(standardizer.to_dict(), fh)
        depth, filters = nn.parse_arch(config.arch)
        net_config = nn.NetworkConfig(
            depth_t=depth, filters_f=filters,
            input_channels=schema.channels, tasks=len(task_names),
            head=head)
        network = nn.build_network(net_config, seed=config.seed)
        stream = BatchStream(split, fold, source, records,
                             batch=config.batch, augment=config.rotate,
                             seed=config.seed)
        val_data = _eval_arrays(split.folds[fold].validation_ids, source,
                                labels, mask)
        model = nn.train(network, stream, val_data, epochs=config.epochs,
                         patience=config.patience,
                         standardizer=standardizer, log=log)
        nn.save_checkpoint(network, os.path.join(
            config.out_dir, f"model_fold{fold}.cmdl"))
        history_path = os.path.join(config.out_dir,
                                    f"history_fold{fold}.csv")
        nn.write_history_csv(model.history, history_path)
        report.save_history_figure(
            model.history, history_path.replace(".csv", ".png"),
            title=f"{net_config.name} {schema.kind} fold {fold}")
        best = (model.history[model.best_epoch - 1]["val_metric"]
                if model.best_epoch else float("nan"))
        results.append(RunResult(
            config=config, model=model, split=split,
            task_names=task_names, fold=fold, val_metric=best,
            head=head, out_dir=config.out_dir))
    return results


def _metric_of(network, data, head, standardizer):
    images, labels, mask = data
    if standardizer is not None:
        images = standardizer.transform(images)
    preds = network.predict(images)
    if head == "sigmoid":
        return classification_report(preds, labels, mask).aggregate
    return regression_report(preds, labels, mask).aggregate


def run_evaluation(run_dir, out_dir=None, log=None) -> dict:
    """Score every trained fold in `run_dir` and the best model on test.

    Writes evaluation.csv and evaluation.png; returns the summary dict.
    """
    out_dir = out_dir or run_dir
    os.makedirs(out_dir, exist_ok=True)
    config = ExperimentConfig.read(os.path.join(run_dir, "config.json"))
    records, encode_view, task_names, _skips = _prepare_records(config)
    split = read_manifest(os.path.join(run_dir, "split.json"))
    schema = build_schema(config)
    source = MoleculeImageSource(encode_view, schema)
    labels, mask = label_matrix(records)
    head = infer_head(records)
    higher_better = head == "sigmoid"

    fold_metrics = {}
    networks = {}
    for fold in range(config.folds):
        path = os.path.join(run_dir, f"model_fold{fold}.cmdl")
        if not os.path.exists(path):
            continue
        network = nn.load_checkpoint(path)
        std_path = os.path.join(run_dir, f"standardizer_fold{fold}.json")
        standardizer = None
        if os.path.exists(std_path):
            with open(std_path) as fh:
                standardizer = nn.ChannelStandardizer.from_dict(
                    json.load(fh))
        val = _eval_arrays(split.folds[fold].validation_ids, source,
                           labels, mask)
        fold_metrics[fold] = _metric_of(network, val, head, standardizer)
        networks[fold] = (network, standardizer)
    if not fold_metrics:
        raise DatasetError(f"no model_fold*.cmdl files in {run_dir}")

    pick = max if higher_better else min
    best_fold = pick(fold_metrics, key=lambda f: fold_metrics[f])
    test = _eval_arrays(split.test_ids, source, labels, mask)
    network, standardizer = networks[best_fold]
    test_metric = _metric_of(network, test, head, standardizer)
    mean_val = float(np.mean(list(fold_metrics.values())))

    metric_name = "auc" if head == "sigmoid" else "rmse"
    csv_path = os.path.join(out_dir, "evaluation.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"fold,val_{metric_name}\n")
        for fold in sorted(fold_metrics):
            fh.write(f"{fold},{fold_metrics[fold]!r}\n")
        fh.write(f"mean,{mean_val!r}\n")
        fh.write(f"test(best=fold{best_fold}),{test_metric!r}\n")
    report.save_fold_metric_figure(
        [fold_metrics[f] for f in sorted(fold_metrics)], test_metric,
        metric_name, os.path.join(out_dir, "evaluation.png"))
    summary = {"fold_metrics": fold_metrics, "mean_val": mean_val,
               "best_fold": best_fold, "test_metric": test_metric,
               "metric": metric_name}
    if log is not None:
        for fold in sorted(fold_metrics):
            log(f"fold {fold}: validation {metric_name} "
                f"{fold_metrics[fold]:.4f}")
        log(f"mean validation {metric_name}: {mean_val:.4f}")
        log(f"test {metric_name} (best model, fold {best_fold}): "
            f"{test_metric:.4f}")
    return summary


def run_controls(base: ExperimentConfig, with_shuffle_test: bool = False,
                 log=None) -> list[dict]:
    """Truth and Noise control experiments with pass/fail banding.

    The optional shuffled-label run is a negative self-test: Truth
    images encode another molecule's label, so its AUC must fall back
    into the chance band.
    """
    os.makedirs(base.out_dir, exist_ok=True)
    base.write(os.path.join(base.out_dir, "config.json"))
    plans = [("truth", "truth", False, TRUTH_BAND),
             ("noise", "noise", False, CHANCE_BAND)]
    if with_shuffle_test:
        plans.append(("truth_shuffled", "truth", True, CHANCE_BAND))
    rows = []
    for name, schema, shuffled, (lo, hi) in plans:
        sub = dataclasses.replace(
            base, schema=schema, shuffle_labels=shuffled,
            out_dir=os.path.join(base.out_dir, name))
        if log is not None:
            log(f"running {name} control ({sub.arch}, "
                f"{sub.epochs} epochs)")
        result = run_training(sub, log=None)[0]
        auc = result.val_metric
        status = "PASS" if lo <= auc <= hi else "FAIL"
        rows.append({"experiment": name, "auc": auc,
                     "band_lo": lo, "band_hi": hi, "status": status})
        if log is not None:
            log(f"{name}: validation AUC {auc:.4f} "
                f"(band [{lo:.2f}, {hi:.2f}]) {status}")
    csv_path = os.path.join(base.out_dir, "controls.csv")
    with open(csv_path, "w") as fh:
        fh.write("experiment,auc,band_lo,band_hi,status\n")
        for row in rows:
            fh.write(f"{row['experiment']},{row['auc']!r},"
                     f"{row['band_lo']},{row['band_hi']},"
                     f"{row['status']}\n")
    report.save_controls_figure(rows,
                                os.path.join(base.out_dir, "controls.png"))
    return rows

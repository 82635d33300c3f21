"""Command-line entry point wiring the pipeline into replayable runs.

Exit codes: 0 success, 1 usage error, 2 data error (bad inputs or
files), 3 internal error. Every subcommand that writes a directory
drops a config.json echo there so the run can be reproduced exactly.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import nn, pipeline, raster, report
from .dataset import DatasetError, load_table, make_split, write_manifest
from .experiment import (
    ExperimentConfig,
    SCHEMA_BY_FLAG,
    build_schema,
    run_controls,
    run_evaluation,
    run_training,
)
from .layout import LayoutOverlap, center_and_rotate, generate_coords
from .metrics import MetricError
from .molgraph import SmilesError, molecule_from_smiles
from .percept import annotate_atoms

DATA_ERRORS = (DatasetError, SmilesError, MetricError, raster.RasterError,
               raster.FormatError, nn.CheckpointError, LayoutOverlap,
               OSError)

_SCHEMA = click.Choice(sorted(SCHEMA_BY_FLAG), case_sensitive=False)


def _check_arch(ctx, param, value):
    try:
        nn.parse_arch(value)
    except nn.ConfigError as exc:
        raise click.BadParameter(str(exc))
    return value


@click.group()
def cli():
    """Molecular image encoding and desk-scale CNN training."""


@cli.command()
@click.argument("csv_path", metavar="CSV")
@click.option("--schema", type=_SCHEMA, default="std", show_default=True)
@click.option("--out", "out_dir", required=True,
              help="Output directory for the CIMG file and logs.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise-density", type=float, default=0.02,
              show_default=True)
def encode(csv_path, schema, out_dir, seed, noise_density):
    """Encode a labeled SMILES table into an images.cimg tensor file.

    Rows that cannot be encoded are listed in skipped.csv with reasons;
    the tensor file keeps the surviving rows in input order.
    """
    config = ExperimentConfig(input_csv=csv_path, out_dir=out_dir,
                              schema=schema.lower(), seed=seed,
                              noise_density=noise_density)
    os.makedirs(out_dir, exist_ok=True)
    config.write(os.path.join(out_dir, "config.json"))
    records, _tasks = load_table(csv_path)
    images, kept, skips = pipeline.encode_records(
        records, build_schema(config), threads=pipeline.resolve_threads())
    raster.write_tensor_file(list(images),
                             os.path.join(out_dir, "images.cimg"))
    with open(os.path.join(out_dir, "ids.csv"), "w") as fh:
        fh.write("record_id,smiles\n")
        by_id = {r.record_id: r for r in records}
        for rid in kept:
            fh.write(f'{rid},"{by_id[rid].smiles}"\n')
    pipeline.write_skip_log(skips, os.path.join(out_dir, "skipped.csv"))
    click.echo(f"encoded {len(kept)} records "
               f"({images.shape[-1]} channel(s)), skipped {len(skips)}")


@cli.command()
@click.argument("csv_path", metavar="CSV")
@click.option("--out", "out_dir", required=True)
@click.option("--test-fraction", type=float, default=1.0 / 6.0,
              show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def split(csv_path, out_dir, test_fraction, folds, seed):
    """Write a seeded test/cross-validation split manifest."""
    config = ExperimentConfig(input_csv=csv_path, out_dir=out_dir,
                              test_fraction=test_fraction, folds=folds,
                              seed=seed)
    os.makedirs(out_dir, exist_ok=True)
    config.write(os.path.join(out_dir, "config.json"))
    records, _tasks = load_table(csv_path)
    manifest = make_split(records, test_fraction, k=folds, seed=seed)
    write_manifest(manifest, os.path.join(out_dir, "split.json"))
    click.echo(f"split {len(records)} records: {len(manifest.test_ids)} "
               f"test, {folds} folds")


@cli.command()
@click.argument("csv_path", metavar="CSV")
@click.option("--out", "out_dir", required=True)
@click.option("--schema", type=_SCHEMA, default="std", show_default=True)
@click.option("--arch", default="T1_F8", show_default=True,
              callback=_check_arch, help="Architecture name T<d>_F<n>.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--test-fraction", type=float, default=1.0 / 6.0,
              show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--fold", type=int, default=0, show_default=True,
              help="Fold to train; -1 trains every fold.")
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--patience", type=int, default=25, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--noise-density", type=float, default=0.02,
              show_default=True)
@click.option("--rotate/--no-rotate", default=True, show_default=True,
              help="Rotation augmentation of training images.")
@click.option("--oversample-task", default=None,
              help="Task column to oversample in training folds.")
@click.option("--standardize/--no-standardize", default=None,
              help="Per-channel input standardization "
                   "(default: on for Eng schemas).")
@click.option("--quiet", is_flag=True, default=False,
              help="Suppress per-epoch lines.")
def train(csv_path, out_dir, schema, arch, seed, test_fraction, folds,
          fold, epochs, patience, batch, noise_density, rotate,
          oversample_task, standardize, quiet):
    """Train a model on encoded molecular images, one fold at a time."""
    config = ExperimentConfig(
        input_csv=csv_path, out_dir=out_dir, schema=schema.lower(),
        noise_density=noise_density, test_fraction=test_fraction,
        folds=folds, seed=seed, arch=arch, epochs=epochs,
        patience=patience, batch=batch, rotate=rotate,
        oversample_task=oversample_task, fold=fold,
        standardize=standardize)
    log = None if quiet else click.echo
    results = run_training(config, log=log)
    for result in results:
        click.echo(
            f"fold {result.fold}: best epoch {result.model.best_epoch}, "
            f"validation loss {result.model.best_val_loss:.5f}, "
            f"validation metric {result.val_metric:.4f}")
    click.echo(f"outputs in {out_dir}")


@cli.command()
@click.argument("run_dir", metavar="RUN_DIR")
@click.option("--out", "out_dir", default=None,
              help="Where to write evaluation outputs (default RUN_DIR).")
def evaluate(run_dir, out_dir):
    """Score the trained folds in RUN_DIR and the best model on test."""
    run_evaluation(run_dir, out_dir=out_dir, log=click.echo)


@cli.command()
@click.argument("csv_path", metavar="CSV")
@click.option("--out", "out_dir", required=True)
@click.option("--arch", default="T1_F8", show_default=True,
              callback=_check_arch)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--patience", type=int, default=30, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--test-fraction", type=float, default=1.0 / 6.0,
              show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--noise-density", type=float, default=0.02,
              show_default=True)
@click.option("--with-shuffle-test", is_flag=True, default=False,
              help="Also run the shuffled-label negative self-test.")
def controls(csv_path, out_dir, arch, seed, epochs, patience, batch,
             test_fraction, folds, noise_density, with_shuffle_test):
    """Run the Truth and Noise control experiments with pass/fail bands.

    Truth must reach near-perfect validation AUC; Noise must stay in
    the chance band. Together they show the harness learns exactly what
    the images carry, nothing more.
    """
    base = ExperimentConfig(
        input_csv=csv_path, out_dir=out_dir, arch=arch, seed=seed,
        epochs=epochs, patience=patience, batch=batch,
        test_fraction=test_fraction, folds=folds,
        noise_density=noise_density, rotate=False)
    rows = run_controls(base, with_shuffle_test=with_shuffle_test,
                        log=click.echo)
    failed = [r for r in rows if r["status"] != "PASS"]
    click.echo(f"{len(rows) - len(failed)}/{len(rows)} controls passed")


@cli.command()
@click.argument("smiles", nargs=-1, required=True)
@click.option("--schema", type=_SCHEMA, default="std", show_default=True)
@click.option("--out", "out_dir", required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise-density", type=float, default=0.02,
              show_default=True)
@click.option("--angle", type=float, default=0.0, show_default=True,
              help="Pose rotation in degrees before rasterizing.")
def preview(smiles, schema, out_dir, seed, noise_density, angle):
    """Render SMILES to per-channel figures and raw grayscale PNGs."""
    config = ExperimentConfig(input_csv="-", out_dir=out_dir,
                              schema=schema.lower(), seed=seed,
                              noise_density=noise_density)
    chan_schema = build_schema(config)
    os.makedirs(out_dir, exist_ok=True)
    for i, text in enumerate(smiles):
        mol = molecule_from_smiles(text)
        coords = center_and_rotate(generate_coords(mol), angle)
        if chan_schema.kind == "Noise":
            image = raster.make_noise_image(seed + i, noise_density)
        elif chan_schema.kind == "Truth":
            image = raster.make_truth_image(mol, coords, 1.0)
        else:
            ann = (annotate_atoms(mol)
                   if chan_schema.kind in raster.ENGINEERED else None)
            image = raster.rasterize(mol, coords, ann, chan_schema)
        stem = os.path.join(out_dir, f"preview_{i}")
        report.save_channel_figure(image, stem + ".png", title=text)
        raster.export_png_preview(image, stem + "_ch0_raw.png", channel=0)
        filled = int(np.count_nonzero(image[:, :, 0]))
        click.echo(f"{text}: {len(mol.atoms)} atoms, {filled} channel-0 "
                   f"pixels -> {stem}.png")


def run(argv=None) -> int:
    """Dispatch with the documented exit codes instead of click's."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DATA_ERRORS as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except Exception as exc:
        click.echo(f"internal error: {type(exc).__name__}: {exc}",
                   err=True)
        return 3


def main(argv=None):
    sys.exit(run(argv))

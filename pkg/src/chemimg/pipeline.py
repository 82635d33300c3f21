"""Bulk encoding: records in, image tensors out, skips logged not raised.

Encoding is parallel over records with order-preserving output; the
CHEMIMG_THREADS environment variable caps the worker count. Per-record
failures (unparsable SMILES, missing charge parameters, layout overlap,
molecules too large for the pixel field) become skip-log rows so one bad
row never sinks a dataset.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import raster
from .dataset import BadLabel, MoleculeImageSource
from .layout import LayoutOverlap
from .molgraph import SmilesError
from .percept import MissingParams

# per-record conditions that skip the record instead of failing the run
SKIP_ERRORS = (SmilesError, MissingParams, LayoutOverlap,
               raster.MoleculeTooLarge, raster.AtomPixelCollision, BadLabel)

SKIP_LOG_COLUMNS = ("record_id", "smiles", "reason")


@dataclass(frozen=True)
class SkipEntry:
    record_id: int
    smiles: str
    reason: str


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit request, capped by CHEMIMG_THREADS."""
    threads = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get("CHEMIMG_THREADS", "").strip()
    if cap:
        threads = min(threads, max(1, int(cap)))
    return max(1, threads)


def encode_records(records, schema: raster.ChannelSchema,
                   threads: int | None = None, truth_task: int = 0
                   ) -> tuple[np.ndarray, list[int], list[SkipEntry]]:
    """Encode every record, in input order.

    Returns (images, kept_ids, skips) where images[i] belongs to
    kept_ids[i]. The output is identical for any worker count.
    """
    source = MoleculeImageSource(records, schema, truth_task=truth_task)

    def render(record):
        try:
            return source.image(record.record_id), None
        except SKIP_ERRORS as exc:
            reason = f"{type(exc).__name__}: {exc}"
            return None, SkipEntry(record.record_id, record.smiles, reason)

    workers = resolve_threads(threads)
    if workers == 1 or len(records) <= 1:
        results = [render(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(render, records))
    images = [img for img, skip in results if skip is None]
    kept = [r.record_id for r, (_, skip) in zip(records, results)
            if skip is None]
    skips = [skip for _, skip in results if skip is not None]
    if images:
        stacked = np.stack(images)
    else:
        stacked = np.zeros((0, raster.IMAGE_SIZE, raster.IMAGE_SIZE,
                            schema.channels), dtype=np.float32)
    return stacked, kept, skips


def write_skip_log(skips, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SKIP_LOG_COLUMNS) + "\n")
        for s in skips:
            reason = s.reason.replace('"', "'")
            fh.write(f'{s.record_id},"{s.smiles}","{reason}"\n')


def probe_source(source: MoleculeImageSource, records
                 ) -> tuple[list[int], list[SkipEntry]]:
    """Render each record once through `source`, splitting survivors
    from skips. Renders land in the source cache, so later batch
    streaming reuses them."""
    kept, skips = [], []
    for record in records:
        try:
            source.image(record.record_id)
            kept.append(record.record_id)
        except SKIP_ERRORS as exc:
            skips.append(SkipEntry(record.record_id, record.smiles,
                                   f"{type(exc).__name__}: {exc}"))
    return kept, skips

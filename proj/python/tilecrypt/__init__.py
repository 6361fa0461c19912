"""Selective ABE packaging of tiled 360 video and a CDN simulator."""

import csv
import io

from ._tilecrypt import (
    blob_overhead,
    decrypt_segment,
    encrypt_segment,
    frame_types,
    keygen,
    main,
    select_tiles,
    setup,
    simulate,
    synth_segment,
    tile_coverage,
)


def run_metrics(**kwargs):
    """Runs one simulation and returns its metric rows as dicts."""
    return list(csv.DictReader(io.StringIO(simulate(**kwargs))))


__all__ = [
    "blob_overhead",
    "decrypt_segment",
    "encrypt_segment",
    "frame_types",
    "keygen",
    "main",
    "run_metrics",
    "select_tiles",
    "setup",
    "simulate",
    "synth_segment",
    "tile_coverage",
]

"""Field snapshot files: raw little-endian float64 plus a JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Field, Grid

_DTYPE = np.dtype("<f8")


def _paths(stem: str | Path) -> tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix in (".bin", ".json"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def save_snapshot(stem, field: Field, time: float = 0.0, scheme: str = "", potential: str = "", **extra) -> Path:
    """Write ``<stem>.bin`` and ``<stem>.json``; returns the ``.bin`` path."""
    bin_path, meta_path = _paths(stem)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    field.data.astype(_DTYPE, copy=False).tofile(bin_path)
    meta = {
        "dim": field.grid.dim,
        "M": field.grid.M,
        "L": field.grid.L,
        "time": float(time),
        "scheme": scheme,
        "potential": potential,
    }
    meta.update(extra)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return bin_path


def load_snapshot(stem) -> tuple[Field, dict]:
    bin_path, meta_path = _paths(stem)
    meta = json.loads(meta_path.read_text())
    grid = Grid(int(meta["dim"]), int(meta["M"]), float(meta["L"]))
    data = np.fromfile(bin_path, dtype=_DTYPE)
    if data.size != grid.size:
        raise ValueError(f"{bin_path}: {data.size} values, metadata implies {grid.size}")
    return Field(grid, data.astype(np.float64)), meta

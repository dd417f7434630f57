"""Field serialization: flat binary array plus a structured text header.

A field saved under base path P produces P.yaml (grid geometry, spacing,
far-field model, dtype, element count) and P.bin (raw little-endian float64,
C order).  CSV writers for probe curves and report tables live here too.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .funcspace import DiscreteField, FarField, Grid

_DTYPE = "<f8"


def write_field(field: DiscreteField, base: str | Path) -> tuple:
    base = Path(base)
    header = {
        "kind": "nlreg-field",
        "version": 1,
        "dimension": field.grid.dim,
        "lo": [float(v) for v in field.grid.lo],
        "hi": [float(v) for v in field.grid.hi],
        "h": float(field.grid.h),
        "shape": list(field.grid.shape),
        "dtype": _DTYPE,
        "order": "C",
        "count": int(field.values.size),
        "far_field": {"kind": field.far_field.kind,
                      "exponent": float(field.far_field.exponent)},
    }
    header_path = base.with_suffix(base.suffix + ".yaml") \
        if base.suffix == ".field" else Path(str(base) + ".yaml")
    bin_path = Path(str(base) + ".bin")
    header["data"] = bin_path.name
    with open(header_path, "w") as fh:
        yaml.safe_dump(header, fh, sort_keys=True)
    field.values.astype(_DTYPE).tofile(bin_path)
    return header_path, bin_path


def read_field(base: str | Path) -> DiscreteField:
    base = Path(base)
    header_path = Path(str(base) + ".yaml")
    with open(header_path) as fh:
        header = yaml.safe_load(fh)
    if header.get("kind") != "nlreg-field":
        raise ValueError(f"{header_path} is not a field header")
    grid = Grid.make(header["lo"], header["hi"], header["h"])
    bin_path = header_path.parent / header["data"]
    values = np.fromfile(bin_path, dtype=header["dtype"])
    if values.size != header["count"]:
        raise ValueError(f"{bin_path}: expected {header['count']} values, "
                         f"found {values.size}")
    far = FarField(header["far_field"]["kind"], header["far_field"]["exponent"])
    return DiscreteField(grid, values.reshape(grid.shape), far)


def write_csv(path: str | Path, rows, header: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v

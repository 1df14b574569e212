"""Snapshot files, series CSV and JSON run configurations."""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import jsonschema
import numpy as np

from .grids import FieldPair, RadialGrid, TensorGrid

MAGIC = b"NLS6SNAP"
VERSION = 1
_HEADER = struct.Struct("<8sIBIQddd")
_GRID_CODES = {"radial": 0, "tensor": 1}


# --------------------------------------------------------------- snapshots

def write_snapshot(path, fp: FieldPair, t: float) -> None:
    g = fp.grid
    extent = g.r_max if g.kind == "radial" else g.L
    head = _HEADER.pack(MAGIC, VERSION, _GRID_CODES[g.kind], g.d, g.size, extent, fp.kappa, t)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(fp.u, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(fp.v, dtype="<c16").tobytes())


def read_snapshot(path):
    """Return ``(FieldPair, t)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, version, code, d, n, extent, kappa, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    if len(data) != _HEADER.size + 32 * n:
        raise ValueError(f"{path}: expected {n} complex values per field")
    if code == 0:
        grid = RadialGrid(n, extent, d)
    elif code == 1:
        m = round(n ** (1.0 / d))
        if m ** d != n:
            raise ValueError(f"{path}: {n} points is not a d = {d} tensor grid")
        grid = TensorGrid(d, extent, m)
    else:
        raise ValueError(f"{path}: unknown grid type {code}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    u = vals[:n].reshape(grid.shape)
    v = vals[n:].reshape(grid.shape)
    return FieldPair(u, v, kappa, grid), t


# -------------------------------------------------------------------- CSV

def write_series_csv(path, series: dict, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for i in range(len(series["t"])):
            w.writerow([repr(float(series[c][i])) for c in columns])


def read_series_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {c: np.array([float(r[i]) for r in body]) for i, c in enumerate(head)}


# ----------------------------------------------------------------- config

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC = {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 6}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kappa", "grid", "init"],
    "properties": {
        "run_id": {"type": "string"},
        "kappa": _POS,
        "grid": {
            "oneOf": [
                {"type": "object", "additionalProperties": False,
                 "required": ["type", "n", "r_max"],
                 "properties": {"type": {"const": "radial"},
                                "d": {"type": "integer", "minimum": 1},
                                "n": {"type": "integer", "minimum": 16}, "r_max": _POS}},
                {"type": "object", "additionalProperties": False,
                 "required": ["type", "d", "m", "L"],
                 "properties": {"type": {"const": "tensor"},
                                "d": {"type": "integer", "minimum": 1, "maximum": 3},
                                "m": {"type": "integer", "minimum": 2}, "L": _POS}},
            ]
        },
        "init": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind", "c"],
                 "properties": {"kind": {"const": "cW"}, "c": _NUM}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "amp", "width"],
                 "properties": {"kind": {"const": "gaussian"}, "amp": _NUM, "amp_v": _NUM,
                                "width": _POS, "center": _VEC, "phase_xi": _VEC}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "path"],
                 "properties": {"kind": {"const": "snapshot"}, "path": {"type": "string"}}},
            ]
        },
        "integrator": {
            "type": "object", "additionalProperties": False,
            "properties": {"dt0": _POS, "dt_min": _POS, "t_end": {"type": "number", "minimum": 0},
                           "cfl_c": _POS, "sponge_width": {"type": "number", "minimum": 0},
                           "sponge_strength": {"type": "number", "minimum": 0},
                           "record_every": {"type": "integer", "minimum": 1},
                           "snapshot_every": {"type": "integer", "minimum": 0},
                           "blowup_H_factor": _POS, "eta_fraction": _POS},
        },
        "cutoff_R": _POS,
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "csv": {"type": "boolean"},
                           "snapshots": {"type": "boolean"}},
        },
    },
}


def _all_finite(obj) -> bool:
    if isinstance(obj, dict):
        return all(_all_finite(v) for v in obj.values())
    if isinstance(obj, list):
        return all(_all_finite(v) for v in obj)
    if isinstance(obj, float):
        return math.isfinite(obj)
    return True


def validate_config(cfg: dict) -> dict:
    """Schema check plus finiteness; raises ``ValueError`` with the reason."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValueError(f"invalid config: {exc.message}") from None
    if not _all_finite(cfg):
        raise ValueError("invalid config: non-finite number")
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        # reject NaN / Infinity literals as well
        cfg = json.load(fh, parse_constant=lambda c: float("nan"))
    return validate_config(cfg)

"""Plain-text checkpoints.

Header line ``pathgan-ckpt v1``, then one line per array::

    name ndim dim_1 ... dim_ndim value_1 value_2 ...

Values are written with 17 significant digits, so float64 arrays round-trip
exactly.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import CheckpointError

HEADER = "pathgan-ckpt v1"


def format_arrays(arrays: dict) -> str:
    lines = [HEADER]
    for name, value in arrays.items():
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"array name {name!r} must be non-empty and contain no whitespace")
        a = np.asarray(value, dtype=np.float64)
        head = [name, str(a.ndim), *map(str, a.shape)]
        lines.append(" ".join(head + ["%.17g" % v for v in a.ravel()]))
    return "\n".join(lines) + "\n"


def parse_arrays(text: str) -> dict:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CheckpointError(f"missing '{HEADER}' header")
    out = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tok = line.split()
        try:
            name, ndim = tok[0], int(tok[1])
            shape = tuple(int(d) for d in tok[2:2 + ndim])
            values = np.array([float(v) for v in tok[2 + ndim:]], dtype=np.float64)
        except (IndexError, ValueError) as exc:
            raise CheckpointError(f"line {lineno}: {exc}") from exc
        if len(shape) != ndim or values.size != int(np.prod(shape)):
            raise CheckpointError(f"line {lineno}: {name} expects shape {shape}, got {values.size} values")
        if name in out:
            raise CheckpointError(f"line {lineno}: duplicate array {name}")
        out[name] = values.reshape(shape)
    return out


def save_arrays(path, arrays: dict):
    Path(path).write_text(format_arrays(arrays))


def load_arrays(path) -> dict:
    return parse_arrays(Path(path).read_text())

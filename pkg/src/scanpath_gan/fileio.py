"""Scanpath files and binary PGM images.

Two scanpath formats are supported:

``planar-lines``
    one JSON object per line, ``{"image_id": ..., "observer": ..., "fixations": [[x, y, t], ...]}``
    with x and y already normalized to [0, 1].
``spherical-csv``
    header ``image,observer,index,lon_deg,lat_deg,t``; one fixation per row,
    longitude/latitude in degrees.
"""
from __future__ import annotations

import csv
import io
import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import Scanpath, validate_scanpath
from .errors import (
    BadHeader,
    BadMagic,
    DataError,
    ParseError,
    TruncatedData,
    UnsupportedMaxval,
    ValidationError,
)

SPHERICAL_HEADER = ["image", "observer", "index", "lon_deg", "lat_deg", "t"]


def guess_format(path) -> str:
    return "spherical-csv" if str(path).lower().endswith(".csv") else "planar-lines"


def _validated(paths, record_numbers):
    for rec, sp in zip(record_numbers, paths):
        try:
            validate_scanpath(sp)
        except DataError as exc:
            raise ValidationError(rec, exc) from exc
    return paths


def parse_planar_lines(text: str) -> list[Scanpath]:
    paths, recs = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, lineno, exc.colno) from exc
        try:
            fx = doc["fixations"]
            sp = Scanpath(
                str(doc["image_id"]),
                tuple((float(x), float(y), float(t)) for x, y, t in fx),
                None if doc.get("observer") is None else str(doc["observer"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed record: {exc}", lineno) from exc
        paths.append(sp)
        recs.append(lineno)
    return _validated(paths, recs)


def _deg_to_unit(lon_deg, lat_deg):
    return lon_deg / 360.0 + 0.5, 0.5 - lat_deg / 180.0


def _unit_to_deg(x, y):
    return (x - 0.5) * 360.0, (0.5 - y) * 180.0


def parse_spherical_csv(text: str) -> list[Scanpath]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return []
    if header != SPHERICAL_HEADER:
        raise ParseError(f"expected header {','.join(SPHERICAL_HEADER)}", 1)
    groups = defaultdict(list)
    first_line = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 6:
            raise ParseError(f"expected 6 fields, got {len(row)}", lineno)
        vals = []
        for col, raw in enumerate(row[2:], start=3):
            try:
                vals.append(float(raw))
            except ValueError:
                raise ParseError(f"not a number: {raw!r}", lineno, col) from None
        key = (row[0], row[1])
        first_line.setdefault(key, lineno)
        x, y = _deg_to_unit(vals[1], vals[2])
        groups[key].append((vals[0], x, y, vals[3]))
    paths, recs = [], []
    for key, rows in groups.items():
        rows.sort(key=lambda r: r[0])
        paths.append(Scanpath(key[0], tuple((x, y, t) for _, x, y, t in rows), key[1]))
        recs.append(first_line[key])
    return _validated(paths, recs)


def load_scanpaths(path, format: str = None) -> list[Scanpath]:
    fmt = format or guess_format(path)
    text = Path(path).read_text()
    if fmt == "planar-lines":
        return parse_planar_lines(text)
    if fmt == "spherical-csv":
        return parse_spherical_csv(text)
    raise ValueError(f"unknown scanpath format {fmt!r}")


def format_planar_lines(paths: Iterable[Scanpath]) -> str:
    out = []
    for sp in paths:
        doc = {"image_id": sp.image_id, "observer": sp.observer_id, "fixations": [list(f) for f in sp.fixations]}
        out.append(json.dumps(doc))
    return "\n".join(out) + ("\n" if out else "")


def format_spherical_csv(paths: Iterable[Scanpath]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPHERICAL_HEADER)
    for sp in paths:
        for k, (x, y, t) in enumerate(sp.fixations):
            lon, lat = _unit_to_deg(x, y)
            w.writerow([sp.image_id, sp.observer_id or "", k, repr(lon), repr(lat), repr(t)])
    return buf.getvalue()


def save_scanpaths(path, paths: Iterable[Scanpath], format: str = None):
    fmt = format or guess_format(path)
    text = format_planar_lines(paths) if fmt == "planar-lines" else format_spherical_csv(paths)
    Path(path).write_text(text)


def group_by_image(paths: Iterable[Scanpath]) -> dict[str, list[Scanpath]]:
    out = defaultdict(list)
    for sp in paths:
        out[sp.image_id].append(sp)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class SaliencyMap:
    width: int
    height: int
    values: np.ndarray  # (height, width), row-major
    image_id: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.height, self.width):
            raise DataError(f"saliency values have shape {v.shape}, expected {(self.height, self.width)}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DataError("saliency values must be finite and nonnegative")
        object.__setattr__(self, "values", v)


_TOKEN = re.compile(rb"\S+")


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode binary (P5) PGM bytes into an integer array and its maxval."""
    if data[:2] != b"P5":
        raise BadMagic(f"not a binary PGM (magic {data[:2]!r})")
    pos = 2
    fields = []
    while len(fields) < 3:
        # whitespace and comments between header tokens
        while pos < len(data):
            c = data[pos:pos + 1]
            if c.isspace():
                pos += 1
            elif c == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                break
        m = _TOKEN.match(data, pos)
        if m is None:
            raise BadHeader("header ended early")
        tok = m.group()
        if not tok.isdigit():
            raise BadHeader(f"non-numeric header field {tok[:16]!r}")
        fields.append(int(tok))
        pos = m.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise BadHeader("missing whitespace after maxval")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise BadHeader(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise UnsupportedMaxval(f"maxval {maxval} outside 1..65535")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise TruncatedData(f"expected {need} payload bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.int64)
    return arr, maxval


def encode_pgm(values, maxval: int = None) -> bytes:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError("PGM needs a 2-d array")
    if maxval is None:
        maxval = 255 if arr.max(initial=0) <= 255 else 65535
    if not 0 < maxval <= 65535:
        raise UnsupportedMaxval(f"maxval {maxval} outside 1..65535")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise ValueError("pixel values outside 0..maxval")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = arr.shape
    return f"P5\n{w} {h}\n{maxval}\n".encode() + arr.astype(dtype).tobytes()


def read_pgm(path) -> SaliencyMap:
    arr, _ = decode_pgm(Path(path).read_bytes())
    h, w = arr.shape
    return SaliencyMap(w, h, arr.astype(float), Path(path).stem)


def write_pgm(path, values, maxval: int = None):
    Path(path).write_bytes(encode_pgm(values, maxval))


def read_image(path) -> np.ndarray:
    """Read a PGM as an (H, W, 3) float image in [0, 1] (gray replicated)."""
    arr, maxval = decode_pgm(Path(path).read_bytes())
    gray = arr.astype(float) / maxval
    return np.repeat(gray[:, :, None], 3, axis=2)

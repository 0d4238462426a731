"""Fixations, scanpaths and the planar / spherical geometry they live in.

Coordinates are normalized to the unit square. For spherical (equirectangular)
images x spans longitude left to right and y spans latitude top to bottom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import CoordinateOutOfRange, EmptyScanpath, InvalidTimestamp, NonMonotoneTimestamps

DEFAULT_DURATION = 0.25


class Fixation(NamedTuple):
    x: float
    y: float
    t: float = 0.0


@dataclass(frozen=True)
class Scanpath:
    image_id: str
    fixations: tuple[Fixation, ...]
    observer_id: Optional[str] = None

    def __post_init__(self):
        fx = tuple(f if isinstance(f, Fixation) else Fixation(*f) for f in self.fixations)
        object.__setattr__(self, "fixations", fx)

    def __len__(self):
        return len(self.fixations)

    @cached_property
    def array(self) -> np.ndarray:
        """(n, 3) float array of x, y, t. Read-only."""
        a = np.array(self.fixations, dtype=float).reshape(-1, 3)
        a.flags.writeable = False
        return a

    @classmethod
    def from_array(cls, image_id, arr, observer_id=None):
        arr = np.asarray(arr, dtype=float)
        return cls(image_id, tuple(Fixation(float(x), float(y), float(t)) for x, y, t in arr), observer_id)

    def relabel(self, image_id):
        return Scanpath(image_id, self.fixations, self.observer_id)


@dataclass(frozen=True)
class Geometry:
    kind: str
    normalizer: float = field(init=False)

    def __post_init__(self):
        if self.kind == "planar":
            d = math.sqrt(2.0)
        elif self.kind == "spherical":
            d = math.pi
        else:
            raise ValueError(f"unknown geometry {self.kind!r}")
        object.__setattr__(self, "normalizer", d)

    @property
    def spherical(self):
        return self.kind == "spherical"


PLANAR = Geometry("planar")
SPHERICAL = Geometry("spherical")


def geometry(kind: str) -> Geometry:
    return {"planar": PLANAR, "spherical": SPHERICAL}[kind]


class SpherePoint(NamedTuple):
    lon: float
    lat: float


def to_sphere(x, y):
    """Map normalized equirectangular coordinates to (lon, lat) in radians.

    Works elementwise on arrays.
    """
    return (np.asarray(x) - 0.5) * 2.0 * np.pi, (0.5 - np.asarray(y)) * np.pi


def sphere_point(f: Fixation) -> SpherePoint:
    lon, lat = to_sphere(f.x, f.y)
    return SpherePoint(float(lon), float(lat))


def central_angle(lon1, lat1, lon2, lat2):
    """Great-circle angle in radians (Vincenty's atan2 form, stable near 0 and pi)."""
    dlon = lon2 - lon1
    s1, c1 = np.sin(lat1), np.cos(lat1)
    s2, c2 = np.sin(lat2), np.cos(lat2)
    sd, cd = np.sin(dlon), np.cos(dlon)
    num = np.hypot(c2 * sd, c1 * s2 - s1 * c2 * cd)
    den = s1 * s2 + c1 * c2 * cd
    return np.arctan2(num, den)


def initial_bearing(lon1, lat1, lon2, lat2):
    """Direction of the great circle leaving point 1 towards point 2 (radians, from north)."""
    dlon = lon2 - lon1
    return np.arctan2(
        np.sin(dlon) * np.cos(lat2),
        np.cos(lat1) * np.sin(lat2) - np.sin(lat1) * np.cos(lat2) * np.cos(dlon),
    )


def pairwise_distance(g: Geometry, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances between rows of ``a`` (n, 2) and ``b`` (m, 2) as an (n, m) matrix."""
    a = np.asarray(a, dtype=float)[:, None, :2]
    b = np.asarray(b, dtype=float)[None, :, :2]
    return point_distance(g, a, b)


def point_distance(g: Geometry, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise distance between matched point arrays of shape (..., 2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if g.spherical:
        lon1, lat1 = to_sphere(a[..., 0], a[..., 1])
        lon2, lat2 = to_sphere(b[..., 0], b[..., 1])
        return central_angle(lon1, lat1, lon2, lat2)
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def distance(g: Geometry, a: Fixation, b: Fixation) -> float:
    return float(point_distance(g, (a[0], a[1]), (b[0], b[1])))


def validate_scanpath(sp: Scanpath) -> Scanpath:
    if len(sp.fixations) == 0:
        raise EmptyScanpath(f"scanpath for image {sp.image_id!r} has no fixations")
    prev = None
    for i, (x, y, t) in enumerate(sp.fixations):
        if not (0.0 <= x <= 1.0):
            raise CoordinateOutOfRange(i, x, "x")
        if not (0.0 <= y <= 1.0):
            raise CoordinateOutOfRange(i, y, "y")
        if not (math.isfinite(t) and t >= 0.0):
            raise InvalidTimestamp(f"fixation {i}: t={t!r} must be finite and >= 0")
        if prev is not None and t < prev:
            raise NonMonotoneTimestamps(i, prev, t)
        prev = t
    return sp


@dataclass(frozen=True)
class SaccadeVector:
    start: Fixation
    end: Fixation
    displacement: tuple[float, float]
    amplitude: float
    direction: float


def saccade_arrays(xy: np.ndarray, g: Geometry):
    """Vectorized saccade description of an (n, >=2) position array.

    Returns ``(starts, ends, displacement, amplitude, direction)``, each with
    n - 1 rows.
    """
    xy = np.asarray(xy, dtype=float)[:, :2]
    starts, ends = xy[:-1], xy[1:]
    disp = ends - starts
    if g.spherical:
        lon1, lat1 = to_sphere(starts[:, 0], starts[:, 1])
        lon2, lat2 = to_sphere(ends[:, 0], ends[:, 1])
        amp = central_angle(lon1, lat1, lon2, lat2)
        direction = initial_bearing(lon1, lat1, lon2, lat2)
    else:
        amp = np.hypot(disp[:, 0], disp[:, 1])
        direction = np.arctan2(disp[:, 1], disp[:, 0])
    return starts, ends, disp, amp, direction


def saccades(sp: Scanpath, g: Geometry) -> list[SaccadeVector]:
    _, _, disp, amp, direction = saccade_arrays(sp.array, g)
    fx = sp.fixations
    return [
        SaccadeVector(fx[i], fx[i + 1], (float(disp[i, 0]), float(disp[i, 1])), float(amp[i]), float(direction[i]))
        for i in range(len(fx) - 1)
    ]


def duration_array(t: Sequence[float], default_duration: float = DEFAULT_DURATION) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.size == 1:
        return np.array([default_duration])
    d = np.diff(t)
    return np.append(d, d.mean())


def durations(sp: Scanpath, default_duration: float = DEFAULT_DURATION) -> list[float]:
    """Per-fixation durations from onset timestamps.

    The last fixation has no successor, so it gets the mean of the others.
    """
    return duration_array(sp.array[:, 2], default_duration).tolist()

"""Vector-based scanpath dissimilarity.

Saccades of the two scanpaths are aligned by the cheapest monotone path through
their dissimilarity matrix, and five normalized measures (shape, amplitude,
direction, position, duration) are averaged over the aligned pairs. All
measures lie in [0, 1]; lower means more similar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    Geometry,
    SaccadeVector,
    Scanpath,
    duration_array,
    pairwise_distance,
    point_distance,
    saccade_arrays,
    validate_scanpath,
)
from .errors import EmptySaccadeList, InvalidAlignment

MEASURES = ("shape", "amplitude", "direction", "position", "duration")
EQUAL_WEIGHTS = (0.2, 0.2, 0.2, 0.2, 0.2)


class AlignmentPath(NamedTuple):
    pairs: tuple[tuple[int, int], ...]
    cost: float


class MeasureSet(NamedTuple):
    shape: float
    amplitude: float
    direction: float
    position: float
    duration: float


@dataclass(frozen=True)
class JarodzkaScore:
    value: float
    components: MeasureSet
    alignment: AlignmentPath


def _sacc_matrix(sa, sb, g: Geometry) -> np.ndarray:
    """Cell costs from the tuples returned by :func:`saccade_arrays`."""
    if g.spherical:
        # mean great-circle offset of the start points and of the end points
        return 0.5 * (pairwise_distance(g, sa[0], sb[0]) + pairwise_distance(g, sa[1], sb[1]))
    da, db = sa[2], sb[2]
    return np.hypot(da[:, None, 0] - db[None, :, 0], da[:, None, 1] - db[None, :, 1])


def _as_arrays(sacc: Sequence[SaccadeVector], g: Geometry):
    if len(sacc) == 0:
        raise EmptySaccadeList("need at least one saccade on each side")
    starts = np.array([s.start[:2] for s in sacc], dtype=float)
    ends = np.array([s.end[:2] for s in sacc], dtype=float)
    disp = np.array([s.displacement for s in sacc], dtype=float)
    amp = np.array([s.amplitude for s in sacc], dtype=float)
    direction = np.array([s.direction for s in sacc], dtype=float)
    return starts, ends, disp, amp, direction


def dissimilarity_matrix(A: Sequence[SaccadeVector], B: Sequence[SaccadeVector], g: Geometry) -> np.ndarray:
    return _sacc_matrix(_as_arrays(A, g), _as_arrays(B, g), g)


def align(M) -> AlignmentPath:
    """Cheapest monotone path from the top-left to the bottom-right cell.

    Moves are down, right, or diagonal; the cost counts every visited cell.
    When backtracking, ties prefer the diagonal, then the vertical move.
    """
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    if n == 0 or m == 0:
        raise InvalidAlignment("empty matrix")
    cells = M.tolist()
    inf = math.inf
    C = [[inf] * m for _ in range(n)]
    row0 = C[0]
    acc = 0.0
    for j in range(m):
        acc += cells[0][j]
        row0[j] = acc
    for i in range(1, n):
        prev, cur, mi = C[i - 1], C[i], cells[i]
        cur[0] = prev[0] + mi[0]
        for j in range(1, m):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = best + mi[j]
    i, j = n - 1, m - 1
    pairs = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            d, v, h = C[i - 1][j - 1], C[i - 1][j], C[i][j - 1]
            if d <= v and d <= h:
                i, j = i - 1, j - 1
            elif v <= h:
                i -= 1
            else:
                j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return AlignmentPath(tuple(pairs), C[n - 1][m - 1])


def _check_path(pairs, n, m):
    if not pairs or pairs[0] != (0, 0) or pairs[-1] != (n - 1, m - 1):
        raise InvalidAlignment(f"path must run from (0, 0) to ({n - 1}, {m - 1})")
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
            raise InvalidAlignment(f"illegal step {(i0, j0)} -> {(i1, j1)}")


def _angle_between(a, b):
    d = np.abs(a - b)
    return np.minimum(d, 2.0 * np.pi - d)


def _measures(xa, xb, sa, sb, M, pairs, g: Geometry) -> MeasureSet:
    D = g.normalizer
    idx = np.asarray(pairs)
    i, j = idx[:, 0], idx[:, 1]
    shape = M[i, j] / (2.0 * D)
    amplitude = np.abs(sa[3][i] - sb[3][j]) / D
    direction = _angle_between(sa[4][i], sb[4][j]) / np.pi
    position = point_distance(g, sa[1][i], sb[1][j]) / D
    # each saccade is paired with the fixation it lands on
    da = duration_array(xa[:, 2])[i + 1]
    db = duration_array(xb[:, 2])[j + 1]
    top = np.maximum(da, db)
    duration = np.divide(np.abs(da - db), top, out=np.zeros_like(top), where=top > 0)
    return MeasureSet(*(float(np.clip(v.mean(), 0.0, 1.0)) for v in (shape, amplitude, direction, position, duration)))


def component_measures(A: Scanpath, B: Scanpath, path: AlignmentPath, g: Geometry) -> MeasureSet:
    xa, xb = A.array, B.array
    if len(xa) < 2 or len(xb) < 2:
        raise InvalidAlignment("component measures need at least one saccade per scanpath")
    sa, sb = saccade_arrays(xa, g), saccade_arrays(xb, g)
    pairs = path.pairs if isinstance(path, AlignmentPath) else tuple(path)
    _check_path(pairs, len(xa) - 1, len(xb) - 1)
    return _measures(xa, xb, sa, sb, _sacc_matrix(sa, sb, g), pairs, g)


def _position_only(xa, xb, g: Geometry) -> JarodzkaScore:
    M = pairwise_distance(g, xa, xb)
    path = align(M)
    idx = np.asarray(path.pairs)
    value = float(np.clip(M[idx[:, 0], idx[:, 1]].mean() / g.normalizer, 0.0, 1.0))
    return JarodzkaScore(value, MeasureSet(0.0, 0.0, 0.0, value, 0.0), path)


def jarodzka_score(A: Scanpath, B: Scanpath, g: Geometry, weights=EQUAL_WEIGHTS, validate=True) -> JarodzkaScore:
    """Dissimilarity of two scanpaths in [0, 1].

    If either scanpath has a single fixation there are no saccades to compare,
    and the score falls back to the mean aligned fixation distance over the
    geometry normalizer.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (5,) or np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be 5 nonnegative numbers with a positive sum")
    if validate:
        validate_scanpath(A)
        validate_scanpath(B)
    xa, xb = A.array, B.array
    if len(xa) == 1 or len(xb) == 1:
        return _position_only(xa, xb, g)
    sa, sb = saccade_arrays(xa, g), saccade_arrays(xb, g)
    M = _sacc_matrix(sa, sb, g)
    path = align(M)
    ms = _measures(xa, xb, sa, sb, M, path.pairs, g)
    value = float(np.dot(w, ms) / w.sum())
    return JarodzkaScore(min(max(value, 0.0), 1.0), ms, path)

"""Hungarian assignment and the 1-to-1 matched evaluation protocol."""
from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .core import PLANAR, Geometry, Scanpath, validate_scanpath
from .errors import MissingPredictions, MixedImageIds, NonFiniteCost
from .metric import EQUAL_WEIGHTS, jarodzka_score

AGGREGATION = "mean over matched pairs per image, then unweighted mean over images"


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def _solve(C: np.ndarray) -> list[tuple[int, int]]:
    """One minimum-cost assignment of min(n, m) pairs, sorted by row.

    Shortest augmenting path with row/column potentials, O(n^2 m).
    """
    n0, m0 = C.shape
    if n0 == 0 or m0 == 0:
        return []
    transposed = n0 > m0
    A = C.T if transposed else C
    n, m = A.shape
    a = A.tolist()
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row (1-based) assigned to column j
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    pairs = [(p[j] - 1, j - 1) for j in range(1, m + 1) if p[j]]
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    pairs.sort()
    return pairs


def _row_order_sum(C, pairs):
    total = 0.0
    for r, c in sorted(pairs):
        total += C[r, c]
    return total


def _completion(C, fixed, rows, cols, need):
    """Best assignment that extends ``fixed`` using only ``rows`` x ``cols``."""
    if need == 0:
        return list(fixed)
    if len(rows) < need:
        return None
    sub = C[np.ix_(rows, cols)]
    return list(fixed) + [(rows[r], cols[c]) for r, c in _solve(sub)]


def hungarian(cost) -> Assignment:
    """Exact minimum-cost assignment of min(n, m) rows to distinct columns.

    Among optimal assignments the one whose sorted pair list is
    lexicographically smallest is returned (lowest row index first, then
    lowest column index). Costs are compared as row-ordered float sums.
    """
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2:
        raise ValueError("cost must be a 2-d matrix")
    if not np.all(np.isfinite(C)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    n, m = C.shape
    need = min(n, m)
    best = _solve(C)
    best_cost = _row_order_sum(C, best)
    # walk rows in order; try every option that sorts before the incumbent's
    fixed = []
    free_cols = list(range(m))
    for r in range(n):
        if len(fixed) == need:
            break
        inc = dict(best).get(r)
        later_rows = list(range(r + 1, n))
        left = need - len(fixed)
        for c in free_cols:
            if inc is not None and c >= inc:
                break
            rest = [k for k in free_cols if k != c]
            cand = _completion(C, fixed + [(r, c)], later_rows, rest, left - 1)
            if cand is not None and _row_order_sum(C, cand) <= best_cost:
                best, best_cost, inc = cand, _row_order_sum(C, cand), c
                break
        if inc is not None:
            fixed.append((r, inc))
            free_cols.remove(inc)
    pairs = tuple(sorted(best))
    return Assignment(pairs, float(best_cost))


def cost_matrix(generated: Sequence[Scanpath], gt: Sequence[Scanpath], g: Geometry, weights=EQUAL_WEIGHTS):
    return np.array(
        [[jarodzka_score(a, b, g, weights, validate=False).value for b in gt] for a in generated], dtype=float
    ).reshape(len(generated), len(gt))


def match_scanpaths(generated: Sequence[Scanpath], gt: Sequence[Scanpath], g: Geometry, weights=EQUAL_WEIGHTS):
    """Match generated to ground-truth scanpaths 1-to-1 and return (assignment, mean matched cost)."""
    if not generated or not gt:
        raise ValueError("need at least one generated and one ground-truth scanpath")
    ids = {sp.image_id for sp in generated} | {sp.image_id for sp in gt}
    if len(ids) > 1:
        raise MixedImageIds(f"scanpaths span several images: {sorted(ids)}")
    for sp in (*generated, *gt):
        validate_scanpath(sp)
    asg = hungarian(cost_matrix(generated, gt, g, weights))
    return asg, asg.total_cost / len(asg.pairs)


@dataclass
class EvalReport:
    per_image: dict[str, float]
    overall_mean: float
    n_generated_per_image: int
    config: dict = field(default_factory=dict)

    def to_text(self) -> str:
        doc = {
            "overall_mean": self.overall_mean,
            "n_images": len(self.per_image),
            "n_generated_per_image": self.n_generated_per_image,
            "config": self.config,
            "per_image": self.per_image,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("image_id,mean_cost\n")
        for k, v in self.per_image.items():
            buf.write(f"{k},{v!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        doc = json.loads(text)
        return cls(doc["per_image"], doc["overall_mean"], doc["n_generated_per_image"], doc.get("config", {}))


PredSource = Union[Mapping[str, Sequence[Scanpath]], Callable[[str, Sequence[Scanpath], int], Sequence[Scanpath]]]


def _workers():
    env = os.environ.get("SCANPATH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def evaluate_dataset(
    pred_source: PredSource,
    gt_set: Mapping[str, Sequence[Scanpath]],
    K: int = 40,
    g: Geometry = None,
    weights=EQUAL_WEIGHTS,
    workers: int = None,
) -> EvalReport:
    """Mean matched cost per image, then the unweighted mean over images.

    ``pred_source`` is either a mapping ``image_id -> scanpaths`` (the first
    ``K`` are used) or a callable ``(image_id, gt_paths, K) -> scanpaths``.
    """
    g = g or PLANAR
    image_ids = sorted(gt_set)
    preds = {}
    for image_id in image_ids:
        if not gt_set[image_id]:
            raise ValueError(f"image {image_id!r} has no ground-truth scanpaths")
        if callable(pred_source):
            got = list(pred_source(image_id, gt_set[image_id], K))
        else:
            got = list(pred_source.get(image_id, ()))[:K]
        if not got:
            raise MissingPredictions(f"no predictions for image {image_id!r}")
        preds[image_id] = got

    def one(image_id):
        return match_scanpaths(preds[image_id], list(gt_set[image_id]), g, weights)[1]

    n_workers = min(workers or _workers(), len(image_ids))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as ex:
            costs = list(ex.map(one, image_ids))
    else:
        costs = [one(i) for i in image_ids]
    per_image = dict(zip(image_ids, costs))
    overall = 0.0
    for c in costs:
        overall += c
    overall /= len(costs)
    config = {"geometry": g.kind, "K": K, "weights": list(map(float, weights)), "aggregation": AGGREGATION}
    return EvalReport(per_image, overall, K, config)

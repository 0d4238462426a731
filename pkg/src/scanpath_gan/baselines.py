"""Reference scanpath generators used to put model scores in context.

* random: random positions and a random number of fixations
* gt-count: random positions, ground-truth number of fixations
* saliency: fixations sampled from a ground-truth saliency map
* interchange: ground-truth scanpaths of a different image
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import Fixation, Scanpath
from .errors import AllZeroSaliencyMap, EmptyScanpath, TooFewImages


@dataclass(frozen=True)
class BaselineConfig:
    len_min: int = 1
    len_max: int = 35
    dt_min: float = 0.1
    dt_max: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.len_min <= self.len_max:
            raise ValueError("need 1 <= len_min <= len_max")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")


def _timestamps(n, cfg, rng):
    steps = rng.uniform(cfg.dt_min, cfg.dt_max, size=n - 1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _path(image_id, xs, ys, ts, observer):
    fx = tuple(Fixation(float(x), float(y), float(t)) for x, y, t in zip(xs, ys, ts))
    return Scanpath(image_id, fx, observer)


def _random_path(image_id, n, cfg, rng, observer):
    xy = rng.uniform(0.0, 1.0, size=(n, 2))
    return _path(image_id, xy[:, 0], xy[:, 1], _timestamps(n, cfg, rng), observer)


def baseline_random(image_id, cfg: BaselineConfig, rng: np.random.Generator, observer="random") -> Scanpath:
    n = int(rng.integers(cfg.len_min, cfg.len_max + 1))
    return _random_path(image_id, n, cfg, rng, observer)


def baseline_random_gt_count(gt: Scanpath, cfg: BaselineConfig, rng: np.random.Generator, observer="gt-count") -> Scanpath:
    return _random_path(gt.image_id, len(gt), cfg, rng, observer)


def baseline_saliency_sampling(smap, n: int, cfg: BaselineConfig, rng: np.random.Generator, image_id=None, observer="saliency") -> Scanpath:
    """Draw ``n`` i.i.d. pixels with probability proportional to saliency."""
    values = np.asarray(smap.values, dtype=float)
    if n < 1:
        raise EmptyScanpath("saliency sampling needs n >= 1 fixations")
    total = values.sum()
    if not total > 0:
        raise AllZeroSaliencyMap("saliency map has no positive mass")
    h, w = values.shape
    flat = rng.choice(h * w, size=n, p=(values / total).ravel())
    rows, cols = np.divmod(flat, w)
    xs = (cols + 0.5) / w
    ys = (rows + 0.5) / h
    return _path(image_id if image_id is not None else getattr(smap, "image_id", ""), xs, ys, _timestamps(n, cfg, rng), observer)


def derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation with no fixed point (rejection sampling)."""
    if n < 2:
        raise TooFewImages("a derangement needs at least 2 elements")
    idx = np.arange(n)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == idx):
            return perm


def baseline_interchange(gt_set: Mapping[str, Sequence[Scanpath]], rng: np.random.Generator) -> dict[str, list[Scanpath]]:
    ids = sorted(gt_set)
    if len(ids) < 2:
        raise TooFewImages(f"interchange needs at least 2 images, got {len(ids)}")
    sigma = derangement(len(ids), rng)
    return {ids[i]: [sp.relabel(ids[i]) for sp in gt_set[ids[k]]] for i, k in enumerate(sigma)}

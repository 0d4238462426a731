"""Spatial fixation distributions and their KL divergence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Scanpath
from .errors import BinMismatch, NoFixations


@dataclass(frozen=True)
class SpatialHistogram:
    bins: np.ndarray  # (B, B); row index follows y, column index follows x

    @property
    def size(self):
        return self.bins.shape[0]


def spatial_histogram(scanpaths: Iterable[Scanpath], B: int = 16) -> SpatialHistogram:
    pts = [sp.array[:, :2] for sp in scanpaths if len(sp)]
    if not pts:
        raise NoFixations("no fixations to histogram")
    xy = np.concatenate(pts)
    # x = 1 and y = 1 belong to the last cell
    cols = np.minimum((xy[:, 0] * B).astype(int), B - 1)
    rows = np.minimum((xy[:, 1] * B).astype(int), B - 1)
    grid = np.zeros((B, B))
    np.add.at(grid, (rows, cols), 1.0)
    return SpatialHistogram(grid / grid.sum())


def divergence(P: SpatialHistogram, Q: SpatialHistogram, eps: float = 1e-6) -> float:
    """KL(P || Q) in nats after adding ``eps`` to every cell and renormalizing."""
    if P.bins.shape != Q.bins.shape:
        raise BinMismatch(f"histogram shapes differ: {P.bins.shape} vs {Q.bins.shape}")
    p = P.bins + eps
    q = Q.bins + eps
    p = p / p.sum()
    q = q / q.sum()
    return float(max(np.sum(p * np.log(p / q)), 0.0))


def format_histogram(h: SpatialHistogram) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in h.bins) + "\n"

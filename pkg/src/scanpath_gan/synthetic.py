"""Seeded synthetic stand-in for a free-viewing eye-tracking dataset.

Each image is a handful of Gaussian blobs on a dark background. Observers start
at the image center and then visit the blobs from brightest to dimmest, with
Gaussian positional noise. Blob centers are drawn around the image center, so
the fixation distribution has a center bias.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .core import Scanpath
from .fileio import SaliencyMap, format_planar_lines, load_scanpaths, group_by_image, read_image, read_pgm, write_pgm


@dataclass(frozen=True)
class SyntheticSpec:
    n_images: int = 200
    width: int = 64
    height: int = 64
    blobs_min: int = 2
    blobs_max: int = 4
    observers: int = 3
    center_bias: float = 0.18  # std of blob centers around the image center
    noise: float = 0.03  # std of fixation scatter around a blob center
    blob_radius: float = 0.07
    dt_min: float = 0.2
    dt_max: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if min(self.n_images, self.width, self.height, self.blobs_min, self.observers) < 1:
            raise ValueError("counts and dimensions must be >= 1")
        if self.blobs_max < self.blobs_min:
            raise ValueError("blobs_max < blobs_min")
        if not self.center_bias > 0 or self.noise < 0 or not self.blob_radius > 0:
            raise ValueError("center_bias and blob_radius must be > 0, noise >= 0")
        if not 0 <= self.dt_min <= self.dt_max:
            raise ValueError("need 0 <= dt_min <= dt_max")


@dataclass
class Dataset:
    images: dict  # image_id -> (H, W, 3) float array in [0, 1]
    scanpaths: dict  # image_id -> list[Scanpath]
    saliency: dict  # image_id -> SaliencyMap

    @property
    def image_ids(self):
        return sorted(self.scanpaths)


def _blob_field(centers, intensities, radius, h, w):
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    out = np.zeros((h, w))
    for (cx, cy), a in zip(centers, intensities):
        out += a * np.exp(-((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) / (2 * radius**2))
    return out


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator = None) -> Dataset:
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    images, paths, sal = {}, {}, {}
    for k in range(spec.n_images):
        image_id = f"img{k:04d}"
        nb = int(rng.integers(spec.blobs_min, spec.blobs_max + 1))
        centers = np.clip(0.5 + spec.center_bias * rng.standard_normal((nb, 2)), 0.08, 0.92)
        intensity = rng.uniform(0.3, 1.0, size=nb)
        order = np.argsort(-intensity, kind="stable")
        centers, intensity = centers[order], intensity[order]

        field_ = _blob_field(centers, intensity, spec.blob_radius, spec.height, spec.width)
        gray = np.round(np.clip(0.05 + field_, 0.0, 1.0) * 255) / 255
        images[image_id] = np.repeat(gray[:, :, None], 3, axis=2)
        smap = np.round(field_ / field_.max() * 65535) / 65535
        sal[image_id] = SaliencyMap(spec.width, spec.height, smap, image_id)

        obs = []
        for o in range(spec.observers):
            pts = centers + spec.noise * rng.standard_normal(centers.shape)
            xy = np.clip(np.vstack([[0.5, 0.5], pts]), 0.0, 1.0)
            t = np.concatenate([[0.0], np.cumsum(rng.uniform(spec.dt_min, spec.dt_max, size=nb))])
            obs.append(Scanpath.from_array(image_id, np.column_stack([xy, t]), f"obs{o}"))
        paths[image_id] = obs
    return Dataset(images, paths, sal)


def spec_to_text(spec: SyntheticSpec) -> str:
    return "".join(f"{k} = {v}\n" for k, v in asdict(spec).items())


def save_dataset(ds: Dataset, out_dir, spec: SyntheticSpec = None):
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "saliency").mkdir(exist_ok=True)
    for image_id in ds.image_ids:
        write_pgm(out / "images" / f"{image_id}.pgm", np.round(ds.images[image_id][:, :, 0] * 255).astype(np.int64), 255)
        if image_id in ds.saliency:
            write_pgm(out / "saliency" / f"{image_id}.pgm", np.round(ds.saliency[image_id].values * 65535).astype(np.int64), 65535)
    all_paths = [sp for image_id in ds.image_ids for sp in ds.scanpaths[image_id]]
    (out / "scanpaths.jsonl").write_text(format_planar_lines(all_paths))
    if spec is not None:
        (out / "spec.txt").write_text(spec_to_text(spec))


def load_saliency_dir(path) -> dict:
    out = {}
    for p in sorted(Path(path).glob("*.pgm")):
        m = read_pgm(p)
        peak = m.values.max()
        out[p.stem] = SaliencyMap(m.width, m.height, m.values / peak if peak > 0 else m.values, p.stem)
    return out


def load_image_dir(path) -> dict:
    return {p.stem: read_image(p) for p in sorted(Path(path).glob("*.pgm"))}


def load_dataset(path) -> Dataset:
    root = Path(path)
    paths = group_by_image(load_scanpaths(root / "scanpaths.jsonl", "planar-lines"))
    images = load_image_dir(root / "images")
    sal = load_saliency_dir(root / "saliency") if (root / "saliency").is_dir() else {}
    return Dataset(images, paths, sal)


def spec_from_mapping(values: dict) -> SyntheticSpec:
    types = {f.name: f.type for f in fields(SyntheticSpec)}
    kw = {}
    for k, v in values.items():
        if k not in types:
            raise KeyError(k)
        kw[k] = int(v) if types[k] in ("int", int) else float(v)
    return SyntheticSpec(**kw)

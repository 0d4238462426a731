"""Preprocessing, content-loss bootstrap, alternating adversarial updates, validation.

Every random draw is taken from a generator seeded by ``(seed, phase, index)``,
so a run resumed from a checkpoint replays exactly the same minibatches and
dropout masks as an uninterrupted one.
"""
from __future__ import annotations

import csv
import logging
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import torch
from torch.nn import functional as F

from .assignment import evaluate_dataset
from .checkpoint import load_arrays, save_arrays
from .core import PLANAR, Fixation, Scanpath, validate_scanpath
from .errors import FixationOutsideImage, UndecodableImage
from .model import (
    DTYPE,
    ModelConfig,
    ScanpathGAN,
    adversarial_losses,
    combined_generator_loss,
    masked_content_loss,
    pad_sequences,
    shift_right,
    step_targets,
    steps_to_scanpath,
)
from .optim import RMSprop

log = logging.getLogger(__name__)

LOG_COLUMNS = ("iteration", "phase", "content_loss", "d_loss", "g_loss", "d_acc_real", "d_acc_fake", "val_jarodzka")

# phase codes for seeding
_BOOT, _ADV, _INIT, _VAL, _SPLIT = range(5)


@dataclass
class TrainConfig:
    data: str = ""
    out: str = ""
    resume: str = ""
    seed: int = 0
    iterations: int = 300
    bootstrap_epochs: int = 5
    g_updates_per_iter: int = 8
    d_updates_per_iter: int = 16
    minibatch: int = 4
    split: float = 0.8
    image_height: int = 64
    image_width: int = 64
    lr: float = 1e-4
    rho: float = 0.9
    eps: float = 1e-8
    decay: float = 0.0
    alpha: float = 0.05
    saturating_gan_loss: bool = False
    val_every: int = 50
    val_k: int = 5
    val_images: int = 0  # 0 means the whole validation split
    checkpoint_every: int = 1  # in validation passes; 0 disables periodic checkpoints
    conv_channels: tuple = (16, 32, 64, 64)
    hidden: int = 128
    layers: int = 2
    disc_hidden: int = 128
    disc_layers: int = 2
    dropout: float = 0.1
    max_len: int = 64
    eos_threshold: float = 0.5
    bn_momentum: float = 0.9
    freeze_encoder: bool = False

    def __post_init__(self):
        counts = (self.bootstrap_epochs + 1, self.g_updates_per_iter, self.d_updates_per_iter, self.minibatch, self.val_k)
        if min(counts) < 1 or self.iterations < 0:
            raise ValueError("update counts, minibatch and val_k must be >= 1")
        if not 0 < self.split < 1:
            raise ValueError("split must be in (0, 1)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            conv_channels=tuple(self.conv_channels),
            hidden=self.hidden,
            layers=self.layers,
            disc_hidden=self.disc_hidden,
            disc_layers=self.disc_layers,
            dropout=self.dropout,
            max_len=self.max_len,
            eos_threshold=self.eos_threshold,
            bn_momentum=self.bn_momentum,
            freeze_encoder=self.freeze_encoder,
        )


def _parse_value(kind, raw):
    raw = raw.strip()
    if kind in ("bool", bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind in ("int", int):
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    if kind in ("tuple", tuple):
        return tuple(int(v) for v in raw.replace(",", " ").split())
    return raw


def parse_config_text(text: str, cls=TrainConfig):
    """Build a dataclass config from flat ``key = value`` lines (``#`` starts a comment)."""
    kinds = {f.name: f.type for f in fields(cls)}
    kw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in kinds:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        kw[key] = _parse_value(kinds[key], value)
    return cls(**kw)


def format_config(cfg) -> str:
    out = []
    for k, v in asdict(cfg).items():
        if isinstance(v, (tuple, list)):
            v = ", ".join(map(str, v))
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# preprocessing


def pixel_to_unit(sp: Scanpath, width: float, height: float) -> Scanpath:
    """Divide pixel coordinates by the original image size."""
    fx = []
    for i, (x, y, t) in enumerate(sp.fixations):
        if not (0 <= x <= width and 0 <= y <= height):
            raise FixationOutsideImage(f"fixation {i} at ({x}, {y}) outside a {width}x{height} image")
        fx.append(Fixation(x / width, y / height, t))
    return Scanpath(sp.image_id, tuple(fx), sp.observer_id)


def resize_image(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) array."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 3 or not np.all(np.isfinite(img)):
        raise UndecodableImage(f"expected a finite (H, W, C) image, got shape {img.shape}")
    if img.shape[:2] == (height, width):
        return img.copy()
    t = torch.as_tensor(img.transpose(2, 0, 1)[None], dtype=DTYPE)
    out = F.interpolate(t, size=(height, width), mode="bilinear", align_corners=False)
    return out[0].numpy().transpose(1, 2, 0).copy()


def split_ids(ids: Sequence[str], frac: float, seed: int):
    ids = sorted(ids)
    if len(ids) < 2:
        raise ValueError("need at least 2 images to split")
    perm = np.random.default_rng([seed, _SPLIT]).permutation(len(ids))
    n_train = min(max(int(round(frac * len(ids))), 1), len(ids) - 1)
    train = sorted(ids[i] for i in perm[:n_train])
    val = sorted(ids[i] for i in perm[n_train:])
    return train, val


@dataclass
class PreparedData:
    images: dict  # image_id -> (3, H, W) tensor, mean-subtracted
    scanpaths: dict  # image_id -> list[Scanpath] (normalized)
    train_ids: list
    val_ids: list
    mean_pixel: np.ndarray
    train_items: list = field(default_factory=list)  # (image_id, (n, 4) targets)
    val_items: list = field(default_factory=list)

    def __post_init__(self):
        if not self.train_items:
            self.train_items = [(i, step_targets(sp)) for i in self.train_ids for sp in self.scanpaths[i]]
        if not self.val_items:
            self.val_items = [(i, step_targets(sp)) for i in self.val_ids for sp in self.scanpaths[i]]


def preprocess(images: Mapping[str, np.ndarray], scanpaths: Mapping[str, Sequence[Scanpath]], cfg: TrainConfig,
               train_ids=None, val_ids=None) -> PreparedData:
    """Resize images, subtract the training-split mean pixel, split by image."""
    ids = sorted(set(images) & set(scanpaths))
    if train_ids is None:
        train_ids, val_ids = split_ids(ids, cfg.split, cfg.seed)
    resized = {i: resize_image(images[i], cfg.image_height, cfg.image_width) for i in ids}
    mean_pixel = mean_pixel_of([resized[i] for i in train_ids])
    tensors = {i: torch.as_tensor((resized[i] - mean_pixel).transpose(2, 0, 1).copy(), dtype=DTYPE) for i in ids}
    paths = {i: [validate_scanpath(sp) for sp in scanpaths[i]] for i in ids}
    return PreparedData(tensors, paths, list(train_ids), list(val_ids), mean_pixel)


def mean_pixel_of(images: Sequence[np.ndarray]) -> np.ndarray:
    total = np.zeros(images[0].shape[-1])
    count = 0
    for img in images:
        total += img.reshape(-1, img.shape[-1]).sum(axis=0)
        count += img.shape[0] * img.shape[1]
    return total / count


# ---------------------------------------------------------------------------
# training loop


def _rng(seed, phase, index=0):
    return np.random.default_rng([seed, phase, index])


def _torch_gen(rng):
    return torch.Generator().manual_seed(int(rng.integers(2**62)))


@contextmanager
def _frozen(params):
    saved = [p.requires_grad for p in params]
    for p in params:
        p.requires_grad_(False)
    try:
        yield
    finally:
        for p, r in zip(params, saved):
            p.requires_grad_(r)


def _row(iteration, phase, **values):
    row = dict.fromkeys(LOG_COLUMNS)
    row.update(iteration=iteration, phase=phase, **values)
    return row


class Trainer:
    def __init__(self, cfg: TrainConfig, data: PreparedData, model: ScanpathGAN = None):
        self.cfg = cfg
        self.data = data
        self.model = model or ScanpathGAN(cfg.model_config(), seed=int(_rng(cfg.seed, _INIT).integers(2**62)))
        opt = dict(lr=cfg.lr, rho=cfg.rho, eps=cfg.eps, decay=cfg.decay)
        self.opt_g = RMSprop(self.model.generator_params(), **opt)
        self.opt_d = RMSprop(self.model.discriminator_params(), **opt)
        self.iteration = 0
        self.bootstrap_epochs_done = 0
        self.log: list[dict] = []

    # -- batches ----------------------------------------------------------
    def _batch(self, items):
        imgs = torch.stack([self.data.images[i] for i, _ in items])
        target, mask, lengths = pad_sequences([t for _, t in items])
        return imgs, target, mask, lengths

    def _sample(self, rng):
        items = self.data.train_items
        idx = rng.choice(len(items), size=min(self.cfg.minibatch, len(items)), replace=False)
        return self._batch([items[k] for k in idx])

    # -- updates ----------------------------------------------------------
    def content_step(self, batch, gen):
        imgs, target, mask, _ = batch
        g = self.model.gen
        pred = g.teacher_forced(g.encoder(imgs), shift_right(target), mask, gen, batch_stats=True, update_stats=True)
        loss = masked_content_loss(pred, target, mask)
        self.opt_g.zero_grad()
        loss.backward()
        self.opt_g.step()
        return float(loss.detach())

    def discriminator_step(self, batch, gen):
        imgs, target, mask, lengths = batch
        g, d = self.model.gen, self.model.disc
        B = imgs.shape[0]
        with torch.no_grad():
            fake = g.teacher_forced(g.encoder(imgs), shift_right(target), mask, gen, batch_stats=True)
        feat = d.encoder(imgs)
        # real and fake halves share one normalization batch
        p = d(torch.cat([feat, feat]), torch.cat([target, fake]), lengths * 2, torch.cat([mask, mask]), gen,
              batch_stats=True, update_stats=True)
        d_real, d_fake = p[:B], p[B:]
        d_loss, _ = adversarial_losses(d_real, d_fake, self.cfg.saturating_gan_loss)
        self.opt_d.zero_grad()
        d_loss.backward()
        self.opt_d.step()
        return dict(
            d_loss=float(d_loss.detach()),
            d_acc_real=float((d_real > 0.5).to(DTYPE).mean()),
            d_acc_fake=float((d_fake < 0.5).to(DTYPE).mean()),
        )

    def generator_loss(self, batch, gen, update_stats=True):
        """Combined adversarial + content loss for a batch (graph attached)."""
        imgs, target, mask, lengths = batch
        g, d = self.model.gen, self.model.disc
        B = imgs.shape[0]
        pred = g.teacher_forced(g.encoder(imgs), shift_right(target), mask, gen, batch_stats=True, update_stats=update_stats)
        content = masked_content_loss(pred, target, mask)
        feat = d.encoder(imgs)
        p = d(torch.cat([feat, feat]), torch.cat([target, pred]), lengths * 2, torch.cat([mask, mask]), gen, batch_stats=True)
        _, g_adv = adversarial_losses(p[:B], p[B:], self.cfg.saturating_gan_loss)
        return combined_generator_loss(g_adv, content, self.cfg.alpha), g_adv, content

    def generator_step(self, batch, gen):
        with _frozen(list(self.model.disc.parameters())):
            loss, g_adv, content = self.generator_loss(batch, gen)
            self.opt_g.zero_grad()
            loss.backward()
            self.opt_g.step()
        return dict(g_loss=float(g_adv.detach()), content_loss=float(content.detach()))

    # -- phases -----------------------------------------------------------
    def bootstrap(self):
        """Content-loss-only generator epochs over all training scanpaths."""
        rows = []
        items = self.data.train_items
        m = self.cfg.minibatch
        while self.bootstrap_epochs_done < self.cfg.bootstrap_epochs:
            rng = _rng(self.cfg.seed, _BOOT, self.bootstrap_epochs_done)
            order = rng.permutation(len(items))
            total, n = 0.0, 0
            for start in range(0, len(items), m):
                batch = self._batch([items[k] for k in order[start:start + m]])
                total += self.content_step(batch, _torch_gen(rng))
                n += 1
            self.bootstrap_epochs_done += 1
            rows.append(_row(self.iteration, "bootstrap", content_loss=total / n))
            log.info("bootstrap epoch %d: content loss %.5f", self.bootstrap_epochs_done, total / n)
        self.log.extend(rows)
        return rows

    def adversarial_iteration(self):
        self.iteration += 1
        rng = _rng(self.cfg.seed, _ADV, self.iteration)
        rows = []
        for _ in range(self.cfg.d_updates_per_iter):
            batch = self._sample(rng)
            rows.append(_row(self.iteration, "d", **self.discriminator_step(batch, _torch_gen(rng))))
        for _ in range(self.cfg.g_updates_per_iter):
            batch = self._sample(rng)
            rows.append(_row(self.iteration, "g", **self.generator_step(batch, _torch_gen(rng))))
        self.log.extend(rows)
        return rows

    # -- evaluation -------------------------------------------------------
    @torch.no_grad()
    def content_loss_on(self, items, batch_size=64):
        """Pooled per-step content loss with frozen statistics and no dropout."""
        g = self.model.gen
        total, count = 0.0, 0
        for start in range(0, len(items), batch_size):
            imgs, target, mask, _ = self._batch(items[start:start + batch_size])
            pred = g.teacher_forced(g.encoder(imgs), shift_right(target), mask, None, batch_stats=False)
            sq = ((pred - target) ** 2).sum(dim=-1)[mask]
            total += float(sq.sum())
            count += int(mask.sum())
        return total / count

    def validation_content_loss(self):
        return self.content_loss_on(self.data.val_items)

    def val_image_ids(self):
        ids = self.data.val_ids
        return ids[: self.cfg.val_images] if self.cfg.val_images else ids

    @torch.no_grad()
    def sample_scanpaths(self, image_ids, K, gen):
        g = self.model.gen
        out = {}
        for i in image_ids:
            feat = g.encoder(self.data.images[i][None]).expand(K, -1)
            out[i] = [steps_to_scanpath(i, s, f"gen{k}") for k, s in enumerate(g.rollout(feat, gen))]
        return out

    def validation_jarodzka(self, K=None, image_ids=None, geometry=PLANAR):
        K = K or self.cfg.val_k
        ids = image_ids or self.val_image_ids()
        gen = _torch_gen(_rng(self.cfg.seed, _VAL, self.iteration))
        preds = self.sample_scanpaths(ids, K, gen)
        return evaluate_dataset(preds, {i: self.data.scanpaths[i] for i in ids}, K, geometry, workers=1)

    def validate(self):
        row = _row(self.iteration, "val", content_loss=self.validation_content_loss(),
                   val_jarodzka=self.validation_jarodzka().overall_mean)
        self.log.append(row)
        log.info("iteration %d: val content %.5f, jarodzka %.5f", self.iteration, row["content_loss"], row["val_jarodzka"])
        return row

    # -- persistence ------------------------------------------------------
    def state_arrays(self) -> dict:
        arrays = model_arrays(self.model, self.data.mean_pixel, (self.cfg.image_height, self.cfg.image_width))
        arrays.update(self.opt_g.state_arrays("opt_g"))
        arrays.update(self.opt_d.state_arrays("opt_d"))
        arrays["meta.iteration"] = float(self.iteration)
        arrays["meta.bootstrap_epochs_done"] = float(self.bootstrap_epochs_done)
        arrays["meta.seed"] = float(self.cfg.seed)
        return arrays

    def save(self, path):
        save_arrays(path, self.state_arrays())

    def load_state(self, arrays):
        load_model_state(self.model, arrays)
        self.opt_g.load_state_arrays(arrays, "opt_g")
        self.opt_d.load_state_arrays(arrays, "opt_d")
        self.iteration = int(arrays["meta.iteration"])
        self.bootstrap_epochs_done = int(arrays["meta.bootstrap_epochs_done"])

    def run(self, out_dir=None):
        """Bootstrap, then adversarial iterations with periodic validation."""
        out = Path(out_dir) if out_dir else None
        self.bootstrap()
        n_val = 0
        while self.iteration < self.cfg.iterations:
            self.adversarial_iteration()
            if self.cfg.val_every and self.iteration % self.cfg.val_every == 0:
                self.validate()
                n_val += 1
                if out and self.cfg.checkpoint_every and n_val % self.cfg.checkpoint_every == 0:
                    self.save(out / f"ckpt_{self.iteration:06d}.txt")
        if out:
            self.save(out / "final.ckpt")
            write_log(out / "train_log.csv", self.log)
        return self.log


# ---------------------------------------------------------------------------
# model (de)serialization

_META_FIELDS = ("hidden", "layers", "disc_hidden", "disc_layers", "dropout", "max_len", "eos_threshold",
                "bn_momentum", "bn_eps", "freeze_encoder")


def model_arrays(model: ScanpathGAN, mean_pixel, dims) -> dict:
    arrays = {k: v.detach().numpy().copy() for k, v in model.state_dict().items()}
    cfg = model.cfg
    arrays["meta.conv_channels"] = np.asarray(cfg.conv_channels, dtype=float)
    for name in _META_FIELDS:
        arrays[f"meta.{name}"] = float(getattr(cfg, name))
    arrays["meta.mean_pixel"] = np.asarray(mean_pixel, dtype=float)
    arrays["meta.image_dims"] = np.asarray(dims, dtype=float)
    return arrays


def load_model_state(model: ScanpathGAN, arrays):
    state = {k: torch.as_tensor(arrays[k], dtype=DTYPE).reshape(v.shape) for k, v in model.state_dict().items()}
    model.load_state_dict(state)


def model_from_arrays(arrays):
    """Rebuild (model, mean_pixel, (height, width)) from checkpoint arrays."""
    kw = {name: arrays[f"meta.{name}"].item() for name in _META_FIELDS}
    for name in ("hidden", "layers", "disc_hidden", "disc_layers", "max_len"):
        kw[name] = int(kw[name])
    kw["freeze_encoder"] = bool(kw["freeze_encoder"])
    cfg = ModelConfig(conv_channels=tuple(int(c) for c in arrays["meta.conv_channels"]), **kw)
    model = ScanpathGAN(cfg)
    load_model_state(model, arrays)
    dims = tuple(int(d) for d in arrays["meta.image_dims"])
    return model, np.asarray(arrays["meta.mean_pixel"]), dims


def load_model(path):
    return model_from_arrays(load_arrays(path))


def write_log(path, rows, append=False):
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(LOG_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in LOG_COLUMNS])


def train(cfg: TrainConfig, dataset=None):
    """Run training from a config; returns the trainer (log and model attached)."""
    from .synthetic import load_dataset

    ds = dataset if dataset is not None else load_dataset(cfg.data)
    data = preprocess(ds.images, ds.scanpaths, cfg)
    trainer = Trainer(cfg, data)
    if cfg.resume:
        trainer.load_state(load_arrays(cfg.resume))
    out = Path(cfg.out) if cfg.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    trainer.run(out)
    return trainer


@torch.no_grad()
def generate_scanpaths(model: ScanpathGAN, mean_pixel, dims, images: Mapping[str, np.ndarray], K: int, seed: int = 0,
                       max_len: int = None) -> dict:
    """Sample ``K`` scanpaths per image with a trained generator.

    Images are resized to the training dims and centered with the stored mean
    pixel. Each image gets its own dropout stream seeded by ``(seed, index)``
    in sorted id order.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    g = model.gen
    h, w = dims
    out = {}
    for k, image_id in enumerate(sorted(images)):
        img = resize_image(images[image_id], h, w) - np.asarray(mean_pixel)
        x = torch.as_tensor(img.transpose(2, 0, 1).copy()[None], dtype=DTYPE)
        feat = g.encoder(x).expand(K, -1)
        gen = torch.Generator().manual_seed(int(np.random.default_rng([seed, k]).integers(2**62)))
        out[image_id] = [steps_to_scanpath(image_id, s, f"gen{j}") for j, s in enumerate(g.rollout(feat, gen, max_len))]
    return out

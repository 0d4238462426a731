"""Desk-scale experiments on the synthetic dataset, shared by scripts and acceptance tests."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .assignment import evaluate_dataset
from .baselines import BaselineConfig, baseline_interchange, baseline_random, baseline_random_gt_count, baseline_saliency_sampling
from .stats import divergence, spatial_histogram
from .synthetic import SyntheticSpec, generate_synthetic
from .training import TrainConfig, Trainer, preprocess

BASELINE_KINDS = ("random", "gt-count", "saliency", "interchange")


@dataclass
class RunResult:
    seed: int
    alpha: float
    iterations: int
    val_content_init: float
    val_content_bootstrap: float
    val_content_final: float
    model_cost: float
    random_cost: float
    kl_generated: float
    kl_random: float
    mean_generated_length: float
    seconds: float
    bootstrap_seconds: float = 0.0
    log: list = field(default_factory=list, repr=False)

    @property
    def bootstrap_reduction(self):
        return 1.0 - self.val_content_bootstrap / self.val_content_init

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("log")
        d["bootstrap_reduction"] = self.bootstrap_reduction
        return d


def training_run(seed: int, alpha: float = 0.05, iterations: int = 300, K: int = 20, bins: int = 16,
                 spec: SyntheticSpec = None, **overrides) -> RunResult:
    """Bootstrap + adversarial training on synthetic data, then score the validation split.

    The model and the uniform random baseline (a) are both scored with the
    matched Jarodzka protocol using ``K`` scanpaths per validation image.
    """
    t0 = time.perf_counter()
    spec = spec or SyntheticSpec(seed=seed)
    ds = generate_synthetic(spec)
    cfg = TrainConfig(seed=seed, alpha=alpha, iterations=iterations, val_every=0,
                      image_height=spec.height, image_width=spec.width, **overrides)
    data = preprocess(ds.images, ds.scanpaths, cfg)
    tr = Trainer(cfg, data)
    init = tr.validation_content_loss()
    tr.bootstrap()
    boot = tr.validation_content_loss()
    t_boot = time.perf_counter() - t0
    while tr.iteration < cfg.iterations:
        tr.adversarial_iteration()
    final = tr.validation_content_loss()

    val = {i: data.scanpaths[i] for i in data.val_ids}
    gen = torch.Generator().manual_seed(int(np.random.default_rng([seed, 7]).integers(2**62)))
    preds = tr.sample_scanpaths(data.val_ids, K, gen)
    model_cost = evaluate_dataset(preds, val, K, workers=1).overall_mean
    rng = np.random.default_rng([seed, 8])
    bc = BaselineConfig()
    rand = {i: [baseline_random(i, bc, rng) for _ in range(K)] for i in data.val_ids}
    random_cost = evaluate_dataset(rand, val, K, workers=1).overall_mean

    gt_h = spatial_histogram([sp for v in val.values() for sp in v], bins)
    kl_gen = divergence(spatial_histogram([sp for v in preds.values() for sp in v], bins), gt_h)
    kl_rand = divergence(spatial_histogram([sp for v in rand.values() for sp in v], bins), gt_h)
    lengths = [len(sp) for v in preds.values() for sp in v]
    return RunResult(seed, alpha, iterations, init, boot, final, model_cost, random_cost, kl_gen, kl_rand,
                     float(np.mean(lengths)), time.perf_counter() - t0, t_boot, tr.log)


def baseline_costs(seed: int, K: int = None, spec: SyntheticSpec = None, kinds=BASELINE_KINDS, workers=None) -> dict:
    """Mean matched cost of each baseline against the synthetic ground truth.

    ``K`` defaults to the number of observers, so every baseline is matched
    against the same number of candidates as the interchange baseline supplies.
    """
    spec = spec or SyntheticSpec(seed=seed)
    ds = generate_synthetic(spec)
    gt = ds.scanpaths
    K = K or spec.observers
    bc = BaselineConfig(seed=seed)
    out = {}
    for k, kind in enumerate(BASELINE_KINDS):
        if kind not in kinds:
            continue
        rng = np.random.default_rng([seed, 100 + k])
        if kind == "random":
            preds = {i: [baseline_random(i, bc, rng) for _ in range(K)] for i in sorted(gt)}
        elif kind == "gt-count":
            preds = {i: [baseline_random_gt_count(gt[i][j % len(gt[i])], bc, rng) for j in range(K)] for i in sorted(gt)}
        elif kind == "saliency":
            preds = {i: [baseline_saliency_sampling(ds.saliency[i], len(gt[i][j % len(gt[i])]), bc, rng, i)
                         for j in range(K)] for i in sorted(gt)}
        else:
            preds = baseline_interchange(gt, rng)
        out[kind] = evaluate_dataset(preds, gt, K, workers=workers).overall_mean
    return out

"""Conditional adversarial scanpath model (float64, CPU).

Generator: conv image encoder -> global average pooling -> stacked LSTMs with
batch normalization after every layer -> per-step head emitting
``(x, y, dt, eos)``. Each step sees the image feature concatenated with the
previous output. Dropout on the recurrent layers stays on when sampling, and
is the only source of randomness in generated scanpaths.

Discriminator: its own image encoder plus a recurrent branch reading
``(x, y, dt, eos)`` steps; the last valid hidden state goes through a
sigmoid unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .core import Scanpath
from .errors import EmptySequence, ImageTooSmall, LengthMismatch

DTYPE = torch.float64
CLIP = 1e-7


@dataclass(frozen=True)
class ModelConfig:
    conv_channels: tuple = (16, 32, 64, 64)
    hidden: int = 128
    layers: int = 2
    disc_hidden: int = 128
    disc_layers: int = 2
    dropout: float = 0.1
    max_len: int = 64
    eos_threshold: float = 0.5
    bn_momentum: float = 0.9
    bn_eps: float = 1e-3
    freeze_encoder: bool = False

    def __post_init__(self):
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if not 0 < self.eos_threshold < 1:
            raise ValueError("eos_threshold must be in (0, 1)")
        if min(self.hidden, self.layers, self.disc_hidden, self.disc_layers, self.max_len) < 1:
            raise ValueError("sizes must be >= 1")

    @property
    def feature_dim(self):
        return self.conv_channels[-1]


class StepOutput(NamedTuple):
    x: float
    y: float
    dt: float
    eos: float


def _glorot(shape, gen):
    fan_in, fan_out = shape[0], shape[1]
    if len(shape) == 4:  # conv: (out, in, kh, kw)
        rf = shape[2] * shape[3]
        fan_in, fan_out = shape[1] * rf, shape[0] * rf
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return torch.empty(shape, dtype=DTYPE).uniform_(-a, a, generator=gen)


def _orthogonal(n, m, gen):
    q, r = torch.linalg.qr(torch.randn(max(n, m), min(n, m), dtype=DTYPE, generator=gen))
    q = q * torch.sign(torch.diagonal(r))
    return q if n >= m else q.T


def dropout_mask(shape, p, gen):
    if gen is None or p <= 0:
        return None
    keep = torch.rand(shape, dtype=DTYPE, generator=gen) >= p
    return keep.to(DTYPE) / (1.0 - p)


class ImageEncoder(nn.Module):
    """Stride-2 3x3 convolutions with tanh, then global average pooling."""

    def __init__(self, channels=(16, 32, 64, 64), in_channels=3, gen=None):
        super().__init__()
        self.weights = nn.ParameterList()
        self.biases = nn.ParameterList()
        c_in = in_channels
        for c in channels:
            self.weights.append(nn.Parameter(_glorot((c, c_in, 3, 3), gen)))
            self.biases.append(nn.Parameter(torch.zeros(c, dtype=DTYPE)))
            c_in = c

    @property
    def min_size(self):
        return 2 ** len(self.weights)

    def forward(self, img):
        if img.shape[-1] < self.min_size or img.shape[-2] < self.min_size:
            raise ImageTooSmall(f"images must be at least {self.min_size}x{self.min_size}, got {tuple(img.shape[-2:])}")
        x = img
        for w, b in zip(self.weights, self.biases):
            x = torch.tanh(F.conv2d(x, w, b, stride=2, padding=1))
        return x.mean(dim=(2, 3))


class LSTMLayer(nn.Module):
    def __init__(self, n_in, n_hidden, gen=None):
        super().__init__()
        self.n_hidden = n_hidden
        self.W = nn.Parameter(_glorot((n_in, 4 * n_hidden), gen))
        self.U = nn.Parameter(torch.cat([_orthogonal(n_hidden, n_hidden, gen) for _ in range(4)], dim=1))
        b = torch.zeros(4 * n_hidden, dtype=DTYPE)
        b[n_hidden:2 * n_hidden] = 1.0  # forget gate
        self.b = nn.Parameter(b)

    def _gates(self, z, c):
        i, f, g, o = z.chunk(4, dim=-1)
        c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
        return torch.sigmoid(o) * torch.tanh(c), c

    def step(self, x, h, c):
        return self._gates(x @ self.W + h @ self.U + self.b, c)

    def forward(self, x):
        B, T, _ = x.shape
        xw = x @ self.W + self.b
        h = x.new_zeros(B, self.n_hidden)
        c = x.new_zeros(B, self.n_hidden)
        out = []
        for t in range(T):
            h, c = self._gates(xw[:, t] + h @ self.U, c)
            out.append(h)
        return torch.stack(out, dim=1)


class MaskedBatchNorm(nn.Module):
    """Batch normalization over all valid (batch, time) positions of a sequence."""

    def __init__(self, n, momentum=0.9, eps=1e-3):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = nn.Parameter(torch.ones(n, dtype=DTYPE))
        self.beta = nn.Parameter(torch.zeros(n, dtype=DTYPE))
        self.register_buffer("running_mean", torch.zeros(n, dtype=DTYPE))
        self.register_buffer("running_var", torch.ones(n, dtype=DTYPE))

    def forward(self, x, mask=None, batch_stats=False, update_stats=False):
        if batch_stats:
            flat = x.reshape(-1, x.shape[-1]) if mask is None else x[mask]
            mean = flat.mean(dim=0)
            var = flat.var(dim=0, unbiased=False)
            if update_stats:
                with torch.no_grad():
                    m = self.momentum
                    self.running_mean.mul_(m).add_((1 - m) * mean)
                    self.running_var.mul_(m).add_((1 - m) * var)
        else:
            mean, var = self.running_mean, self.running_var
        return self.gamma * (x - mean) / torch.sqrt(var + self.eps) + self.beta


class RecurrentStack(nn.Module):
    def __init__(self, n_in, hidden, layers, dropout, momentum=0.9, eps=1e-3, gen=None):
        super().__init__()
        self.dropout = dropout
        self.cells = nn.ModuleList(LSTMLayer(n_in if k == 0 else hidden, hidden, gen) for k in range(layers))
        self.norms = nn.ModuleList(MaskedBatchNorm(hidden, momentum, eps) for _ in range(layers))

    def forward(self, x, mask=None, gen=None, batch_stats=False, update_stats=False):
        for cell, norm in zip(self.cells, self.norms):
            keep = dropout_mask(x.shape, self.dropout, gen)
            if keep is not None:
                x = x * keep
            x = norm(cell(x), mask, batch_stats, update_stats)
        return x

    def initial_state(self, B):
        return [(torch.zeros(B, c.n_hidden, dtype=DTYPE), torch.zeros(B, c.n_hidden, dtype=DTYPE)) for c in self.cells]

    def step(self, x, state, gen=None):
        """One time step with frozen normalization statistics."""
        new_state = []
        for cell, norm, (h, c) in zip(self.cells, self.norms, state):
            keep = dropout_mask(x.shape, self.dropout, gen)
            if keep is not None:
                x = x * keep
            h, c = cell.step(x, h, c)
            new_state.append((h, c))
            x = norm(h)
        return x, new_state


class ScanpathGenerator(nn.Module):
    def __init__(self, cfg: ModelConfig, gen=None):
        super().__init__()
        self.cfg = cfg
        self.encoder = ImageEncoder(cfg.conv_channels, gen=gen)
        self.rnn = RecurrentStack(cfg.feature_dim + 4, cfg.hidden, cfg.layers, cfg.dropout, cfg.bn_momentum, cfg.bn_eps, gen)
        self.head_w = nn.Parameter(_glorot((cfg.hidden, 4), gen))
        self.head_b = nn.Parameter(torch.zeros(4, dtype=DTYPE))

    def head(self, h):
        raw = h @ self.head_w + self.head_b
        xy = torch.sigmoid(raw[..., :2])
        dt = F.softplus(raw[..., 2:3])
        eos = torch.sigmoid(raw[..., 3:4])
        return torch.cat([xy, dt, eos], dim=-1)

    def teacher_forced(self, feature, prev, mask=None, gen=None, batch_stats=True, update_stats=False):
        """Predict every step given the ground-truth previous steps ``prev`` (B, T, 4)."""
        B, T, _ = prev.shape
        inp = torch.cat([feature[:, None, :].expand(B, T, feature.shape[-1]), prev], dim=-1)
        return self.head(self.rnn(inp, mask, gen, batch_stats, update_stats))

    @torch.no_grad()
    def rollout(self, feature, gen=None, max_len=None, eos_threshold=None):
        """Free-running sampling for each row of ``feature``.

        Returns a list of (n_k, 4) arrays of ``(x, y, dt, eos)``.
        """
        max_len = max_len or self.cfg.max_len
        thr = self.cfg.eos_threshold if eos_threshold is None else eos_threshold
        B = feature.shape[0]
        state = self.rnn.initial_state(B)
        prev = torch.zeros(B, 4, dtype=DTYPE)
        steps, lengths = [], [0] * B
        active = [True] * B
        for t in range(max_len):
            h, state = self.rnn.step(torch.cat([feature, prev], dim=-1), state, gen)
            out = self.head(h)
            steps.append(out)
            eos = out[:, 3].tolist()
            for k in range(B):
                if active[k]:
                    lengths[k] = t + 1
                    if eos[k] > thr:
                        active[k] = False
            if not any(active):
                break
            prev = out
        seq = torch.stack(steps, dim=1).numpy()
        return [seq[k, : lengths[k]].copy() for k in range(B)]


class ScanpathDiscriminator(nn.Module):
    def __init__(self, cfg: ModelConfig, gen=None):
        super().__init__()
        self.encoder = ImageEncoder(cfg.conv_channels, gen=gen)
        self.rnn = RecurrentStack(cfg.feature_dim + 4, cfg.disc_hidden, cfg.disc_layers, cfg.dropout, cfg.bn_momentum, cfg.bn_eps, gen)
        self.out_w = nn.Parameter(_glorot((cfg.disc_hidden, 1), gen))
        self.out_b = nn.Parameter(torch.zeros(1, dtype=DTYPE))

    def forward(self, feature, seq, lengths, mask=None, gen=None, batch_stats=True, update_stats=False):
        B, T, _ = seq.shape
        inp = torch.cat([feature[:, None, :].expand(B, T, feature.shape[-1]), seq], dim=-1)
        h = self.rnn(inp, mask, gen, batch_stats, update_stats)
        last = h[torch.arange(B), torch.as_tensor(lengths) - 1]
        return torch.sigmoid(last @ self.out_w + self.out_b)[:, 0]


class ScanpathGAN(nn.Module):
    def __init__(self, cfg: ModelConfig = ModelConfig(), seed: int = 0):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.cfg = cfg
        self.gen = ScanpathGenerator(cfg, gen)
        self.disc = ScanpathDiscriminator(cfg, gen)
        if cfg.freeze_encoder:
            for p in (*self.gen.encoder.parameters(), *self.disc.encoder.parameters()):
                p.requires_grad_(False)

    def generator_params(self):
        return {f"gen.{k}": p for k, p in self.gen.named_parameters() if p.requires_grad}

    def discriminator_params(self):
        return {f"disc.{k}": p for k, p in self.disc.named_parameters() if p.requires_grad}


# ---------------------------------------------------------------------------
# sequence helpers and losses


def step_targets(sp: Scanpath) -> np.ndarray:
    """(n, 4) targets: position, onset increment, and end-of-sequence flag."""
    a = sp.array
    dt = np.diff(a[:, 2], prepend=0.0)
    eos = np.zeros(len(a))
    eos[-1] = 1.0
    return np.column_stack([a[:, 0], a[:, 1], dt, eos])


def pad_sequences(seqs: Sequence[np.ndarray]):
    """Right-pad (n_k, 4) arrays into (B, T, 4) plus a (B, T) validity mask and lengths."""
    lengths = [len(s) for s in seqs]
    T = max(lengths)
    out = np.zeros((len(seqs), T, 4))
    mask = np.zeros((len(seqs), T), dtype=bool)
    for k, s in enumerate(seqs):
        out[k, : len(s)] = s
        mask[k, : len(s)] = True
    return torch.as_tensor(out, dtype=DTYPE), torch.as_tensor(mask), lengths


def shift_right(targets):
    """Teacher-forcing inputs: zeros at step 0, then targets[:-1]."""
    return F.pad(targets[:, :-1], (0, 0, 1, 0))


def steps_to_scanpath(image_id, steps: np.ndarray, observer=None) -> Scanpath:
    t = np.cumsum(steps[:, 2])
    return Scanpath.from_array(image_id, np.column_stack([steps[:, 0], steps[:, 1], t]), observer)


def masked_content_loss(pred, target, mask):
    """Mean squared Euclidean distance over the four step dimensions, valid steps only."""
    sq = ((pred - target) ** 2).sum(dim=-1)
    return sq[mask].mean()


def content_loss(pred: Sequence[StepOutput], gt: Scanpath) -> float:
    target = step_targets(gt)
    pred = np.asarray(pred, dtype=float).reshape(-1, 4)
    if len(pred) != len(target):
        raise LengthMismatch(f"{len(pred)} predicted steps for a {len(target)}-fixation scanpath")
    return float(((pred - target) ** 2).sum(axis=1).mean())


def adversarial_losses(d_real, d_fake, saturating=False):
    """Discriminator and generator losses from discriminator outputs.

    The generator term is the non-saturating ``-log D(fake)`` unless
    ``saturating`` is set, which gives ``log(1 - D(fake))``.
    Works on floats, numpy arrays and tensors (batch means).
    """
    if isinstance(d_real, torch.Tensor) or isinstance(d_fake, torch.Tensor):
        log, clip = torch.log, torch.clamp
    else:
        log, clip = np.log, np.clip
    r = clip(d_real, CLIP, 1 - CLIP)
    f = clip(d_fake, CLIP, 1 - CLIP)
    d_loss = -(log(r).mean() + log(1 - f).mean())
    g_loss = log(1 - f).mean() if saturating else -log(f).mean()
    if not isinstance(d_loss, torch.Tensor):
        d_loss, g_loss = float(d_loss), float(g_loss)
    return d_loss, g_loss


def combined_generator_loss(g_adv, content, alpha=0.05):
    return g_adv + alpha * content


# ---------------------------------------------------------------------------
# single-sample conveniences


def _torch_gen(rng):
    if rng is None or isinstance(rng, torch.Generator):
        return rng
    return torch.Generator().manual_seed(int(rng.integers(2**62)))


def image_tensor(img: np.ndarray):
    """(H, W, 3) array -> (1, 3, H, W) tensor."""
    return torch.as_tensor(np.ascontiguousarray(np.asarray(img, dtype=float).transpose(2, 0, 1)[None]), dtype=DTYPE)


@torch.no_grad()
def encode_image(img: np.ndarray, encoder: ImageEncoder) -> np.ndarray:
    return encoder(image_tensor(img))[0].numpy()


def generator_rollout(feature, model: ScanpathGAN, rng=None, image_id="", max_len=None, eos_threshold=None):
    """Sample one scanpath; returns (Scanpath, eos values)."""
    f = torch.as_tensor(np.asarray(feature, dtype=float)[None], dtype=DTYPE)
    steps = model.gen.rollout(f, _torch_gen(rng), max_len, eos_threshold)[0]
    return steps_to_scanpath(image_id, steps), steps[:, 3].tolist()


@torch.no_grad()
def generator_teacher_forced(feature, gt: Scanpath, model: ScanpathGAN, rng=None, batch_stats=False) -> list[StepOutput]:
    target, mask, _ = pad_sequences([step_targets(gt)])
    f = torch.as_tensor(np.asarray(feature, dtype=float)[None], dtype=DTYPE)
    out = model.gen.teacher_forced(f, shift_right(target), mask, _torch_gen(rng), batch_stats)
    return [StepOutput(*map(float, row)) for row in out[0].numpy()]


@torch.no_grad()
def discriminator_score(feature, seq: Sequence[StepOutput], model: ScanpathGAN, rng=None, batch_stats=False) -> float:
    if len(seq) == 0:
        raise EmptySequence("discriminator needs at least one step")
    s, mask, lengths = pad_sequences([np.asarray(seq, dtype=float).reshape(-1, 4)])
    f = torch.as_tensor(np.asarray(feature, dtype=float)[None], dtype=DTYPE)
    return float(model.disc(f, s, lengths, mask, _torch_gen(rng), batch_stats)[0])

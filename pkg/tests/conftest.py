import numpy as np
import pytest
from hypothesis import strategies as st

from scanpath_gan.core import Fixation, Scanpath


def random_scanpath(rng, n=None, image_id="img", n_min=1, n_max=12):
    n = n if n is not None else int(rng.integers(n_min, n_max + 1))
    xy = rng.uniform(0, 1, size=(n, 2))
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 0.6, size=n - 1))])
    return Scanpath.from_array(image_id, np.column_stack([xy, t]))


@st.composite
def scanpaths(draw, min_size=1, max_size=10, image_id="img"):
    n = draw(st.integers(min_size, max_size))
    unit = st.floats(0.0, 1.0, allow_nan=False)
    xs = draw(st.lists(unit, min_size=n, max_size=n))
    ys = draw(st.lists(unit, min_size=n, max_size=n))
    dts = draw(st.lists(st.floats(0.0, 2.0, allow_nan=False), min_size=n, max_size=n))
    t = np.cumsum(dts) - dts[0]
    return Scanpath(image_id, tuple(Fixation(x, y, float(tt)) for x, y, tt in zip(xs, ys, t)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_gan_problem(seed=0, lengths=(3, 5), size=64):
    """A tiny fixed batch plus pure generator/discriminator loss closures.

    Dropout masks are re-drawn from the same seed on every call and running
    statistics are never updated, so both closures are deterministic
    functions of the parameters.
    """
    import torch

    from scanpath_gan.model import (
        ModelConfig,
        ScanpathGAN,
        adversarial_losses,
        combined_generator_loss,
        masked_content_loss,
        pad_sequences,
        shift_right,
    )

    model = ScanpathGAN(ModelConfig(), seed=seed + 1)
    r = np.random.default_rng(seed)
    B = len(lengths)
    imgs = torch.as_tensor(r.uniform(-0.5, 0.5, (B, 3, size, size)))
    seqs = [np.column_stack([r.uniform(0, 1, (n, 2)), r.uniform(0.1, 0.4, n), np.eye(n)[-1]]) for n in lengths]
    target, mask, lens = pad_sequences(seqs)

    def parts():
        gen = torch.Generator().manual_seed(seed + 5)
        g, d = model.gen, model.disc
        pred = g.teacher_forced(g.encoder(imgs), shift_right(target), mask, gen)
        content = masked_content_loss(pred, target, mask)
        feat = d.encoder(imgs)
        p = d(torch.cat([feat, feat]), torch.cat([target, pred]), lens * 2, torch.cat([mask, mask]), gen)
        d_loss, g_adv = adversarial_losses(p[:B], p[B:])
        return d_loss, g_adv, content

    def g_loss():
        _, g_adv, content = parts()
        return combined_generator_loss(g_adv, content)

    def d_loss():
        return parts()[0]

    return model, parts, g_loss, d_loss


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

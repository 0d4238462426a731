import math

import numpy as np
import pytest
import torch

from scanpath_gan.checkpoint import format_arrays, parse_arrays
from scanpath_gan.core import Fixation, Scanpath
from scanpath_gan.errors import FixationOutsideImage, UndecodableImage
from scanpath_gan.synthetic import SyntheticSpec, generate_synthetic
from scanpath_gan.training import (
    LOG_COLUMNS,
    TrainConfig,
    Trainer,
    format_config,
    mean_pixel_of,
    parse_config_text,
    pixel_to_unit,
    preprocess,
    resize_image,
    split_ids,
    train,
)

SMALL = dict(conv_channels=(4, 8), hidden=16, disc_hidden=16, layers=1, disc_layers=1, image_height=16, image_width=16,
             minibatch=4, iterations=2, bootstrap_epochs=1, val_every=0, max_len=12)


def small_trainer(seed=0, n_images=8, **kw):
    ds = generate_synthetic(SyntheticSpec(n_images=n_images, width=16, height=16, seed=seed))
    cfg = TrainConfig(seed=seed, **{**SMALL, **kw})
    return Trainer(cfg, preprocess(ds.images, ds.scanpaths, cfg))


def params_of(model):
    return {k: v.detach().clone() for k, v in model.state_dict().items()}


class TestConfigText:
    def test_round_trip(self):
        cfg = TrainConfig(seed=3, alpha=0.0, conv_channels=(8, 8), saturating_gan_loss=True)
        assert parse_config_text(format_config(cfg)) == cfg

    def test_comments_and_errors(self):
        cfg = parse_config_text("# run\nseed = 4  # why not\n\niterations=7\n")
        assert cfg.seed == 4 and cfg.iterations == 7
        with pytest.raises(ValueError):
            parse_config_text("nonsense = 1\n")
        with pytest.raises(ValueError):
            parse_config_text("seed 4\n")

    @pytest.mark.parametrize("kw", [dict(minibatch=0), dict(split=1.0), dict(alpha=-1), dict(d_updates_per_iter=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


class TestPreprocess:
    def test_pixel_to_unit(self):
        sp = pixel_to_unit(Scanpath("a", (Fixation(320, 240, 0.0),)), 640, 480)
        assert sp.fixations[0][:2] == (0.5, 0.5)
        with pytest.raises(FixationOutsideImage):
            pixel_to_unit(Scanpath("a", (Fixation(700, 240, 0.0),)), 640, 480)

    def test_mean_pixel(self):
        imgs = [np.full((4, 4, 3), 10.0), np.full((2, 8, 3), 30.0)]
        np.testing.assert_array_equal(mean_pixel_of(imgs), [20.0, 20.0, 20.0])

    def test_mean_from_training_split_only(self):
        ds = generate_synthetic(SyntheticSpec(n_images=6, width=16, height=16))
        cfg = TrainConfig(**SMALL)
        data = preprocess(ds.images, ds.scanpaths, cfg)
        expect = mean_pixel_of([ds.images[i] for i in data.train_ids])
        np.testing.assert_allclose(data.mean_pixel, expect, rtol=0, atol=1e-15)
        for i in data.val_ids:
            np.testing.assert_allclose(data.images[i].numpy().transpose(1, 2, 0) + expect, ds.images[i], atol=1e-12)

    def test_resize(self, rng):
        img = rng.uniform(size=(30, 60, 3))
        np.testing.assert_array_equal(resize_image(img, 30, 60), img)
        assert resize_image(img, 15, 20).shape == (15, 20, 3)
        np.testing.assert_allclose(resize_image(np.full((8, 8, 3), 0.3), 5, 3), 0.3, atol=1e-15)
        with pytest.raises(UndecodableImage):
            resize_image(np.full((4, 4, 3), np.nan), 2, 2)

    def test_split_integrity(self):
        ids = [f"i{k}" for k in range(37)]
        train_ids, val_ids = split_ids(ids, 0.8, seed=5)
        assert not set(train_ids) & set(val_ids)
        assert sorted(train_ids + val_ids) == sorted(ids) and len(train_ids) == 30
        assert split_ids(ids, 0.8, seed=5) == (train_ids, val_ids)


class TestBootstrap:
    def test_zero_epochs_leaves_model(self):
        tr = small_trainer(bootstrap_epochs=0)
        before = params_of(tr.model)
        assert tr.bootstrap() == []
        after = params_of(tr.model)
        assert all(torch.equal(before[k], after[k]) for k in before)

    def test_touches_generator_only(self):
        tr = small_trainer()
        before = params_of(tr.model)
        rows = tr.bootstrap()
        after = params_of(tr.model)
        assert len(rows) == 1 and rows[0]["phase"] == "bootstrap"
        assert any(not torch.equal(before[k], after[k]) for k in before if k.startswith("gen."))
        assert all(torch.equal(before[k], after[k]) for k in before if k.startswith("disc."))

    def test_deterministic(self):
        a, b = small_trainer(seed=2), small_trainer(seed=2)
        a.bootstrap()
        b.bootstrap()
        pa, pb = params_of(a.model), params_of(b.model)
        assert all(torch.equal(pa[k], pb[k]) for k in pa)

    def test_reduces_validation_loss(self):
        tr = small_trainer(bootstrap_epochs=5, n_images=20)
        before = tr.validation_content_loss()
        tr.bootstrap()
        assert tr.validation_content_loss() < before


class TestAdversarial:
    def test_update_ratio_and_finite(self):
        tr = small_trainer()
        rows = tr.adversarial_iteration()
        assert [r["phase"] for r in rows] == ["d"] * 16 + ["g"] * 8
        assert all(r["iteration"] == 1 for r in rows)
        for r in rows:
            for k in ("d_loss", "g_loss", "content_loss"):
                if r[k] is not None:
                    assert math.isfinite(r[k])

    def test_parameter_change_audit(self):
        tr = small_trainer()
        batch = tr._sample(np.random.default_rng(0))
        before = params_of(tr.model)
        tr.generator_step(batch, torch.Generator().manual_seed(0))
        mid = params_of(tr.model)
        assert all(torch.equal(before[k], mid[k]) for k in before if k.startswith("disc."))
        assert any(not torch.equal(before[k], mid[k]) for k in before if k.startswith("gen."))
        tr.discriminator_step(batch, torch.Generator().manual_seed(1))
        after = params_of(tr.model)
        assert all(torch.equal(mid[k], after[k]) for k in mid if k.startswith("gen."))
        assert any(not torch.equal(mid[k], after[k]) for k in mid if k.startswith("disc."))

    def test_discriminator_learns_against_frozen_generator(self):
        tr = small_trainer(n_images=12, lr=1e-3)
        rng = np.random.default_rng(0)
        for k in range(200):
            stats = tr.discriminator_step(tr._sample(rng), torch.Generator().manual_seed(k))
        # evaluate on a fresh batch of every training scanpath
        imgs, target, mask, lengths = tr._batch(tr.data.train_items)
        g, d = tr.model.gen, tr.model.disc
        with torch.no_grad():
            gen = torch.Generator().manual_seed(999)
            fake = g.teacher_forced(g.encoder(imgs), torch.nn.functional.pad(target[:, :-1], (0, 0, 1, 0)), mask, gen)
            feat = d.encoder(imgs)
            p = d(torch.cat([feat, feat]), torch.cat([target, fake]), lengths * 2, torch.cat([mask, mask]), gen)
        B = imgs.shape[0]
        acc = 0.5 * (float((p[:B] > 0.5).double().mean()) + float((p[B:] < 0.5).double().mean()))
        assert acc > 0.9


class TestRunAndResume:
    def test_log_rows_and_files(self, tmp_path):
        ds = generate_synthetic(SyntheticSpec(n_images=8, width=16, height=16))
        cfg = TrainConfig(**{**SMALL, "val_every": 1, "val_k": 2, "out": str(tmp_path)})
        tr = train(cfg, dataset=ds)
        phases = [r["phase"] for r in tr.log]
        assert phases.count("bootstrap") == 1 and phases.count("d") == 32 and phases.count("g") == 16
        assert phases.count("val") == 2
        iters = [r["iteration"] for r in tr.log]
        assert iters == sorted(iters)
        lines = (tmp_path / "train_log.csv").read_text().splitlines()
        assert lines[0] == ",".join(LOG_COLUMNS) and len(lines) == len(tr.log) + 1
        assert (tmp_path / "final.ckpt").exists() and (tmp_path / "ckpt_000002.txt").exists()

    def test_same_seed_same_state(self):
        a, b = small_trainer(seed=4), small_trainer(seed=4)
        a.run()
        b.run()
        assert format_arrays(a.state_arrays()) == format_arrays(b.state_arrays())

    def test_resume_equivalence(self):
        full = small_trainer(seed=1)
        full.bootstrap()
        full.adversarial_iteration()
        saved = parse_arrays(format_arrays(full.state_arrays()))
        expect = full.adversarial_iteration()

        resumed = small_trainer(seed=1)
        resumed.load_state(saved)
        got = resumed.adversarial_iteration()
        for r, s in zip(expect, got):
            for k in LOG_COLUMNS:
                if isinstance(r[k], float):
                    assert abs(r[k] - s[k]) <= 1e-10
                else:
                    assert r[k] == s[k]
        pa, pb = params_of(full.model), params_of(resumed.model)
        assert all(torch.max(torch.abs(pa[k] - pb[k])) <= 1e-10 for k in pa)

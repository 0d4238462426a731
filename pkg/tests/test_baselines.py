import numpy as np
import pytest
from scipy import stats

from scanpath_gan.baselines import (
    BaselineConfig,
    baseline_interchange,
    baseline_random,
    baseline_random_gt_count,
    baseline_saliency_sampling,
    derangement,
)
from scanpath_gan.core import validate_scanpath
from scanpath_gan.errors import AllZeroSaliencyMap, EmptyScanpath, TooFewImages
from scanpath_gan.fileio import SaliencyMap

from conftest import random_scanpath

CFG = BaselineConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(len_min=0)
    with pytest.raises(ValueError):
        BaselineConfig(len_min=5, len_max=4)
    with pytest.raises(ValueError):
        BaselineConfig(dt_min=0.0)


def test_random_forced_count():
    sp = baseline_random("im", BaselineConfig(len_min=5, len_max=5), np.random.default_rng(0))
    assert len(sp) == 5 and sp.image_id == "im"


def test_random_valid_and_in_range():
    rng = np.random.default_rng(1)
    for _ in range(300):
        sp = baseline_random("im", CFG, rng)
        validate_scanpath(sp)
        assert 1 <= len(sp) <= 35
        t = sp.array[:, 2]
        assert t[0] == 0.0
        steps = np.diff(t)
        assert np.all((steps >= 0.1) & (steps <= 0.5))


def test_random_uniform_mean():
    rng = np.random.default_rng(3)
    pts = []
    while sum(len(p) for p in pts) < 10_000:
        pts.append(baseline_random("im", CFG, rng).array[:, :2])
    xy = np.concatenate(pts)[:10_000]
    assert np.all(np.abs(xy.mean(axis=0) - 0.5) < 0.02)


def test_gt_count():
    rng = np.random.default_rng(4)
    gt = random_scanpath(rng, n=7, image_id="g")
    out = baseline_random_gt_count(gt, CFG, rng)
    assert len(out) == 7 and out.image_id == "g"
    one = random_scanpath(rng, n=1)
    assert len(baseline_random_gt_count(one, CFG, rng)) == 1


def test_determinism():
    a = [baseline_random("x", CFG, np.random.default_rng(9)) for _ in range(3)]
    b = [baseline_random("x", CFG, np.random.default_rng(9)) for _ in range(3)]
    assert [s.fixations for s in a] == [s.fixations for s in b]


def _smap(values):
    v = np.asarray(values, dtype=float)
    return SaliencyMap(v.shape[1], v.shape[0], v, "s")


def test_saliency_single_pixel():
    v = np.zeros((4, 5))
    v[2, 3] = 7.0
    sp = baseline_saliency_sampling(_smap(v), 12, CFG, np.random.default_rng(0))
    assert len(sp) == 12 and sp.image_id == "s"
    np.testing.assert_array_equal(sp.array[:, 0], (3 + 0.5) / 5)
    np.testing.assert_array_equal(sp.array[:, 1], (2 + 0.5) / 4)


def test_saliency_uniform_chi_square():
    sp = baseline_saliency_sampling(_smap(np.ones((4, 4))), 50_000, CFG, np.random.default_rng(2))
    cols = np.floor(sp.array[:, 0] * 4).astype(int)
    rows = np.floor(sp.array[:, 1] * 4).astype(int)
    counts = np.bincount(rows * 4 + cols, minlength=16)
    assert stats.chisquare(counts).pvalue > 0.01


def test_saliency_follows_mass():
    v = np.array([[1.0, 3.0]])
    sp = baseline_saliency_sampling(_smap(v), 20_000, CFG, np.random.default_rng(5))
    frac = np.mean(sp.array[:, 0] > 0.5)
    assert abs(frac - 0.75) < 0.015


def test_saliency_errors():
    with pytest.raises(EmptyScanpath):
        baseline_saliency_sampling(_smap(np.ones((2, 2))), 0, CFG, np.random.default_rng(0))
    with pytest.raises(AllZeroSaliencyMap):
        baseline_saliency_sampling(_smap(np.zeros((2, 2))), 3, CFG, np.random.default_rng(0))


@pytest.mark.parametrize("n", [2, 3, 5, 11])
def test_derangement(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        p = derangement(n, rng)
        assert sorted(p) == list(range(n)) and np.all(p != np.arange(n))


def test_derangement_uniform_over_three():
    # the two derangements of 3 elements should be equally likely
    rng = np.random.default_rng(0)
    seen = [tuple(derangement(3, rng)) for _ in range(4000)]
    assert set(seen) == {(1, 2, 0), (2, 0, 1)}
    assert abs(seen.count((1, 2, 0)) / 4000 - 0.5) < 0.03


def test_interchange_two_images():
    rng = np.random.default_rng(0)
    gt = {"A": [random_scanpath(rng, image_id="A")], "B": [random_scanpath(rng, image_id="B")]}
    out = baseline_interchange(gt, rng)
    assert out["A"][0].fixations == gt["B"][0].fixations and out["A"][0].image_id == "A"
    assert out["B"][0].fixations == gt["A"][0].fixations and out["B"][0].image_id == "B"


def test_interchange_conserves_fixations():
    rng = np.random.default_rng(1)
    gt = {f"i{k}": [random_scanpath(rng, image_id=f"i{k}") for _ in range(k % 3 + 1)] for k in range(6)}
    out = baseline_interchange(gt, rng)
    before = sorted(f for v in gt.values() for sp in v for f in sp.fixations)
    after = sorted(f for v in out.values() for sp in v for f in sp.fixations)
    assert before == after
    for k, v in out.items():
        assert all(sp.image_id == k for sp in v)
        assert [sp.fixations for sp in v] != [sp.fixations for sp in gt[k]]


def test_interchange_too_few():
    with pytest.raises(TooFewImages):
        baseline_interchange({"A": []}, np.random.default_rng(0))

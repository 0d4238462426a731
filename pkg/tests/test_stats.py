import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scanpath_gan.core import Fixation, Scanpath
from scanpath_gan.errors import BinMismatch, NoFixations
from scanpath_gan.stats import SpatialHistogram, divergence, format_histogram, spatial_histogram

from conftest import random_scanpath, scanpaths


def test_corner_cells():
    sp = Scanpath("a", (Fixation(0.0, 0.0), Fixation(1.0, 1.0), Fixation(1.0, 0.0)))
    h = spatial_histogram([sp], B=4).bins
    assert h[0, 0] == h[3, 3] == h[0, 3] == pytest.approx(1 / 3)
    assert h.sum() == pytest.approx(1.0)


def test_center_bin():
    h = spatial_histogram([Scanpath("a", (Fixation(0.5, 0.5),))], B=16).bins
    assert h[8, 8] == 1.0


def test_empty():
    with pytest.raises(NoFixations):
        spatial_histogram([], B=4)


@settings(max_examples=60, deadline=None)
@given(st.lists(scanpaths(), min_size=1, max_size=5), st.integers(1, 20))
def test_mass_conservation(paths, B):
    assert spatial_histogram(paths, B).bins.sum() == pytest.approx(1.0, abs=1e-12)


def test_kl_self_zero(rng):
    h = spatial_histogram([random_scanpath(rng) for _ in range(5)], 8)
    assert divergence(h, h) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(scanpaths(), min_size=1, max_size=4), st.lists(scanpaths(), min_size=1, max_size=4))
def test_kl_nonnegative(a, b):
    assert divergence(spatial_histogram(a, 6), spatial_histogram(b, 6)) >= 0


def test_kl_against_direct_formula():
    P = SpatialHistogram(np.array([[0.5, 0.5], [0.0, 0.0]]))
    Q = SpatialHistogram(np.full((2, 2), 0.25))
    eps = 1e-6
    p = (P.bins + eps) / (1 + 4 * eps)
    expect = float(np.sum(p * np.log(p / 0.25)))
    assert divergence(P, Q) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(np.log(2), abs=1e-4)


def test_bin_mismatch(rng):
    paths = [random_scanpath(rng)]
    with pytest.raises(BinMismatch):
        divergence(spatial_histogram(paths, 4), spatial_histogram(paths, 5))


def test_format_is_whitespace_matrix(rng):
    h = spatial_histogram([random_scanpath(rng) for _ in range(3)], 5)
    back = np.loadtxt(format_histogram(h).splitlines())
    np.testing.assert_array_equal(back, h.bins)


def test_quadrants():
    sp = Scanpath("a", tuple(Fixation(x, y) for x, y in ((0.1, 0.1), (0.9, 0.1), (0.1, 0.9), (0.9, 0.9))))
    np.testing.assert_array_equal(spatial_histogram([sp], 2).bins, np.full((2, 2), 0.25))


def test_concentrated_vs_uniform_hand_value():
    P = SpatialHistogram(np.array([[1.0, 0.0], [0.0, 0.0]]))
    Q = SpatialHistogram(np.full((2, 2), 0.25))
    eps = 1e-6
    z = 1 + 4 * eps
    big, small = (1 + eps) / z, eps / z
    expect = big * np.log(big / 0.25) + 3 * small * np.log(small / 0.25)
    assert divergence(P, Q) == pytest.approx(expect, rel=1e-12)

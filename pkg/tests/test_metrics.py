import math

import numpy as np
import pytest

from hybrid_deblur.degrade import NoiseSpec, degrade, synthetic_image
from hybrid_deblur.metrics import SsimConfig, mssim, mssim_color, psnr, ssim_map
from hybrid_deblur.operators import Psf


@pytest.fixture
def fixture_image():
    return synthetic_image("shapes", 64)


def test_identical_images(fixture_image):
    assert mssim(fixture_image, fixture_image) == 1.0
    assert psnr(fixture_image, fixture_image) == math.inf


def test_constant_offset_closed_form():
    a, b = 100.0, 120.0
    c1 = (0.01 * 255) ** 2
    expected = (2 * a * b + c1) / (a * a + b * b + c1)
    got = mssim(np.full((32, 32), a), np.full((32, 32), b))
    assert abs(got - expected) < 1e-10


def test_map_is_valid_size():
    m = ssim_map(np.zeros((20, 30)), np.zeros((20, 30)))
    assert m.shape == (10, 20)


def test_antithetic_pair_is_negative():
    rng = np.random.default_rng(0)
    x = np.clip(128 + 40 * rng.standard_normal((48, 48)), 0, 255)
    assert mssim(x, 255 - x) < 0


def test_monotone_under_noise(fixture_image):
    scores = [
        mssim(fixture_image, degrade(fixture_image, Psf.delta(), NoiseSpec(level, seed=3)))
        for level in (0, 1, 2, 5, 10)
    ]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_psnr_unit_mse():
    x = np.zeros((8, 8))
    assert psnr(x, x + 1) == pytest.approx(48.1308, abs=1e-4)


def test_color_is_plane_mean(fixture_image):
    ref = np.stack([fixture_image, fixture_image[::-1], fixture_image.T])
    rng = np.random.default_rng(1)
    test = ref + 10 * rng.standard_normal(ref.shape)
    expected = np.mean([mssim(r, t) for r, t in zip(ref, test)])
    assert mssim_color(ref, test) == pytest.approx(expected)


def test_rejects_mismatch_and_small_images():
    with pytest.raises(ValueError):
        mssim(np.zeros((16, 16)), np.zeros((16, 17)))
    with pytest.raises(ValueError):
        mssim(np.zeros((8, 8)), np.zeros((8, 8)))


def test_custom_config_constants():
    cfg = SsimConfig(k1=0.02, k2=0.05, dynamic_range=1.0)
    assert cfg.c1 == pytest.approx(4e-4)
    assert cfg.c2 == pytest.approx(2.5e-3)

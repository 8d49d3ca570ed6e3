import numpy as np
import pytest

from hybrid_deblur.degrade import (
    NoiseSpec,
    degrade,
    make_psf,
    noise_sigma,
    parse_psf_spec,
    standard_psfs,
    synthetic_image,
)
from hybrid_deblur.operators import Psf, convolve_periodic


def test_narrow_gaussian_is_nearly_delta():
    psf = make_psf("gaussian", 13, std=0.05)
    assert psf.taps[6, 6] >= 0.999


@pytest.mark.parametrize("kind, params", [("gaussian", dict(std=2.0)), ("motion", dict(length=9, angle=45)), ("disk", dict(radius=4))])
def test_kernels_are_normalized_and_symmetric(kind, params):
    psf = make_psf(kind, 13, **params)
    assert psf.taps.sum() == pytest.approx(1.0, abs=1e-12)
    # all three are point-symmetric about the centre
    np.testing.assert_allclose(psf.taps, psf.taps[::-1, ::-1], atol=1e-15)


def test_horizontal_motion_stays_on_centre_row():
    psf = make_psf("motion", 13, length=9, angle=0)
    off = np.delete(psf.taps, 6, axis=0)
    assert np.all(off == 0)
    row = psf.taps[6]
    assert np.count_nonzero(row) == 9
    np.testing.assert_allclose(row[2:11], 1 / 9)


def test_diagonal_motion_follows_the_diagonal():
    taps = make_psf("motion", 13, length=9, angle=45).taps
    # counter-clockwise from +x: up and to the right, i.e. the anti-diagonal
    assert np.trace(taps[:, ::-1]) > 0.5
    assert taps[2, 2] == 0


def test_disk_support():
    taps = make_psf("disk", 13, radius=4).taps
    assert taps[6, 6] > 0 and taps[6, 10] > 0
    assert taps[6, 12] == 0 and taps[0, 0] == 0


@pytest.mark.parametrize(
    "kind, params",
    [("gaussian", dict(std=0)), ("motion", dict(length=0.5)), ("disk", dict(radius=-1)), ("nope", {})],
)
def test_bad_kernel_parameters(kind, params):
    with pytest.raises(ValueError):
        make_psf(kind, 13, **params)


def test_even_size_rejected():
    with pytest.raises(ValueError):
        make_psf("gaussian", 12)


def test_standard_kernels_and_spec_parsing():
    psfs = standard_psfs()
    assert sorted(psfs) == ["1", "2", "3"]
    assert all(p.size == 13 for p in psfs.values())
    np.testing.assert_array_equal(parse_psf_spec("2").taps, psfs["2"].taps)
    psf = parse_psf_spec("motion:11,length=5,angle=0")
    assert psf.size == 11 and np.count_nonzero(psf.taps) == 5
    with pytest.raises(ValueError):
        parse_psf_spec("gaussian,std")


def test_noise_level_semantics():
    assert noise_sigma(2) == pytest.approx(5.1)
    assert NoiseSpec(2).sigma == pytest.approx(5.1)
    with pytest.raises(ValueError):
        NoiseSpec(-1)


def test_noise_statistics():
    f = np.full((256, 256), 128.0)
    g = degrade(f, Psf.delta(), NoiseSpec(2, seed=11))
    assert abs((g - f).std() - 5.1) / 5.1 < 0.03
    assert abs((g - f).mean()) < 0.1


def test_degrade_is_seeded_and_unclamped():
    f = synthetic_image("step", 32)
    psf = make_psf("gaussian", 5, std=1.0)
    a = degrade(f, psf, NoiseSpec(5, seed=1))
    np.testing.assert_array_equal(a, degrade(f, psf, NoiseSpec(5, seed=1)))
    assert not np.array_equal(a, degrade(f, psf, NoiseSpec(5, seed=2)))
    dark = np.zeros((32, 32))
    assert degrade(dark, psf, NoiseSpec(5, seed=1)).min() < 0


def test_noise_free_degrade_is_blur():
    f = synthetic_image("shapes", 32)
    psf = make_psf("disk", 7, radius=2)
    np.testing.assert_array_equal(degrade(f, psf), convolve_periodic(f, psf))


@pytest.mark.parametrize("kind", ["step", "shapes", "cells", "terrain"])
def test_synthetic_images(kind):
    a = synthetic_image(kind, 64, seed=3)
    assert a.shape == (64, 64)
    assert a.min() >= 0 and a.max() <= 255
    np.testing.assert_array_equal(a, synthetic_image(kind, 64, seed=3))
    with pytest.raises(ValueError):
        synthetic_image("unknown")

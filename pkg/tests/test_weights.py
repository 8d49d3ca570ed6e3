import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_deblur.degrade import synthetic_image
from hybrid_deblur.operators import hessian
from hybrid_deblur.weights import (
    WeightConfig,
    gaussian_kernel1d,
    gaussian_smooth,
    hessian_eigenvalues,
    irls_weights,
    local_variance,
    zeta,
)

from oracles import local_variance_loops, sym2x2_eigs


def test_local_variance_hand_value():
    f = np.zeros((5, 5))
    f[2, 2] = 25.0
    # 24 neighbours, each (0 - 25)^2, over 25 cells
    assert local_variance(f, 5)[2, 2] == pytest.approx(24 * 625 / 25)
    assert local_variance(f, 5)[0, 0] == pytest.approx(625 / 25)


def test_local_variance_matches_loops():
    rng = np.random.default_rng(0)
    f = rng.uniform(0, 255, (9, 11))
    for window in (3, 5):
        np.testing.assert_allclose(local_variance(f, window), local_variance_loops(f, window), rtol=1e-12)


def test_gaussian_kernel_properties():
    k = gaussian_kernel1d(1.0)
    assert k.size == 7
    assert k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, k[::-1])
    f = np.random.default_rng(1).standard_normal((12, 12))
    assert gaussian_smooth(f, 1.0).mean() == pytest.approx(f.mean())


def test_eigenvalues_match_characteristic_polynomial():
    rng = np.random.default_rng(2)
    f = rng.uniform(0, 255, (16, 16))
    lam1, lam2 = hessian_eigenvalues(f, 1.0)
    h = hessian(f)
    a = gaussian_smooth(h[0], 1.0)
    d = gaussian_smooth(h[3], 1.0)
    b = gaussian_smooth(0.5 * (h[1] + h[2]), 1.0)
    r1, r2 = sym2x2_eigs(a, b, d)
    np.testing.assert_allclose(lam1, r1, atol=1e-9)
    np.testing.assert_allclose(lam2, r2, atol=1e-9)
    np.testing.assert_allclose(lam1 + lam2, a + d, atol=1e-9)
    np.testing.assert_allclose(lam1 * lam2, a * d - b * b, atol=1e-6)
    assert np.all(lam1 >= lam2)


def test_zeta_range_and_constant_image():
    assert np.all(zeta(np.full((16, 16), 77.0), WeightConfig()) == 0)
    z = zeta(synthetic_image("terrain", 64), WeightConfig())
    assert np.all((z >= 0) & (z < 1))


def test_zeta_invariant_to_constant_shift():
    f = np.random.default_rng(3).integers(0, 200, (20, 20)).astype(float)
    np.testing.assert_array_equal(zeta(f, WeightConfig()), zeta(f + 37.0, WeightConfig()))


def test_zeta_highlights_step_edge():
    f = synthetic_image("step", 64)
    z = zeta(f, WeightConfig())
    band = np.zeros(f.shape, bool)
    band[:, 30:34] = True
    band[:, :2] = band[:, -2:] = True
    assert z[band].mean() > 5 * z[~band].mean()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 50), st.integers(0, 2**32 - 1))
def test_zeta_monotone_in_kappa(kappa, seed):
    f = np.random.default_rng(seed).uniform(0, 255, (8, 8))
    lo = zeta(f, WeightConfig(kappa=kappa))
    hi = zeta(f, WeightConfig(kappa=2 * kappa))
    assert np.all(hi >= lo - 1e-15)


def test_psi_example_value():
    f = np.full((8, 8), 10.0)
    psi1, psi2 = irls_weights(f, WeightConfig(nu1=0.55, nu2=0.55, eps=1e-3))
    np.testing.assert_allclose(psi1, 1e-3 ** -0.45)
    np.testing.assert_allclose(psi1, 22.387, rtol=1e-4)
    np.testing.assert_allclose(psi2, psi1)


def test_psi_is_one_for_convex_exponent():
    f = np.random.default_rng(4).uniform(0, 255, (8, 8))
    psi1, psi2 = irls_weights(f, WeightConfig(nu1=1.0, nu2=1.0))
    assert np.all(psi1 == 1.0) and np.all(psi2 == 1.0)


def test_psi_decreases_with_gradient():
    f = np.zeros((8, 8))
    f[:, 4:] = np.array([10.0, 20.0, 30.0, 40.0])
    psi1, _ = irls_weights(f, WeightConfig())
    assert psi1[0, 3] < psi1[0, 0]


def test_global_mode_is_constant():
    f = np.random.default_rng(5).uniform(0, 255, (8, 8))
    psi1, psi2 = irls_weights(f, WeightConfig(psi_mode="global"))
    assert np.ptp(psi1) == 0 and np.ptp(psi2) == 0


@pytest.mark.parametrize(
    "kwargs",
    [dict(kappa=0), dict(sigma=-1), dict(window=4), dict(nu1=0), dict(nu2=1.5), dict(eps=0), dict(psi_mode="x")],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        WeightConfig(**kwargs)

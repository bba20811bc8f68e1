import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge.domain import Grid, ScalarField
from fracgauge.spectral import (
    PeriodicField,
    embed,
    frac_laplacian,
    frac_laplacian_constant,
    frequencies,
    lp_decompose,
    lp_levels,
    lp_profile,
    lp_project,
    restrict_periodic,
    riesz_potential,
    riesz_potential_constant,
    riesz_transform,
    singular_integral_frac_laplacian,
    smooth_cutoff,
    spectral_tail,
    triebel_seminorm,
)


def mode(n, side, k1, k2):
    pf = PeriodicField(side, n, np.zeros((n, n)))
    x, y = pf.grid.points.T
    w = 2 * np.pi / side
    return pf.with_values(np.cos(w * (k1 * x + k2 * y)).reshape(n, n)), w * math.hypot(k1, k2)


def bump(side, n, width):
    pf = PeriodicField(side, n, np.zeros((n, n)))
    r = np.hypot(*pf.grid.points.T) / width
    v = np.where(r < 1, np.exp(1 - 1 / np.maximum(1 - r**2, 1e-300)), 0.0)
    return pf.with_values(v.reshape(n, n))


@settings(max_examples=30, deadline=None)
@given(st.integers(-7, 7), st.integers(-7, 7), st.floats(0.1, 1.9), st.floats(1.0, 20.0))
def test_multipliers_act_diagonally_on_modes(k1, k2, s, side):
    if k1 == k2 == 0:
        return
    f, xi = mode(32, side, k1, k2)
    np.testing.assert_allclose(frac_laplacian(f, s).values, xi**s * f.values, atol=1e-10 * max(1, xi**s))
    np.testing.assert_allclose(riesz_potential(f, s).values, xi ** (-s) * f.values, atol=1e-10 * max(1, xi**-s))


def test_laplacian_order_two_limit_matches_second_derivative():
    f, xi = mode(64, 2 * np.pi, 3, 1)
    near_two = frac_laplacian(f, 1.999).values
    np.testing.assert_allclose(near_two, xi**1.999 * f.values, atol=1e-9)


def test_riesz_transforms_square_to_minus_identity():
    rng = np.random.default_rng(0)
    n = 32
    pf = PeriodicField(4.0, n, rng.standard_normal((n, n)))
    # remove the mean and the Nyquist lines, where the transforms are not invertible
    F = np.fft.fft2(pf.values)
    F[0, 0] = 0
    F[n // 2, :] = 0
    F[:, n // 2] = 0
    pf = pf.with_values(np.fft.ifft2(F).real)
    R = riesz_transform(pf).values
    R11 = riesz_transform(pf.with_values(R[..., 0])).values[..., 0]
    R22 = riesz_transform(pf.with_values(R[..., 1])).values[..., 1]
    np.testing.assert_allclose(R11 + R22, -pf.values, atol=1e-12)


def test_riesz_transform_of_sine_mode():
    f, xi = mode(32, 2 * np.pi, 2, 0)
    # -i xi1/|xi| maps e^{2ix} -> -i e^{2ix} and e^{-2ix} -> i e^{-2ix}, so cos(2x) -> sin(2x)
    R = riesz_transform(f).values
    x = f.grid.points[:, 0].reshape(32, 32)
    np.testing.assert_allclose(R[..., 0], np.sin(2 * x), atol=1e-12)
    np.testing.assert_allclose(R[..., 1], 0.0, atol=1e-12)


def test_constants_at_order_one():
    # both normalisations reduce to 1 / (2 pi) in the plane at order one
    assert frac_laplacian_constant(1.0) == pytest.approx(1 / (2 * np.pi))
    assert riesz_potential_constant(1.0) == pytest.approx(1 / (2 * np.pi))


def test_frac_laplacian_constant_standard_form():
    # 4^a Gamma(1 + a) / (pi |Gamma(-a)|) for the multiplier |xi|^(2a)
    for a in (0.2, 0.45, 0.7, 0.9):
        want = 4**a * math.gamma(1 + a) / (math.pi * abs(math.gamma(-a)))
        assert frac_laplacian_constant(2 * a) == pytest.approx(want)


def test_singular_integral_matches_multiplier_on_small_bump():
    f = bump(32.0, 256, 1.0)
    a = frac_laplacian(f, 0.5).values
    b = singular_integral_frac_laplacian(f, 0.5).values
    assert np.linalg.norm(a - b) / np.linalg.norm(a) < 0.01


def test_singular_integral_rejects_bad_input():
    f = bump(8.0, 32, 1.0)
    with pytest.raises(ValueError):
        singular_integral_frac_laplacian(f, 1.0)
    with pytest.raises(ValueError):
        singular_integral_frac_laplacian(f.with_values(np.zeros((32, 32, 2))), 0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.2, 1.8))
def test_riesz_potential_inverts_frac_laplacian(seed, s):
    rng = np.random.default_rng(seed)
    pf = PeriodicField(2 * np.pi, 32, rng.standard_normal((32, 32)))
    back = riesz_potential(frac_laplacian(pf, s), s).values
    np.testing.assert_allclose(back, pf.values - pf.values.mean(), atol=1e-9)


def test_profile_partition_of_unity():
    r = np.geomspace(1e-3, 1e3, 2001)
    total = sum(lp_profile(r * 2.0 ** (-j)) for j in range(-15, 16))
    np.testing.assert_allclose(total, 1.0, atol=1e-14)
    assert np.all(lp_profile(np.array([0.0, -1.0])) == 0.0)
    # support in the annulus [1/2, 2]
    assert lp_profile(np.array([0.49]))[0] == 0.0 and lp_profile(np.array([2.01]))[0] == 0.0


def test_lp_reconstruction_on_band_limited_field():
    rng = np.random.default_rng(3)
    n = 64
    F = np.zeros((n, n), dtype=complex)
    F[:10, :10] = rng.standard_normal((10, 10))
    pf = PeriodicField(2 * np.pi, n, np.fft.ifft2(F).real)
    dec = lp_decompose(pf)
    z = pf.values - pf.values.mean()
    assert np.linalg.norm(dec.reconstruct() - z) / np.linalg.norm(z) < 1e-6
    assert spectral_tail(pf) < 1e-28


def test_lp_levels_cover_the_lattice():
    pf = PeriodicField(2 * np.pi, 64, np.zeros((64, 64)))
    lo, hi = lp_levels(pf)
    assert 2.0 ** (lo + 1) <= 1.0  # lowest annulus reaches the first frequency
    assert 2.0 ** (hi + 1) <= 32.0  # highest stays below Nyquist
    with pytest.raises(ValueError):
        lp_project(pf, hi + 1)


def test_single_mode_lands_in_its_bands():
    f, xi = mode(64, 2 * np.pi, 5, 0)
    dec = lp_decompose(f)
    for j, band in dec.bands.items():
        weight = lp_profile(np.array([xi * 2.0**-j]))[0]
        np.testing.assert_allclose(band.values, weight * f.values, atol=1e-12)


def test_triebel_seminorm_of_single_mode():
    f, xi = mode(64, 2 * np.pi, 4, 0)
    s, p = 0.5, 2.0
    dec = lp_decompose(f)
    want = sum(2 ** (j * s * p) * (lp_profile(np.array([xi / 2**j]))[0] ** 2) * np.sum(f.values**2) * f.h**2 for j in dec.bands)
    assert triebel_seminorm(f, s, p) == pytest.approx(want ** 0.5, rel=1e-10)


def test_triebel_warns_on_unresolved_tail():
    rng = np.random.default_rng(1)
    pf = PeriodicField(2 * np.pi, 32, rng.standard_normal((32, 32)))
    with pytest.warns(RuntimeWarning):
        triebel_seminorm(pf, 0.5, 2.0)


def test_periodic_field_validation():
    with pytest.raises(ValueError):
        PeriodicField(1.0, 12, np.zeros((12, 12)))
    with pytest.raises(ValueError):
        PeriodicField(1.0, 8, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        PeriodicField(1.0, 8, np.full((8, 8), np.nan))


def test_embed_and_restrict_round_trip():
    g = Grid("disk", 1.0, 32)
    x, y = g.points.T
    f = ScalarField(g, np.exp(x) * np.sin(y))
    pf = embed(f, 2)
    assert pf.side == 4.0 and pf.n == 64
    np.testing.assert_allclose(restrict_periodic(pf, g).values, f.values, atol=1e-14)
    # vanishes beyond radius 1.5
    r = np.hypot(*pf.grid.points.T).reshape(64, 64)
    assert np.all(pf.values[r >= 1.5] == 0.0)


def test_embed_rejects_bad_sizes():
    with pytest.raises(ValueError):
        embed(ScalarField(Grid("disk", 1.0, 24), np.zeros(Grid("disk", 1.0, 24).size)), 2)


def test_smooth_cutoff_limits():
    r = np.array([0.0, 1.0, 1.25, 1.5, 2.0])
    c = smooth_cutoff(r)
    assert c[0] == 1.0 and c[1] == 1.0 and c[3] == 0.0 and c[4] == 0.0
    assert c[2] == pytest.approx(0.5)


def test_frequency_layout():
    X1, X2 = frequencies(2 * np.pi, 8)
    assert X1[1, 0] == pytest.approx(1.0)
    assert X1[-1, 0] == pytest.approx(-1.0)
    assert np.all(X2[:, 2] == 2.0)


def test_operators_accept_full_square_fields():
    f, xi = mode(16, 2 * np.pi, 1, 2)
    sq = f.to_field()
    assert sq.grid.kind == "square"
    np.testing.assert_allclose(frac_laplacian(sq, 0.7).values, frac_laplacian(f, 0.7).values)
    np.testing.assert_allclose(riesz_transform(sq).values, riesz_transform(f).values)
    disk = Grid("disk", 1.0, 16)
    with pytest.raises(ValueError):
        frac_laplacian(ScalarField(disk, np.zeros(disk.size)), 0.5)

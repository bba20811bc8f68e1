import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge.domain import Grid, ScalarField, VecField3
from fracgauge.harness.generators import SampleSpec, gen_scalar, gen_unit_field
from fracgauge.sobolev import bbm_limit, frac_normal_energy, gagliardo_seminorm, inversion_extension


def brute_double_sum(g, values, s, p, wedge=False):
    """Direct O(N^2) evaluation over ordered distinct node pairs."""
    P = g.points
    V = values.reshape(g.size, -1)
    total = 0.0
    for a in range(g.size):
        d = np.hypot(*(P - P[a]).T)
        if wedge:
            F = np.linalg.norm(np.cross(V[a], V), axis=1)
        else:
            F = np.linalg.norm(V - V[a], axis=1)
        ok = d > 0
        total += np.sum(F[ok] ** p / d[ok] ** (2 + s * p))
    return total * g.h**4


@pytest.fixture
def small():
    return Grid("disk", 1.0, 10)


def test_gagliardo_matches_brute_force(small):
    f = gen_scalar(SampleSpec(seed=3), small)
    for s, p in [(0.5, 2.0), (0.75, 8.0 / 3.0), (0.3, 3.0)]:
        got = gagliardo_seminorm(f, s, p).value
        want = brute_double_sum(small, f.values, s, p) ** (1.0 / p)
        assert got == pytest.approx(want, rel=1e-12)


def test_frac_normal_matches_brute_force(small):
    u = gen_unit_field(SampleSpec(seed=4, amplitude=0.5), small)
    got = frac_normal_energy(u, 0.75).value
    want = brute_double_sum(small, u.values, 0.75, 8.0 / 3.0, wedge=True)
    assert got == pytest.approx(want, rel=1e-12)


def test_constants_have_zero_energy(small):
    f = ScalarField(small, np.full(small.size, 2.5))
    assert gagliardo_seminorm(f, 0.6).value == 0.0
    u = VecField3(small, np.tile([0.0, 0.6, 0.8], (small.size, 1)))
    assert frac_normal_energy(u, 0.75).value == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3), st.floats(0.55, 0.95))
def test_seminorm_is_absolutely_homogeneous(a, s):
    g = Grid("disk", 1.0, 8)
    f = gen_scalar(SampleSpec(seed=9), g)
    base = gagliardo_seminorm(f, s).value
    assert gagliardo_seminorm(f * a, s).value == pytest.approx(abs(a) * base, rel=1e-10)


def test_normal_energy_bounded_by_gagliardo(small):
    # |u ^ v| <= |u - v| for unit vectors
    for trial in range(3):
        u = gen_unit_field(SampleSpec(seed=11, amplitude=0.4), small, trial)
        W = frac_normal_energy(u, 0.75).value
        G = gagliardo_seminorm(u, 0.75).value
        assert W <= G ** (8.0 / 3.0) * (1 + 1e-12)


def test_order_one_is_gradient_norm():
    g = Grid("disk", 1.0, 64)
    x, y = g.points.T
    f = ScalarField(g, 3.0 * x - 4.0 * y)
    area = g.size * g.h**2
    assert gagliardo_seminorm(f, 1.0, 2.0).value == pytest.approx(5.0 * np.sqrt(area), rel=1e-12)


@pytest.mark.parametrize("s,p", [(0.0, 2.0), (1.2, 2.0), (0.5, 1.0), (0.5, np.inf)])
def test_invalid_orders_are_rejected(small, s, p):
    f = ScalarField(small, np.zeros(small.size))
    with pytest.raises(ValueError):
        gagliardo_seminorm(f, s, p)


def test_frac_normal_requires_unit_field(small):
    with pytest.raises(ValueError):
        frac_normal_energy(VecField3(small, np.ones((small.size, 3))), 0.75)
    u = VecField3(small, np.tile([0.0, 0.0, 1.0], (small.size, 1)))
    with pytest.raises(ValueError):
        frac_normal_energy(u, 0.4)


def test_scale_invariance_of_critical_seminorm():
    # [f(. / 2)]_{W^{s, 2/s}} over the doubled disk equals [f] over the unit disk
    # when the lattice is scaled along with it (same node count per unit length ratio).
    g1 = Grid("disk", 1.0, 24)
    g2 = Grid("disk", 2.0, 24)
    x, y = g1.points.T
    f1 = ScalarField(g1, np.sin(2 * x) * np.cos(y))
    f2 = ScalarField(g2, f1.values)
    s = 0.7
    assert gagliardo_seminorm(f2, s).value == pytest.approx(gagliardo_seminorm(f1, s).value, rel=1e-12)


def test_inversion_extension_keeps_inside_and_unit_length():
    g = Grid("disk", 1.0, 32)
    u = gen_unit_field(SampleSpec(seed=2, amplitude=0.3), g)
    ext = inversion_extension(u, 2.0)
    np.testing.assert_allclose(np.linalg.norm(ext.values, axis=1), 1.0, atol=1e-12)
    inner = ext.grid.radii < 1.0
    assert int(np.count_nonzero(inner)) == g.size
    np.testing.assert_allclose(np.sort(ext.values[inner][:, 0]), np.sort(u.values[:, 0]))


def test_inversion_extension_of_inversion_symmetric_field():
    # f(x) = |x| + 1/|x| is invariant under x -> x / |x|^2
    g = Grid("disk", 1.0, 64)
    r = g.radii
    f = ScalarField(g, r + 1.0 / r)
    ext = inversion_extension(f, 1.5)
    R = ext.grid.radii
    outer = (R > 1.05) & (R < 1.45)
    np.testing.assert_allclose(ext.values[outer], R[outer] + 1.0 / R[outer], rtol=2e-3)


def test_bbm_constant_is_field_independent_and_near_half_pi():
    g = Grid("disk", 1.0, 48)
    consts = []
    for trial in range(2):
        u = gen_unit_field(SampleSpec(seed=21, amplitude=0.2), g, trial)
        rep = bbm_limit(u, [0.9, 0.93, 0.96, 0.98])
        consts.append(rep.constant)
    assert abs(consts[0] - consts[1]) / np.mean(consts) < 0.05
    assert np.mean(consts) == pytest.approx(np.pi / 2, rel=0.05)


def test_bbm_of_constant_field_has_no_constant():
    g = Grid("disk", 1.0, 16)
    u = VecField3(g, np.tile([1.0, 0.0, 0.0], (g.size, 1)))
    rep = bbm_limit(u, [0.9, 0.93, 0.96, 0.98])
    assert rep.constant is None
    assert rep.limit == pytest.approx(0.0, abs=1e-14)


def test_bbm_needs_four_orders():
    g = Grid("disk", 1.0, 16)
    u = VecField3(g, np.tile([1.0, 0.0, 0.0], (g.size, 1)))
    with pytest.raises(ValueError):
        bbm_limit(u, [0.9, 0.95, 0.98])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge.domain import Grid, gradient
from fracgauge.frames import (
    Frame,
    classify_branch,
    connection_form,
    continuity_roots,
    coulomb_gauge,
    flat_immersion,
    frame_jacobian,
    gauge_curve,
    lambda_decomposition,
    lifting_pipeline,
    perp_connection_defect,
    rotate_frame,
    stereographic_immersion,
)
from fracgauge.harness.generators import SampleSpec, gen_frame, gen_scalar


def constant_frame(g):
    return Frame.from_arrays(g, np.tile([1.0, 0, 0], (g.size, 1)), np.tile([0, 1.0, 0], (g.size, 1)))


def test_frame_rejects_non_orthonormal(disk32):
    e = np.tile([1.0, 0, 0], (disk32.size, 1))
    with pytest.raises(ValueError):
        Frame.from_arrays(disk32, e, e)
    with pytest.raises(ValueError):
        Frame.from_arrays(disk32, e, np.tile([0, 1.0, 0], (disk32.size, 1)), np.tile([0, 0, -1.0], (disk32.size, 1)))


def test_stereographic_conformal_factor_converges():
    errs = []
    for n in (32, 64):
        g = Grid("disk", 1.0, n)
        cd = stereographic_immersion(g)
        lam = np.log(2.0 / (1.0 + g.radii**2))
        errs.append(np.max(np.abs(cd.lam.values - lam)))
    assert errs[1] < 1e-3
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_stereographic_normal_is_radial(disk64):
    cd = stereographic_immersion(disk64)
    dots = np.sum(cd.frame.u.values * cd.phi.values, axis=1)
    # the frame comes from difference quotients, so this holds to truncation order
    np.testing.assert_allclose(np.abs(dots), 1.0, atol=10 * disk64.h**2)


def test_scaling_shifts_conformal_factor(disk32):
    a = stereographic_immersion(disk32)
    b = stereographic_immersion(disk32, 0.25)
    np.testing.assert_allclose(b.lam.values - a.lam.values, np.log(0.25), atol=1e-13)
    np.testing.assert_allclose(b.frame.u.values, a.frame.u.values, atol=1e-14)


def test_flat_immersion_has_trivial_geometry(disk32):
    cd = flat_immersion(disk32)
    assert np.max(np.abs(cd.lam.values)) < 1e-14
    assert np.max(np.abs(connection_form(cd.frame).values)) == 0.0
    assert np.max(np.abs(frame_jacobian(cd.frame).values)) == 0.0


def test_conformal_identity_second_order():
    errs = [perp_connection_defect(stereographic_immersion(Grid("disk", 1.0, n))) for n in (32, 64)]
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_rotation_adds_gradient_of_angle():
    errs = []
    for n in (32, 64):
        g = Grid("disk", 1.0, n)
        fr = stereographic_immersion(g).frame
        theta = gen_scalar(SampleSpec(seed=5, amplitude=0.5), g)
        diff = connection_form(rotate_frame(fr, theta)).values - connection_form(fr).values
        errs.append(np.max(np.abs(diff - gradient(theta).values)))
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_rotation_keeps_normal(disk32):
    fr = gen_frame(SampleSpec(seed=3), disk32)
    theta = gen_scalar(SampleSpec(seed=3), disk32)
    rot = rotate_frame(fr, theta)
    np.testing.assert_array_equal(rot.u.values, fr.u.values)


def test_gauge_of_constant_frame_is_trivial(disk32):
    res = coulomb_gauge(constant_frame(disk32), 0.7)
    assert res.f_r == 0.0
    assert res.div_residual == 0.0
    assert np.all(res.theta.values == 0.0)


def test_gauge_undoes_a_pure_rotation(disk64):
    theta0 = gen_scalar(SampleSpec(seed=8, amplitude=1.0), disk64)
    fr = rotate_frame(constant_frame(disk64), theta0)
    conn = np.sqrt(np.sum(connection_form(fr).values ** 2) * disk64.h**2)
    res = coulomb_gauge(fr)
    assert res.f_r < 1e-3 * conn
    assert res.div_residual < 1e-9


def test_gauge_divergence_free_and_monotone(disk32):
    fr = gen_frame(SampleSpec(seed=4, amplitude=0.3), disk32)
    radii = [0.3, 0.5, 0.7, 0.9, 1.0]
    diag = gauge_curve(fr, radii)
    assert max(diag.div_residuals) < 1e-9
    assert all(b >= a for a, b in zip(diag.f_values, diag.f_values[1:]))
    # the unrotated frame competes in the minimisation
    assert all(f <= c * (1 + 1e-12) for f, c in zip(diag.f_values, diag.competitor_norms))


def test_gauge_rejects_bad_radius(disk32):
    with pytest.raises(ValueError):
        coulomb_gauge(constant_frame(disk32), 1.5)
    with pytest.raises(ValueError):
        gauge_curve(constant_frame(disk32), [0.5, 0.4])


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 10.0), st.floats(0.0, 5.0))
def test_continuity_roots_solve_the_quadratic(C, eps):
    roots = continuity_roots(C, eps)
    if 4 * C * C * eps * eps > 1:
        assert roots is None
        return
    if roots is None:
        # only at the rounding edge of the discriminant
        assert abs(4 * C * C * eps * eps - 1) < 1e-12
        return
    F1, F2 = roots
    assert 0 <= F1 <= F2
    for x in (F1, F2):
        assert C * x * x - x + C * eps * eps == pytest.approx(0.0, abs=1e-9 * max(1.0, 1 / C))
    # between the roots the inequality x <= C (x^2 + eps^2) fails
    mid = 0.5 * (F1 + F2)
    if F2 - F1 > 1e-9:
        assert mid > C * (mid * mid + eps * eps)


def test_continuity_roots_require_positive_constant():
    with pytest.raises(ValueError):
        continuity_roots(0.0, 0.1)


def test_branch_classification():
    assert classify_branch([0.0, 0.01], 0.02, 5.0) == "lower"
    assert classify_branch([0.0, 6.0], 0.02, 5.0) == "upper"
    assert classify_branch([0.0, 1.0], 0.02, 5.0) == "indeterminate"


def test_lift_constant_frame_is_lower_branch(disk32):
    diag = lifting_pipeline(constant_frame(disk32), 0.75, [0.5, 1.0], C=0.2)
    assert diag.branch == "lower"
    assert diag.epsilon == 0.0
    assert not diag.smallness_violated
    assert diag.csv_rows()[0][:2] == (0.5, 0.0)


def test_lift_flags_smallness_violation(disk32):
    fr = gen_frame(SampleSpec(seed=1, amplitude=0.3), disk32)
    diag = lifting_pipeline(fr, 0.75, [0.5, 1.0], C=100.0)
    assert diag.smallness_violated
    assert diag.F1 is None
    assert diag.to_dict()["smallness_violated"] is True


def test_lift_rejects_order_outside_range(disk32):
    with pytest.raises(ValueError):
        lifting_pipeline(constant_frame(disk32), 0.4, [1.0], C=0.2)


def test_lambda_split_on_stereographic(disk64):
    cd = stereographic_immersion(disk64)
    lam0, lam_h, diag = lambda_decomposition(cd)
    np.testing.assert_allclose(lam0.values + lam_h.values, cd.lam.values, atol=1e-13)
    assert np.all(lam0.values[disk64.edge] == 0.0)
    # the trace of log(2 / (1 + r^2)) is nearly zero on the unit circle
    assert np.max(np.abs(lam_h.values)) < 0.1
    assert diag["laplace_residual"] < 0.05

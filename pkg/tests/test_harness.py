import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge.domain import Grid
from fracgauge.harness import (
    SampleSpec,
    check_dyadic_blocks,
    check_frame_estimate,
    check_harmonic_bound,
    check_operator_bounds,
    check_uwu_equivalence,
    check_wente_constant,
    collapse_experiment,
    fit_constant,
    gen_frame,
    gen_scalar,
    gen_unit_field,
    trial_rng,
    triebel_sum_consistency,
    wente_frequency_sweep,
)
from fracgauge.harness.checks import lagrange_split_check
from fracgauge.harness.dyadic import TorusKernel, block_norms, random_periodic
from fracgauge.harness.kernels import check_kernel_lemmas, kxyz3_sides, sample_triples, xyz1_sides
from fracgauge.harness.operators import CoarseSquare, sobolev_exponent
from fracgauge.harness.suites import observed_orders, run_suite
from fracgauge.io import dumps
from fracgauge.spectral import PeriodicField, lp_project

# ------------------------------------------------------------ generators


def test_spec_validation():
    with pytest.raises(ValueError):
        SampleSpec(smoothness=1.0)
    with pytest.raises(ValueError):
        SampleSpec(seed=-1)
    with pytest.raises(ValueError):
        SampleSpec(count=-1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**63), st.integers(0, 50))
def test_same_spec_gives_identical_bits(seed, trial):
    g = Grid("disk", 1.0, 12)
    spec = SampleSpec(seed=seed)
    a, b = gen_scalar(spec, g, trial), gen_scalar(SampleSpec(seed=seed), g, trial)
    assert a.values.tobytes() == b.values.tobytes()
    fa, fb = gen_frame(spec, g, trial), gen_frame(spec, g, trial)
    assert fa.e1.values.tobytes() == fb.e1.values.tobytes()


def test_trials_and_streams_are_independent():
    spec = SampleSpec(seed=1)
    x = trial_rng(spec, 0, 0).random(4)
    assert not np.array_equal(x, trial_rng(spec, 1, 0).random(4))
    assert not np.array_equal(x, trial_rng(spec, 0, 1).random(4))


def test_zero_amplitude_gives_constants(disk32):
    spec = SampleSpec(seed=3, amplitude=0.0)
    assert np.all(gen_scalar(spec, disk32).values == 0.0)
    np.testing.assert_array_equal(gen_unit_field(spec, disk32).values, np.tile([0, 0, 1.0], (disk32.size, 1)))
    fr = gen_frame(spec, disk32)
    np.testing.assert_allclose(fr.e1.values, np.tile([1.0, 0, 0], (disk32.size, 1)), atol=1e-15)


def test_generated_frames_are_orthonormal(disk32):
    fr = gen_frame(SampleSpec(seed=9, amplitude=1.0), disk32)
    np.testing.assert_allclose(np.sum(fr.e1.values * fr.e2.values, axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(fr.u.values, axis=1), 1.0, atol=1e-12)


def test_scalar_amplitude_sets_rms_scale(disk32):
    vals = np.concatenate([gen_scalar(SampleSpec(seed=5, amplitude=2.0), disk32, k).values for k in range(40)])
    assert 0.7 < np.sqrt(np.mean(vals**2)) / (2.0 / np.sqrt(2)) < 1.4


# ------------------------------------------------------------ reports


def test_fit_constant_split_and_violations():
    lhs = np.array([1.0, 1.0, 2.0, 3.0])
    rhs = np.array([1.0, 1.0, 1.0, 1.0])
    rep = fit_constant("demo", lhs, rhs, margin=1.0)
    # calibration on trials 0 and 2 gives C = 2; trial 3 violates
    assert rep.constant == 2.0
    assert rep.violations == 1 and rep.violation_indices == [3]
    assert rep.max_ratio == 3.0
    assert not rep.passed


def test_fit_constant_zero_denominators():
    rep = fit_constant("demo", [0.0, 1.0, 0.5], [0.0, 0.0, 1.0], constant=1.0)
    assert rep.excluded == 2
    assert rep.violations == 1  # lhs > 0 over a vanishing rhs
    assert rep.max_ratio == float("inf")
    assert np.isnan(rep.ratios[0])


def test_fit_constant_two_sided():
    rep = fit_constant("demo", [2.0, 0.5, 1.0], [1.0, 1.0, 1.0], constant=2.0, two_sided=True)
    assert rep.violations == 0 and rep.max_ratio == 2.0
    rep = fit_constant("demo", [3.0], [1.0], constant=2.0, two_sided=True)
    assert rep.violations == 1


def test_fit_constant_shape_mismatch():
    with pytest.raises(ValueError):
        fit_constant("demo", [1.0], [1.0, 2.0])


def test_report_serialisation_summarises_long_ratio_lists():
    rep = fit_constant("demo", np.ones(6000), np.ones(6000))
    d = rep.to_dict()
    assert d["ratios"]["count"] == 6000
    assert dumps(d) == dumps(rep.to_dict())


# ------------------------------------------------------------ kernels


def test_kernel_sides_trivial_configurations():
    # |x - z| = |y - z| makes the left side of the first lemma vanish
    x = np.array([[1.0, 0.0]])
    y = np.array([[0.0, 1.0]])
    z = np.array([[0.0, 0.0]])
    lhs, rhs = xyz1_sides(x, y, z, np.array([0.5]), np.array([0.5]))
    assert lhs[0] == 0.0 and rhs[0] > 0
    lhs3, rhs3 = kxyz3_sides(x, y, z, np.array([0.5]))
    # here the second lemma reduces to |e1 - e2| <= C |x-y|^t
    assert lhs3[0] == pytest.approx(np.sqrt(2)) and rhs3[0] == pytest.approx(2**0.25)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2**31))
def test_kernel_sides_scale_homogeneously(lam, seed):
    rng = np.random.default_rng(seed)
    x, y, z = sample_triples(rng, 16)
    t = np.full(16, 0.3)
    l1, r1 = xyz1_sides(x, y, z, t, t + 0.4)
    l2, r2 = xyz1_sides(lam * x, lam * y, lam * z, t, t + 0.4)
    np.testing.assert_allclose(l2, l1 / lam, rtol=1e-9)
    np.testing.assert_allclose(r2, r1 / lam, rtol=1e-9)
    k1, s1 = kxyz3_sides(x, y, z, t)
    k2, s2 = kxyz3_sides(lam * x, lam * y, lam * z, t)
    np.testing.assert_allclose(k2, k1 / lam, rtol=1e-9)
    np.testing.assert_allclose(s2, s1 / lam, rtol=1e-9)


def test_triples_respect_separation():
    x, y, z = sample_triples(np.random.default_rng(0), 5000)
    assert np.all(np.abs(x) <= 2) and x.shape == (5000, 2)
    assert np.min(np.hypot(*(x - y).T)) > 1e-6


def test_kernel_lemma_check_requires_million_triples():
    with pytest.raises(ValueError):
        check_kernel_lemmas(1000)


# ------------------------------------------------------------ equivalence, frames, wente


def test_lagrange_split_holds_on_unit_vectors(rng):
    u = rng.standard_normal((500, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    rep = lagrange_split_check(u, rng, 100000)
    assert rep.violations == 0


def test_uwu_constant_fields_are_trivially_consistent():
    rep = check_uwu_equivalence(SampleSpec(seed=1, amplitude=0.0, count=4), 0.75, Grid("disk", 1.0, 12), lagrange_pairs=1000)
    assert rep.excluded == 4 and rep.violations == 0


def test_uwu_small_run(disk32):
    rep = check_uwu_equivalence(SampleSpec(seed=2, count=8), 0.75, disk32, lagrange_pairs=10000)
    assert rep.passed and rep.two_sided
    assert 1.0 <= rep.constant < 3.0


def test_frame_estimate_constant_frames_vanish():
    rep = check_frame_estimate(SampleSpec(seed=1, amplitude=0.0, count=2), 0.75, Grid("disk", 1.0, 12))
    assert np.all(rep.lhs == 0.0) and rep.violations == 0


def test_wente_constant_small_run(disk32):
    rep = check_wente_constant(SampleSpec(seed=3, count=10), (0.75,), disk32, sweep=False)
    assert np.isfinite(rep.max_ratio) and rep.violations == 0


def test_wente_sweep_with_oscillating_pair(disk32):
    sw = wente_frequency_sweep(0.75, disk32, points=5)
    assert len(sw["k"]) == 5
    assert sw["k"][-1] <= np.pi / disk32.h / 4 + 1e-12


# ------------------------------------------------------------ operators and blocks


def test_sobolev_exponent_relation():
    q = sobolev_exponent(0.6, 0.75, 2.0)
    assert 0.6 - 2 / q == pytest.approx(0.75 - 2 / 2.0)


def test_coarse_square_caps_size():
    with pytest.raises(ValueError):
        CoarseSquare(64)
    with pytest.raises(ValueError):
        CoarseSquare(12)


def test_operators_vanish_on_zero_fields():
    rep = check_operator_bounds(SampleSpec(seed=1, amplitude=0.0, count=2), n=8)
    for sub in rep.subreports().values():
        assert np.all(sub.lhs == 0.0)
        assert sub.violations == 0


def test_zero_field_has_zero_blocks():
    kern = TorusKernel(2 * np.pi, 32, 0.75)
    zero = PeriodicField(2 * np.pi, 32, np.zeros((32, 32)))
    _, I = block_norms([zero], kern, 0.6, 2.0, np.random.default_rng(0))
    assert np.all(I == 0.0)


def test_block_sampling_is_unbiased_in_expectation():
    kern = TorusKernel(2 * np.pi, 32, 0.75)
    f = random_periodic(SampleSpec(seed=4), 2 * np.pi, 32, 0)
    band = [lp_project(f, 1)]
    _, exact = block_norms(band, kern, 0.6, 2.0, max_offsets=None)
    draws = [block_norms(band, kern, 0.6, 2.0, np.random.default_rng(k), max_offsets=8)[1] ** 2 for k in range(30)]
    np.testing.assert_allclose(np.mean(draws, axis=0), exact**2, rtol=0.15)


def test_triebel_sum_at_least_full_sum():
    out = triebel_sum_consistency(SampleSpec(seed=5, count=2), n=16)
    assert out["min_ratio"] >= 1.0 - 1e-12
    assert out["max_ratio"] < 3.0


def test_dyadic_blocks_rejects_bad_orders():
    with pytest.raises(ValueError):
        check_dyadic_blocks(SampleSpec(count=1), 0.8, 0.75)


# ------------------------------------------------------------ harmonic, collapse, suites


def test_harmonic_bound_small_run():
    rep = check_harmonic_bound(SampleSpec(seed=4, count=60), 0.5, Grid("disk", 1.0, 32))
    assert rep.extra["violations_all_trials"] == 0
    assert rep.extra["C1"] > 0


def test_collapse_scaling_diagnostics():
    rep = collapse_experiment([1.0, 0.5, 0.25], n=32)
    assert rep.energy_spread <= 1e-10
    assert rep.halving_error <= 1e-10
    assert rep.lam_shift_error <= 1e-12
    assert rep.neg_lam_h == sorted(rep.neg_lam_h)


def test_observed_orders():
    assert observed_orders([32, 64, 128], [4.0, 1.0, 0.25]) == pytest.approx([2.0, 2.0])


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


def test_suite_reports_are_byte_identical():
    a = dumps(run_suite("uwu", seed=3, trials=4))
    b = dumps(run_suite("uwu", seed=3, trials=4))
    assert a == b
    assert a != dumps(run_suite("uwu", seed=4, trials=4))

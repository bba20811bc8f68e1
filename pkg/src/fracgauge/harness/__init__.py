"""Seeded random samples and empirical checks of the estimates."""
from .checks import (
    CollapseReport,
    calibrate_constants,
    check_extension_constant,
    check_frame_estimate,
    check_harmonic_bound,
    check_lifting,
    check_uwu_equivalence,
    check_wente_constant,
    collapse_experiment,
    wente_frequency_sweep,
)
from .dyadic import check_dyadic_blocks, triebel_sum_consistency
from .generators import SampleSpec, gen_frame, gen_scalar, gen_unit_field, trial_rng
from .kernels import check_kernel_lemmas
from .operators import check_operator_bounds
from .reports import ConstantReport, fit_constant
from .suites import DEFAULT_TRIALS, SUITES, run_suite

__all__ = [
    "SampleSpec",
    "ConstantReport",
    "CollapseReport",
    "fit_constant",
    "trial_rng",
    "gen_scalar",
    "gen_unit_field",
    "gen_frame",
    "check_uwu_equivalence",
    "check_frame_estimate",
    "check_wente_constant",
    "wente_frequency_sweep",
    "check_kernel_lemmas",
    "check_operator_bounds",
    "check_dyadic_blocks",
    "triebel_sum_consistency",
    "check_harmonic_bound",
    "check_extension_constant",
    "check_lifting",
    "calibrate_constants",
    "collapse_experiment",
    "SUITES",
    "DEFAULT_TRIALS",
    "run_suite",
]

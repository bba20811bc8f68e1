"""Seeded random fields and frames.

Every trial draws from its own ``PCG64`` stream seeded by
``SeedSequence([seed, trial, stream])``, so trials can run in any order (or in
parallel) and still produce identical bits.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..domain import Grid, ScalarField, VecField3
from ..frames import Frame

__all__ = ["SampleSpec", "trial_rng", "gen_scalar", "gen_unit_field", "gen_frame", "rotation_matrices"]


@dataclass(frozen=True)
class SampleSpec:
    """Recipe for a reproducible stream of random samples.

    Attributes
    ----------
    seed : int
        Non-negative 64-bit seed.
    smoothness : float
        Fourier coefficients decay like ``|k|**-smoothness``; must exceed 1.
    amplitude : float
        RMS size of each random scalar field.
    count : int
        Number of trials.
    kmax : int
        Largest wave number per axis.
    """

    seed: int = 0
    smoothness: float = 3.0
    amplitude: float = 0.1
    count: int = 1
    kmax: int = 8

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64) or int(self.seed) != self.seed:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if not self.smoothness > 1.0:
            raise ValueError("smoothness must exceed 1")
        if self.count < 0 or self.kmax < 1:
            raise ValueError("count must be >= 0 and kmax >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def trial_rng(spec: SampleSpec, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(spec.seed), int(trial), int(stream)])))


def _wave_numbers(kmax: int) -> np.ndarray:
    k = np.arange(-kmax, kmax + 1)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    K = np.column_stack([KX.ravel(), KY.ravel()])
    half = (K[:, 0] > 0) | ((K[:, 0] == 0) & (K[:, 1] > 0))
    return K[half]


def _random_series(spec: SampleSpec, grid: Grid, rng: np.random.Generator) -> np.ndarray:
    K = _wave_numbers(spec.kmax)
    weight = np.hypot(K[:, 0], K[:, 1]) ** (-spec.smoothness)
    a = rng.standard_normal(K.shape[0]) * weight
    b = rng.standard_normal(K.shape[0]) * weight
    # RMS of the series is amplitude / sqrt(2) in expectation
    norm = np.sqrt(np.sum(weight**2))
    X = (grid.points - np.asarray(grid.center)) / grid.mask_radius
    phase = X @ K.T.astype(float)
    series = np.cos(phase) @ a + np.sin(phase) @ b
    return spec.amplitude * series / norm


def gen_scalar(spec: SampleSpec, grid: Grid, trial: int = 0) -> ScalarField:
    """Random trigonometric series with ``|k|**-smoothness`` decay."""
    return ScalarField(grid, _random_series(spec, grid, trial_rng(spec, trial, 0)))


def gen_unit_field(spec: SampleSpec, grid: Grid, trial: int = 0) -> VecField3:
    """``(e3 + w) / |e3 + w|`` for a random smooth ``R^3`` perturbation ``w``."""
    rng = trial_rng(spec, trial, 1)
    w = np.column_stack([_random_series(spec, grid, rng) for _ in range(3)])
    w[:, 2] += 1.0
    return VecField3(grid, w / np.linalg.norm(w, axis=1)[:, None])


def rotation_matrices(vec: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices ``exp([v]_x)`` for rows ``v`` of ``vec``."""
    v = np.asarray(vec, dtype=float)
    t = np.linalg.norm(v, axis=1)
    Kx = np.zeros((v.shape[0], 3, 3))
    Kx[:, 0, 1], Kx[:, 0, 2] = -v[:, 2], v[:, 1]
    Kx[:, 1, 0], Kx[:, 1, 2] = v[:, 2], -v[:, 0]
    Kx[:, 2, 0], Kx[:, 2, 1] = -v[:, 1], v[:, 0]
    a = np.sinc(t / np.pi)
    b = 0.5 * np.sinc(t / (2 * np.pi)) ** 2
    return np.eye(3) + a[:, None, None] * Kx + b[:, None, None] * (Kx @ Kx)


def gen_frame(spec: SampleSpec, grid: Grid, trial: int = 0) -> Frame:
    """Standard frame rotated at each node about the axis ``(alpha, beta, 0)``.

    ``alpha`` and ``beta`` are independent random scalar series; the
    rotation angle is ``|(alpha, beta)|``.
    """
    rng = trial_rng(spec, trial, 2)
    alpha = _random_series(spec, grid, rng)
    beta = _random_series(spec, grid, rng)
    R = rotation_matrices(np.column_stack([alpha, beta, np.zeros_like(alpha)]))
    e1 = R[:, :, 0]
    e2 = R[:, :, 1]
    # re-orthonormalise against rounding
    e1 = e1 / np.linalg.norm(e1, axis=1)[:, None]
    e2 = e2 - np.sum(e1 * e2, axis=1)[:, None] * e1
    e2 = e2 / np.linalg.norm(e2, axis=1)[:, None]
    return Frame.from_arrays(grid, e1, e2)

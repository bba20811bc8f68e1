"""Pointwise checks of two kernel inequalities in the plane.

``xyz1``::

    ||x-z|**-1 - |y-z|**-1|
        <= C ( |x-y|**(1-t1) ||x-z|**(t1-2) - |y-z|**(t1-2)|
               + |x-y|**(1-t2) min(|x-z|, |y-z|)**(t2-2) )

``kxyz3`` (with ``m = 2``)::

    |(x-z)/|x-z|**2 - (y-z)/|y-z|**2|
        <= C ( ||x-z|**-1 - |y-z|**-1|
               + |x-y|**t min(|x-z|, |y-z|)**(-1-t) )

Both sides of each inequality scale like ``|x - y|**-1``.
"""
from __future__ import annotations

import numpy as np

from .generators import SampleSpec, trial_rng
from .reports import ConstantReport, fit_constant

__all__ = ["T_LATTICE", "sample_triples", "xyz1_sides", "kxyz3_sides", "check_kernel_lemmas", "MIN_SEPARATION", "BOX"]

T_LATTICE = np.round(np.arange(1, 10) * 0.1, 10)
MIN_SEPARATION = 1e-6
BOX = 2.0
MIN_TRIALS = 10**6


def sample_triples(rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``m`` triples uniform on ``[-2, 2]**2`` with pairwise distances above ``MIN_SEPARATION``."""
    out = [np.empty((0, 2))] * 3
    need = m
    while need > 0:
        P = rng.uniform(-BOX, BOX, size=(3, need + need // 8 + 16, 2))
        x, y, z = P
        ok = (
            (np.hypot(*(x - y).T) > MIN_SEPARATION)
            & (np.hypot(*(x - z).T) > MIN_SEPARATION)
            & (np.hypot(*(y - z).T) > MIN_SEPARATION)
        )
        x, y, z = x[ok][:need], y[ok][:need], z[ok][:need]
        out = [np.vstack([a, b]) for a, b in zip(out, (x, y, z))]
        need = m - out[0].shape[0]
    return out[0], out[1], out[2]


def xyz1_sides(x, y, z, t1, t2):
    a = np.hypot(*(x - z).T)
    b = np.hypot(*(y - z).T)
    d = np.hypot(*(x - y).T)
    lhs = np.abs(1.0 / a - 1.0 / b)
    rhs = d ** (1.0 - t1) * np.abs(a ** (t1 - 2.0) - b ** (t1 - 2.0)) + d ** (1.0 - t2) * np.minimum(a, b) ** (t2 - 2.0)
    return lhs, rhs


def kxyz3_sides(x, y, z, t):
    u = x - z
    v = y - z
    a = np.hypot(*u.T)
    b = np.hypot(*v.T)
    d = np.hypot(*(x - y).T)
    diff = u / (a**2)[:, None] - v / (b**2)[:, None]
    lhs = np.hypot(*diff.T)
    rhs = np.abs(1.0 / a - 1.0 / b) + d**t * np.minimum(a, b) ** (-1.0 - t)
    return lhs, rhs


def check_kernel_lemmas(trials: int = MIN_TRIALS, seed: int = 0) -> ConstantReport:
    """Sample ``trials`` triples per lemma, fit ``C`` on even samples, validate on odd.

    ``t`` parameters are drawn from ``{0.1, ..., 0.9}``.  The returned
    report is ``xyz1``; ``extra['subreports']`` holds both lemmas.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} triples")
    spec = SampleSpec(seed=seed, count=trials)
    rng = trial_rng(spec, 0, stream=21)
    x, y, z = sample_triples(rng, trials)
    t1 = rng.choice(T_LATTICE, size=trials)
    t2 = rng.choice(T_LATTICE, size=trials)
    l1, r1 = xyz1_sides(x, y, z, t1, t2)
    rng = trial_rng(spec, 1, stream=21)
    x, y, z = sample_triples(rng, trials)
    t = rng.choice(T_LATTICE, size=trials)
    l3, r3 = kxyz3_sides(x, y, z, t)
    config = {"trials": trials, "seed": seed, "box": BOX, "min_separation": MIN_SEPARATION, "t_lattice": T_LATTICE.tolist()}
    a = fit_constant("xyz1", l1, r1, config=config)
    b = fit_constant("kxyz3", l3, r3, config=config)
    a.extra["subreports"] = {"xyz1": a, "kxyz3": b}
    return a

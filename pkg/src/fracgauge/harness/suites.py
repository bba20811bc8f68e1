"""Named verification suites: each returns a JSON-ready dict with a ``passed`` flag.

Suites never read the clock, so identical arguments give identical
reports.  Runtimes are measured by the callers.
"""
from __future__ import annotations

import math

import numpy as np

from ..domain import Grid, gradient, l2_norm, restrict
from ..elliptic import DEFAULT_TOL
from ..frames import connection_form, coulomb_gauge, perp_connection_defect, rotate_frame, stereographic_immersion
from ..sobolev import bbm_limit
from ..spectral import (
    PeriodicField,
    frac_laplacian,
    lp_decompose,
    riesz_potential,
    singular_integral_frac_laplacian,
)
from .checks import (
    calibrate_constants,
    check_extension_constant,
    check_frame_estimate,
    check_harmonic_bound,
    check_lifting,
    check_uwu_equivalence,
    check_wente_constant,
    collapse_experiment,
)
from .dyadic import check_dyadic_blocks, triebel_sum_consistency
from .generators import SampleSpec, gen_frame, gen_scalar, gen_unit_field
from .kernels import check_kernel_lemmas
from .operators import check_operator_bounds

__all__ = ["SUITES", "DEFAULT_TRIALS", "run_suite", "observed_orders"]

DEFAULT_TRIALS = {
    "conformal": 0,
    "rotation": 20,
    "gauge": 3,
    "lifting": 50,
    "wente": 100,
    "uwu": 50,
    "frame": 50,
    "bbm": 5,
    "spectral": 10,
    "kernels": 10**6,
    "harmonic": 1000,
    "operators": 20,
    "dyadic": 4,
    "collapse": 0,
    "extension": 10,
    "constants": 20,
}


def observed_orders(ns, errors) -> list:
    """``log2(e_k / e_{k+1})`` for grids that double in size."""
    out = []
    for (n0, e0), (n1, e1) in zip(zip(ns, errors), zip(ns[1:], errors[1:])):
        out.append(math.log(e0 / e1) / math.log(n1 / n0) if e0 > 0 and e1 > 0 else float("inf"))
    return out


def suite_conformal(spec: SampleSpec, ns=(32, 64, 128)) -> dict:
    errs, hs = [], []
    for n in ns:
        g = Grid("disk", 1.0, n)
        errs.append(perp_connection_defect(stereographic_immersion(g), depth=2))
        hs.append(g.h)
    orders = observed_orders(list(ns), errs)
    consts = [e / h**2 for e, h in zip(errs, hs)]
    return {
        "n": list(ns),
        "max_error": errs,
        "error_over_h2": consts,
        "orders": orders,
        "passed": bool(min(orders) >= 1.8),
    }


def suite_rotation(spec: SampleSpec, ns=(32, 64)) -> dict:
    """``connection(rotate(e, theta)) - connection(e) - grad(theta)`` for random theta."""
    table = {}
    for n in ns:
        g = Grid("disk", 1.0, n)
        fr = stereographic_immersion(g).frame
        base = connection_form(fr).values
        errs = []
        for trial in range(spec.count):
            theta = gen_scalar(spec, g, trial)
            rot = connection_form(rotate_frame(fr, theta)).values
            errs.append(float(np.max(np.abs(rot - base - gradient(theta).values))))
        table[n] = errs
    n0, n1 = ns[0], ns[-1]
    h0, h1 = 2.0 / n0, 2.0 / n1
    C = max(max(e) / h0**2 for e in [table[n0]]) if spec.count else 0.0
    orders = [math.log(a / b) / math.log(n1 / n0) for a, b in zip(table[n0], table[n1]) if a > 0 and b > 0]
    fine_ok = all(e <= 1.5 * C * h1**2 for e in table[n1])
    return {
        "n": list(ns),
        "max_error": {str(k): v for k, v in table.items()},
        "C": C,
        "min_order": min(orders) if orders else None,
        "passed": bool(fine_ok and (not orders or min(orders) >= 1.8)),
    }


def suite_gauge(spec: SampleSpec, n: int = 64, radii=None, tol: float = DEFAULT_TOL) -> dict:
    """Gauge residuals, monotonicity of ``f(r)`` and the zero-rotation competitor bound."""
    g = Grid("disk", 1.0, n)
    radii = list(radii) if radii is not None else [0.1 * k for k in range(1, 11)]
    fixtures = {"stereographic": stereographic_immersion(g).frame}
    for trial in range(spec.count):
        fixtures[f"random-{trial}"] = gen_frame(spec, g, trial)
    out, ok = {}, True
    for name, fr in fixtures.items():
        conn = connection_form(fr)
        f, div, comp = [], [], []
        for r in radii:
            res = coulomb_gauge(fr, r, tol=tol)
            f.append(res.f_r)
            div.append(res.div_residual)
            comp.append(l2_norm(restrict(conn, r)))
        mono = all(b >= a - 2 * tol for a, b in zip(f, f[1:]))
        divok = max(div) <= 10 * tol
        compok = f[0] <= comp[0] * (1 + 1e-12)
        ok = ok and mono and divok and compok
        out[name] = {
            "f": f,
            "div_residual": div,
            "competitor": comp,
            "monotone": mono,
            "div_ok": divok,
            "competitor_ok": compok,
        }
    return {"radii": radii, "tol": tol, "fixtures": out, "passed": bool(ok)}


def suite_lifting(spec: SampleSpec, constants: dict | None = None, n: int = 64, s: float = 0.75) -> dict:
    g = Grid("disk", 1.0, n)
    if constants is None:
        constants = calibrate_constants(SampleSpec(seed=spec.seed + 1, count=20), s, g)
    rep = check_lifting(spec, constants["C"], s, g)
    return {
        "constants": constants,
        "report": rep,
        "passed": bool(rep.extra["lower_fraction"] >= 0.95 and rep.violations == 0 and np.isfinite(rep.max_ratio)),
    }


def suite_wente(spec: SampleSpec) -> dict:
    rep = check_wente_constant(spec, (0.6, 0.75, 0.9))
    sweep_ok = all(sw["non_increasing"] for sw in rep.extra["sweep"])
    return {
        "report": rep,
        "max_ratio": rep.max_ratio,
        "passed": bool(np.isfinite(rep.max_ratio) and sweep_ok and rep.extra["equal_pairs"]["below_threshold"]),
    }


def suite_uwu(spec: SampleSpec) -> dict:
    rep = check_uwu_equivalence(spec, 0.75)
    subs = rep.subreports()
    return {
        "report": rep,
        "C": rep.constant,
        "passed": bool(rep.violations == 0 and subs["trivial"].violations == 0 and subs["lagrange-split"].violations == 0),
    }


def suite_frame(spec: SampleSpec) -> dict:
    rep = check_frame_estimate(spec, 0.75)
    return {"report": rep, "passed": bool(rep.all_passed)}


def suite_bbm(spec: SampleSpec, ns=(64, 128), s_list=(0.9, 0.93, 0.96, 0.98)) -> dict:
    consts, rows = [], []
    for n in ns:
        g = Grid("disk", 1.0, n)
        for trial in range(spec.count):
            rep = bbm_limit(gen_unit_field(spec, g, trial), s_list)
            consts.append(rep.constant)
            rows.append({"n": n, "trial": trial, "constant": rep.constant, "limit": rep.limit, "W12": rep.gradient_energy})
    c = np.array([x for x in consts if x is not None], dtype=float)
    spread = float((c.max() - c.min()) / c.mean()) if c.size else float("inf")
    return {
        "fits": rows,
        "mean_constant": float(c.mean()) if c.size else None,
        "spread": spread,
        "passed": bool(c.size == len(consts) and spread <= 0.15),
    }


def _bump(pf_side: float, n: int, width: float) -> PeriodicField:
    pf = PeriodicField(pf_side, n, np.zeros((n, n)))
    r = np.hypot(*pf.grid.points.T) / width
    v = np.zeros_like(r)
    inside = r < 1
    v[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return pf.with_values(v.reshape(n, n))


def suite_spectral(spec: SampleSpec, n: int = 256, side: float = 32.0, width: float = 1.0) -> dict:
    """LP reconstruction, multiplier against quadrature, and the inverse pair."""
    from .dyadic import random_periodic

    recon = []
    for trial in range(spec.count):
        f = random_periodic(SampleSpec(seed=spec.seed, smoothness=spec.smoothness, amplitude=1.0), 2 * np.pi, 64, trial)
        # band-limit well below Nyquist
        F = np.fft.fft2(f.values)
        k = np.fft.fftfreq(64, d=1.0 / 64)
        K1, K2 = np.meshgrid(k, k, indexing="ij")
        F[np.hypot(K1, K2) > 12] = 0.0
        f = f.with_values(np.fft.ifft2(F).real)
        dec = lp_decompose(f)
        z = f.values - f.values.mean()
        recon.append(float(np.linalg.norm(dec.reconstruct() - z) / np.linalg.norm(z)))
    bump = _bump(side, n, width)
    a = frac_laplacian(bump, 0.5).values
    b = singular_integral_frac_laplacian(bump, 0.5).values
    quad = float(np.linalg.norm(a - b) / np.linalg.norm(a))
    inv = []
    for trial in range(spec.count):
        f = random_periodic(spec, 2 * np.pi, 64, trial)
        for s in (0.5, 1.0, 1.5):
            back = riesz_potential(frac_laplacian(f, s), s).values
            inv.append(float(np.max(np.abs(back - (f.values - f.values.mean())))))
    return {
        "lp_reconstruction_error": max(recon) if recon else 0.0,
        "multiplier_vs_quadrature": quad,
        "inverse_pair_error": max(inv) if inv else 0.0,
        "passed": bool((max(recon) if recon else 0) < 1e-6 and quad <= 0.01 and (max(inv) if inv else 0) <= 1e-9),
    }


def suite_kernels(spec: SampleSpec) -> dict:
    rep = check_kernel_lemmas(max(spec.count, 10**6), seed=spec.seed)
    return {"report": rep, "passed": bool(rep.all_passed)}


def suite_harmonic(spec: SampleSpec) -> dict:
    rep = check_harmonic_bound(spec, 0.5)
    return {"report": rep, "passed": bool(rep.violations == 0 and rep.extra["violations_all_trials"] == 0)}


def suite_operators(spec: SampleSpec) -> dict:
    rep = check_operator_bounds(spec, 0.6, 0.75)
    finite = all(np.isfinite(r.max_ratio) for r in rep.subreports().values())
    return {"report": rep, "passed": bool(finite and rep.all_passed)}


def suite_dyadic(spec: SampleSpec) -> dict:
    rep = check_dyadic_blocks(spec, 0.6, 0.75)
    cons = triebel_sum_consistency(SampleSpec(seed=spec.seed, count=3))
    return {
        "report": rep,
        "triebel_sum": cons,
        "passed": bool(rep.extra["rates_pass"] and rep.violations == 0),
    }


def suite_collapse(spec: SampleSpec) -> dict:
    rep = collapse_experiment()
    return {"report": rep, "passed": rep.passed}


def suite_extension(spec: SampleSpec) -> dict:
    rep = check_extension_constant(spec, 0.75)
    return {"report": rep, "passed": bool(rep.passed)}


def suite_constants(spec: SampleSpec) -> dict:
    c = calibrate_constants(spec, 0.75, Grid("disk", 1.0, 64))
    return {"constants": c, "passed": bool(c["wente_violations"] == 0 and c["frame_violations"] == 0)}


SUITES = {
    "conformal": suite_conformal,
    "rotation": suite_rotation,
    "gauge": suite_gauge,
    "lifting": suite_lifting,
    "wente": suite_wente,
    "uwu": suite_uwu,
    "frame": suite_frame,
    "bbm": suite_bbm,
    "spectral": suite_spectral,
    "kernels": suite_kernels,
    "harmonic": suite_harmonic,
    "operators": suite_operators,
    "dyadic": suite_dyadic,
    "collapse": suite_collapse,
    "extension": suite_extension,
    "constants": suite_constants,
}


def run_suite(name: str, seed: int = 0, trials: int | None = None, **kwargs) -> dict:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    count = DEFAULT_TRIALS[name] if trials is None else int(trials)
    spec = SampleSpec(seed=seed, count=count)
    out = SUITES[name](spec, **kwargs)
    return {"suite": name, "spec": spec.to_dict(), **out}

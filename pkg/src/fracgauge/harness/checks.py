"""Constant estimation for the field-level inequalities on the unit disk."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domain import Grid, ScalarField, l2_norm
from ..elliptic import DEFAULT_TOL, gradient_l2, harmonic_extension, harmonic_sup_bound_check, wente_solve
from ..frames import connection_form, lambda_decomposition, lifting_pipeline, stereographic_immersion
from ..sobolev import frac_normal_energy, gagliardo_seminorm, inversion_extension
from .generators import SampleSpec, gen_frame, gen_scalar, gen_unit_field, trial_rng
from .reports import DENOM_FLOOR, ConstantReport, fit_constant

__all__ = [
    "default_grid",
    "check_uwu_equivalence",
    "lagrange_split_check",
    "check_frame_estimate",
    "check_wente_constant",
    "wente_frequency_sweep",
    "check_harmonic_bound",
    "poisson_kernel_field",
    "CollapseReport",
    "collapse_experiment",
    "check_extension_constant",
    "calibrate_constants",
    "check_lifting",
]


def default_grid(n: int = 32) -> Grid:
    return Grid("disk", 1.0, n)


def _seminorm(f, s: float) -> float:
    return gagliardo_seminorm(f, s, 2.0 / s).value


# ------------------------------------------------------------ equivalence


def lagrange_split_check(u_values: np.ndarray, rng: np.random.Generator, pairs: int) -> ConstantReport:
    """``|u - v| <= |u ^ v| + |u - v|**2 / 2`` at random node pairs (constant 1, no fit)."""
    m = u_values.shape[0]
    i = rng.integers(0, m, size=pairs)
    j = rng.integers(0, m, size=pairs)
    a, b = u_values[i], u_values[j]
    d = np.linalg.norm(a - b, axis=1)
    w = np.linalg.norm(np.cross(a, b), axis=1)
    # rounding slack: both sides are O(1) sums of products of unit vectors
    return fit_constant("lagrange-split", d, w + 0.5 * d * d + 1e-13, constant=1.0)


def check_uwu_equivalence(
    spec: SampleSpec, s: float = 0.75, grid: Grid | None = None, lagrange_pairs: int = 10**6
) -> ConstantReport:
    """Two-sided ratio ``[u]_{W^{s,2/s}} / W_{s,2/s}(u)**(s/2)`` over random unit fields.

    Sub-reports: ``trivial`` checks ``W**(s/2) <= [u]`` with constant 1 on
    every trial; ``lagrange-split`` checks the pointwise inequality on
    ``lagrange_pairs`` node pairs spread over the trials.
    """
    if not (0.5 < s < 1.0):
        raise ValueError("s must lie in (1/2, 1)")
    g = grid or default_grid()
    p = 2.0 / s
    semi, normal = [], []
    lag_l, lag_r = [], []
    per = lagrange_pairs // max(spec.count, 1) + 1 if spec.count else 0
    for trial in range(spec.count):
        u = gen_unit_field(spec, g, trial)
        semi.append(_seminorm(u, s))
        normal.append(frac_normal_energy(u, s, p).value ** (1.0 / p))
        sub = lagrange_split_check(u.values, trial_rng(spec, trial, stream=5), per)
        lag_l.append(sub.lhs)
        lag_r.append(sub.rhs)
    config = {"s": s, "p": p, "grid": g.descriptor(), "spec": spec.to_dict()}
    main = fit_constant("uwu-equivalence", semi, normal, two_sided=True, config=config)
    trivial = fit_constant("uwu-trivial", normal, semi, constant=1.0, config=config)
    if lag_l:
        ll = np.concatenate(lag_l)[:lagrange_pairs]
        rr = np.concatenate(lag_r)[:lagrange_pairs]
    else:
        ll = rr = np.zeros(0)
    lag = fit_constant("lagrange-split", ll, rr, constant=1.0, config={"pairs": int(ll.size)})
    main.extra["subreports"] = {"equivalence": main, "trivial": trivial, "lagrange-split": lag}
    return main


# ------------------------------------------------------------ frame estimate


def check_frame_estimate(
    spec: SampleSpec, s: float = 0.75, grid: Grid | None = None, epsilon: float = 0.5
) -> ConstantReport:
    """``[e1] + [e2] <= C (||<e1, grad e2>||_2 + [u] + [u]([e1] + [e2]))`` over random frames.

    The sub-report ``simplified`` drops the product term and keeps only
    trials with ``[u] <= epsilon``.
    """
    if not (0.5 < s <= 1.0):
        raise ValueError("s must lie in (1/2, 1]")
    g = grid or default_grid()
    lhs, full, simple, small = [], [], [], []
    us = []
    for trial in range(spec.count):
        fr = gen_frame(spec, g, trial)
        e = _seminorm(fr.e1, s) + _seminorm(fr.e2, s)
        uu = _seminorm(fr.u, s)
        om = l2_norm(connection_form(fr))
        lhs.append(e)
        full.append(om + uu + uu * e)
        simple.append(om + uu)
        small.append(uu <= epsilon)
        us.append(uu)
    config = {"s": s, "grid": g.descriptor(), "spec": spec.to_dict(), "epsilon": epsilon}
    main = fit_constant("frame-estimate", lhs, full, config=config)
    sel = np.asarray(small, dtype=bool)
    simp = fit_constant(
        "frame-estimate-simplified",
        np.asarray(lhs)[sel],
        np.asarray(simple)[sel],
        config=config,
        extra={"trials_used": int(sel.sum()), "u_seminorms": us},
    )
    main.extra["subreports"] = {"full": main, "simplified": simp}
    return main


# ------------------------------------------------------------ Wente


def wente_frequency_sweep(
    s: float, grid: Grid | None = None, points: int = 8, tol: float = DEFAULT_TOL
) -> dict:
    """Ratio for ``a = sin(k x)``, ``b = sin(k y)`` with ``k`` up to a quarter of Nyquist.

    The trend is the least-squares slope of ``log ratio`` against ``log k``.
    """
    g = grid or default_grid()
    k_max = np.pi / g.h / 4.0
    ks = np.geomspace(1.0, k_max, points)
    X, Y = g.points[:, 0], g.points[:, 1]
    ratios = []
    for k in ks:
        a = ScalarField(g, np.sin(k * X))
        b = ScalarField(g, np.sin(k * Y))
        lam = wente_solve(a, b, tol=tol).solution
        ratios.append(gradient_l2(lam) / (_seminorm(a, s) * _seminorm(b, s)))
    slope = float(np.polyfit(np.log(ks), np.log(ratios), 1)[0])
    return {
        "s": s,
        "k": ks.tolist(),
        "ratios": ratios,
        "loglog_slope": slope,
        "non_increasing": bool(slope <= 0.0),
        "k_max": float(k_max),
    }


def check_wente_constant(
    spec: SampleSpec, s_list=(0.6, 0.75, 0.9), grid: Grid | None = None, tol: float = DEFAULT_TOL, sweep: bool = True
) -> ConstantReport:
    """``||grad lam0||_2 <= C [a][b]`` for ``Laplace lam0 = a_1 b_2 - a_2 b_1``, zero on the edge.

    The headline report pools every ``(trial, s)`` pair (trial-major, so
    the even/odd split is balanced); ``extra['subreports']`` has one report
    per ``s``.  ``extra['sweep']`` holds the frequency sweeps and
    ``extra['equal_pairs']`` the ``a = b`` fixtures against the noise
    threshold ``64 eps * max(lhs)``.
    """
    s_list = [float(s) for s in s_list]
    if any(not (0.5 < s <= 1.0) for s in s_list):
        raise ValueError("every s must lie in (1/2, 1]")
    g = grid or default_grid()
    per_s = {s: ([], []) for s in s_list}
    all_l, all_r, equal = [], [], []
    for trial in range(spec.count):
        a = gen_scalar(spec, g, 2 * trial)
        b = gen_scalar(spec, g, 2 * trial + 1)
        lam = wente_solve(a, b, tol=tol).solution
        val = gradient_l2(lam)
        same = wente_solve(a, a, tol=tol).solution
        equal.append(gradient_l2(same))
        for s in s_list:
            r = _seminorm(a, s) * _seminorm(b, s)
            per_s[s][0].append(val)
            per_s[s][1].append(r)
            all_l.append(val)
            all_r.append(r)
    config = {"s_list": s_list, "grid": g.descriptor(), "spec": spec.to_dict(), "tol": tol}
    main = fit_constant("wente", all_l, all_r, config=config)
    subs = {"pooled": main}
    for s in s_list:
        subs[f"s={s:g}"] = fit_constant(f"wente-s{s:g}", per_s[s][0], per_s[s][1], config={"s": s})
    main.extra["subreports"] = subs
    threshold = 64.0 * np.finfo(float).eps * (max(all_l) if all_l else 1.0)
    main.extra["equal_pairs"] = {
        "max_grad_norm": max(equal) if equal else 0.0,
        "noise_threshold": threshold,
        "below_threshold": bool(all(e <= threshold for e in equal)),
    }
    if sweep:
        main.extra["sweep"] = [wente_frequency_sweep(s, g, tol=tol) for s in s_list]
    return main


# ------------------------------------------------------------ harmonic bound


def poisson_kernel_field(rng: np.random.Generator, grid: Grid, poles: int = 4) -> np.ndarray:
    """Edge trace of a random combination of Poisson kernels with poles outside the disk."""
    P = grid.points
    val = np.full(P.shape[0], rng.normal())
    for _ in range(poles):
        rho = rng.uniform(1.05, 2.0)
        ang = rng.uniform(0.0, 2 * np.pi)
        zeta = rho * np.array([np.cos(ang), np.sin(ang)])
        d2 = np.sum((P - zeta) ** 2, axis=1)
        val += rng.normal() * (rho**2 - np.sum(P**2, axis=1)) / (2 * np.pi * rho * d2)
    return val


def check_harmonic_bound(
    spec: SampleSpec, K_radius: float = 0.5, grid: Grid | None = None, tol: float = DEFAULT_TOL
) -> ConstantReport:
    """``sup_{B(0,K)} f <= C1 int f_+ - C2 int f_-`` over discrete harmonic fields.

    Fitted on the even trials: a provisional ``C1`` (margin times the
    largest ``sup / int f_+``) fixes the room for ``C2``, which takes half
    of the smallest admissible value; ``C1`` is then refitted with that
    ``C2``.  Odd trials validate the pair.
    """
    g = grid or default_grid()
    edge = g.edge
    bounds = []
    for trial in range(spec.count):
        rng = trial_rng(spec, trial, stream=6)
        trace = poisson_kernel_field(rng, g)
        f = harmonic_extension(trace[edge], g, tol=tol).solution
        bounds.append(harmonic_sup_bound_check(f, K_radius))
    sup = np.array([b.sup for b in bounds])
    pos = np.array([b.int_pos for b in bounds])
    neg = np.array([b.int_neg for b in bounds])
    margin = 1.25
    calib = np.arange(len(bounds)) % 2 == 0
    c1 = c2 = 0.0
    if np.any(calib):
        sp, pp, nn = sup[calib], pos[calib], neg[calib]
        with np.errstate(divide="ignore", invalid="ignore"):
            c1_0 = margin * float(np.max(np.where(sp > 0, sp / pp, 0.0)))
            room = np.where(nn > 0, (c1_0 * pp - sp) / nn, np.inf)
            c2 = max(0.5 * float(np.min(room)), 0.0)
            c1 = margin * float(np.max(np.where(sp + c2 * nn > 0, (sp + c2 * nn) / pp, 0.0)))
    # as lhs <= rhs with constant 1; a negative left side holds trivially
    lhs = np.maximum(sup + c2 * neg, 0.0)
    rhs = c1 * pos
    check = ~calib
    config = {"K_radius": K_radius, "grid": g.descriptor(), "spec": spec.to_dict(), "margin": margin}
    rep = fit_constant("harmonic-sup", lhs[check], rhs[check], constant=1.0, config=config)
    everywhere = int(np.count_nonzero(lhs > rhs))
    rep.extra.update({"C1": c1, "C2": c2, "violations_all_trials": everywhere, "fields": len(bounds), "samples": [b.to_dict() for b in bounds[:20]]})
    return rep


# ------------------------------------------------------------ collapse


@dataclass
class CollapseReport:
    scales: list
    normal_energy: list
    grad_phi: list
    lam_shift_error: float
    neg_lam_h: list
    slope: float
    expected_slope: float
    mask_area: float
    energy_spread: float
    halving_error: float
    extra: dict = field(default_factory=dict)

    @property
    def slope_rel_error(self) -> float:
        return abs(self.slope - self.expected_slope) / self.expected_slope

    @property
    def passed(self) -> bool:
        return self.energy_spread <= 1e-10 and self.halving_error <= 1e-10 and self.slope_rel_error <= 0.05

    def to_dict(self) -> dict:
        out = {
            "scales": self.scales,
            "normal_energy": self.normal_energy,
            "grad_phi_l2": self.grad_phi,
            "lam_shift_error": self.lam_shift_error,
            "neg_lam_h_integral": self.neg_lam_h,
            "slope": self.slope,
            "expected_slope": self.expected_slope,
            "slope_rel_error": self.slope_rel_error,
            "mask_area": self.mask_area,
            "energy_spread": self.energy_spread,
            "halving_error": self.halving_error,
            "passed": self.passed,
        }
        out.update(self.extra)
        return out


def collapse_experiment(c_list=None, n: int = 64, s: float = 0.75, tol: float = DEFAULT_TOL) -> CollapseReport:
    """Scale the stereographic immersion by ``c_k`` and track the diagnostics.

    Defaults to ``c_k = 2**-k`` for ``k = 0..10``.  The slope of the
    negative part of ``lam_h`` is fitted against ``-log2(c_k)``; the unit
    normal is unchanged by scaling, so the normal energy must be constant.
    """
    if c_list is None:
        c_list = [2.0**-k for k in range(11)]
    c = [float(x) for x in c_list]
    if any(x <= 0 for x in c) or any(b >= a for a, b in zip(c, c[1:])):
        raise ValueError("scales must be positive and strictly decreasing")
    g = default_grid(n)
    W, G, NEG, shifts = [], [], [], []
    base = stereographic_immersion(g, 1.0)
    for ck in c:
        conf = stereographic_immersion(g, ck)
        W.append(frac_normal_energy(conf.frame.u, s).value)
        _, lam_h, diag = lambda_decomposition(conf, tol=tol)
        G.append(diag["grad_phi_l2"])
        NEG.append(diag["int_lam_h_neg"])
        shifts.append(float(np.max(np.abs(conf.lam.values - base.lam.values - math.log(ck)))))
    # one unit per halving of the scale
    logs = -np.log2(np.asarray(c))
    slope = float(np.polyfit(logs, NEG, 1)[0])
    area = g.size * g.h**2
    W0 = W[0]
    spread = float(max(abs(w - W0) for w in W) / max(abs(W0), DENOM_FLOOR))
    halving = 0.0
    for (a, b), (ca, cb) in zip(zip(G, G[1:]), zip(c, c[1:])):
        halving = max(halving, abs(b / a - cb / ca))
    return CollapseReport(
        scales=c,
        normal_energy=W,
        grad_phi=G,
        lam_shift_error=max(shifts),
        neg_lam_h=NEG,
        slope=slope,
        expected_slope=math.pi * math.log(2.0),
        mask_area=area,
        energy_spread=spread,
        halving_error=halving,
        extra={"s": s, "n": n, "area_slope": area * math.log(2.0)},
    )


# ------------------------------------------------------------ extension


def check_extension_constant(
    spec: SampleSpec, s: float = 0.75, scales=(1.5, 2.0, 3.0), grid: Grid | None = None
) -> ConstantReport:
    """``[E u]_{W^{s,2/s}(B_L)} <= C [u]_{W^{s,2/s}(B_1)}`` for the inversion extension.

    With ``p = 2/s`` the predicted growth factor ``L**(2 max(0, 2 - s p))``
    is 1, so a single constant should cover every scale.
    """
    g = grid or default_grid()
    lhs, rhs, tags = [], [], []
    for trial in range(spec.count):
        u = gen_unit_field(spec, g, trial)
        base = _seminorm(u, s)
        for L in scales:
            lhs.append(_seminorm(inversion_extension(u, L), s))
            rhs.append(base)
            tags.append(L)
    config = {"s": s, "scales": list(scales), "grid": g.descriptor(), "spec": spec.to_dict()}
    rep = fit_constant("extension", lhs, rhs, config=config)
    tags = np.asarray(tags)
    rep.extra["max_ratio_per_scale"] = {f"{L:g}": float(np.nanmax(rep.ratios[tags == L])) for L in scales} if lhs else {}
    return rep


# ------------------------------------------------------------ constants


def calibrate_constants(spec: SampleSpec, s: float = 0.75, grid: Grid | None = None) -> dict:
    """Empirical ``C_W``, ``C_E`` and the lifting constant ``C = C_W C_E**2 / 2``.

    ``C_W`` is the fitted Wente constant at ``s``, ``C_E`` the fitted
    constant of the simplified frame estimate.  Smallness of ``eps`` then
    means ``eps <= 1 / (2 C)``.
    """
    g = grid or default_grid()
    w = check_wente_constant(spec, [s], g, sweep=False)
    fe = check_frame_estimate(spec, s, g).subreports()["simplified"]
    C_W = w.constant
    C_E = fe.constant
    C = C_W * C_E**2 / 2.0
    return {
        "s": s,
        "C_W": C_W,
        "C_E": C_E,
        "C": C,
        "epsilon_s": 1.0 / (2.0 * C) if C > 0 else None,
        "margin": w.margin,
        "grid": g.descriptor(),
        "spec": spec.to_dict(),
        "wente_violations": w.violations,
        "frame_violations": fe.violations,
    }


# ------------------------------------------------------------ lifting


def check_lifting(
    spec: SampleSpec,
    C: float,
    s: float = 0.75,
    grid: Grid | None = None,
    radii=(0.25, 0.5, 0.75, 1.0),
    margin: float = 0.1,
    tol: float = DEFAULT_TOL,
) -> ConstantReport:
    """Run the continuity diagnostics on random frames with a given constant ``C``.

    The report fits ``||<e1~, grad e2~>||_2 <= C' [u]**2`` for the gauged
    frame on the largest ball; ``extra`` has the branch of every trial and
    the fraction on the lower branch.
    """
    g = grid or default_grid(64)
    conn, eps2, branches, violated = [], [], [], 0
    for trial in range(spec.count):
        diag = lifting_pipeline(gen_frame(spec, g, trial), s, radii, C, margin=margin, tol=tol)
        conn.append(diag.final_connection_l2)
        eps2.append(diag.epsilon**2)
        branches.append(diag.branch)
        violated += int(diag.smallness_violated)
    config = {"s": s, "C": C, "radii": list(radii), "margin": margin, "grid": g.descriptor(), "spec": spec.to_dict()}
    rep = fit_constant("lifting-connection", conn, eps2, config=config)
    lower = sum(b == "lower" for b in branches)
    rep.extra.update(
        {
            "branches": branches,
            "lower_fraction": lower / len(branches) if branches else 0.0,
            "smallness_violated": violated,
        }
    )
    return rep

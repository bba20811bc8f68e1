"""Orthonormal frames, conformal immersions and the Coulomb gauge.

Sign conventions used throughout:

* rotating a frame by an angle field ``theta``,
  ``e1' = cos e1 - sin e2`` and ``e2' = sin e1 + cos e2``, adds
  ``grad(theta)`` to the connection form ``<e1, grad e2>``;
* for a conformal immersion with factor ``exp(lam)`` the connection form
  equals ``-perp_grad(lam)``, hence ``Laplace(lam) = -J`` with the frame
  Jacobian ``J = d1 e1 . d2 e2 - d2 e1 . d1 e2``;
* a divergence-free connection ``w`` is written ``w = perp_grad(psi)``
  with ``Laplace(psi) = J`` and ``psi = 0`` on the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    Grid,
    ScalarField,
    VecField2,
    VecField3,
    divergence,
    integrate,
    l2_norm,
    laplacian,
    partials,
    perp_gradient,
    restrict,
)
from .elliptic import (
    DEFAULT_TOL,
    gradient_l2,
    harmonic_extension,
    neumann_poisson,
    wente_rhs,
    wente_solve,
)
from .sobolev import gagliardo_seminorm

__all__ = [
    "Frame",
    "ConformalData",
    "GaugeResult",
    "LiftDiagnostics",
    "FRAME_TOL",
    "stereographic_immersion",
    "flat_immersion",
    "frame_from_immersion",
    "connection_form",
    "frame_jacobian",
    "rotate_frame",
    "coulomb_gauge",
    "gauge_curve",
    "continuity_roots",
    "classify_branch",
    "lifting_pipeline",
    "lambda_decomposition",
    "perp_connection_defect",
]

FRAME_TOL = 1e-8
DEGENERATE = 1e-12


@dataclass(frozen=True)
class Frame:
    """Pointwise orthonormal triple ``(e1, e2, u)`` with ``u = e1 x e2``."""

    e1: VecField3
    e2: VecField3
    u: VecField3

    def __post_init__(self):
        g = self.e1.grid
        if not (self.e2.grid == g and self.u.grid == g):
            raise ValueError("frame components must share a grid")
        a, b, c = self.e1.values, self.e2.values, self.u.values
        worst = max(
            np.max(np.abs(np.linalg.norm(a, axis=1) - 1.0)),
            np.max(np.abs(np.linalg.norm(b, axis=1) - 1.0)),
            np.max(np.abs(np.linalg.norm(c, axis=1) - 1.0)),
            np.max(np.abs(np.sum(a * b, axis=1))),
            np.max(np.abs(np.sum(a * c, axis=1))),
            np.max(np.abs(np.sum(b * c, axis=1))),
            np.max(np.abs(np.cross(a, b) - c)),
        )
        if worst > FRAME_TOL:
            raise ValueError(f"frame is not orthonormal and positively oriented (defect {worst:.3g})")

    @property
    def grid(self) -> Grid:
        return self.e1.grid

    @classmethod
    def from_arrays(cls, grid: Grid, e1, e2, u=None) -> "Frame":
        e1 = np.asarray(e1, dtype=float)
        e2 = np.asarray(e2, dtype=float)
        u = np.cross(e1, e2) if u is None else np.asarray(u, dtype=float)
        return cls(VecField3(grid, e1), VecField3(grid, e2), VecField3(grid, u))

    def on(self, grid: Grid) -> "Frame":
        return Frame(self.e1.on(grid), self.e2.on(grid), self.u.on(grid))

    def restrict(self, r: float) -> "Frame":
        return Frame(restrict(self.e1, r), restrict(self.e2, r), restrict(self.u, r))


@dataclass(frozen=True)
class ConformalData:
    phi: VecField3
    lam: ScalarField
    frame: Frame
    conformality_residual: float


@dataclass(frozen=True)
class GaugeResult:
    """Coulomb-gauge rotation on one ball.

    ``div_residual`` is the max divergence of the gauged connection over
    nodes two steps inside the ball and three inside the grid mask, relative to ``max(max|div g|, 1)``
    for the input connection ``g``.  ``frame_div_residual`` is the same
    quantity recomputed from the rotated frame by finite differences, so
    it also carries the O(h^2) truncation of the rotation identity.
    """

    theta: ScalarField
    rotated: Frame
    f_r: float
    div_residual: float
    radius: float
    connection: VecField2
    frame_div_residual: float = float("nan")
    boundary_flux: float = float("nan")
    iterations: int = 0
    solver_residual: float = 0.0


@dataclass
class LiftDiagnostics:
    radii: list
    f_values: list
    F1: list | None = None
    F2: list | None = None
    wente_norms: list | None = None
    branch: str | None = None
    C_used: float | None = None
    epsilon: float | None = None
    s: float | None = None
    margin: float = 0.1
    smallness_violated: bool = False
    competitor_norms: list | None = None
    div_residuals: list | None = None
    final_connection_l2: float | None = None
    final_ratio: float | None = None
    wente_ratio_sq: float | None = None
    wente_ratio_ns: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        keys = [
            "radii",
            "f_values",
            "F1",
            "F2",
            "wente_norms",
            "competitor_norms",
            "div_residuals",
            "branch",
            "smallness_violated",
            "C_used",
            "epsilon",
            "s",
            "margin",
            "final_connection_l2",
            "final_ratio",
            "wente_ratio_sq",
            "wente_ratio_ns",
        ]
        out = {k: getattr(self, k) for k in keys}
        out.update(self.extra)
        return out

    def csv_rows(self):
        n = len(self.radii)
        F1 = self.F1 or [None] * n
        F2 = self.F2 or [None] * n
        return [(r, f, a, b) for r, f, a, b in zip(self.radii, self.f_values, F1, F2)]


# ------------------------------------------------------------ immersions


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1)[:, None]


def _orthonormal_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric orthonormalisation of two unit vectors (treats both alike)."""
    c = np.sum(a * b, axis=1)[:, None]
    p = 1.0 / np.sqrt(1.0 + c)
    q = 1.0 / np.sqrt(1.0 - c)
    e1 = 0.5 * ((p + q) * a + (p - q) * b)
    e2 = 0.5 * ((p - q) * a + (p + q) * b)
    return _unit(e1), _unit(e2)


def frame_from_immersion(phi: VecField3) -> ConformalData:
    """Frame, conformal factor and conformality defect of an immersion.

    ``e_a = d_a phi / |d_a phi|`` (symmetrically re-orthonormalised to
    absorb the discretisation defect), ``lam = log|d_1 phi|`` and
    ``u = e1 x e2``.
    """
    d1, d2 = partials(phi)
    n1 = np.linalg.norm(d1, axis=1)
    n2 = np.linalg.norm(d2, axis=1)
    if np.min(n1) < DEGENERATE or np.min(n2) < DEGENERATE:
        raise ValueError("degenerate immersion: vanishing tangent vector")
    residual = float(np.max(np.abs(n1 - n2) / n1 + np.abs(np.sum(d1 * d2, axis=1)) / (n1 * n2)))
    e1, e2 = _orthonormal_pair(d1 / n1[:, None], d2 / n2[:, None])
    frame = Frame.from_arrays(phi.grid, e1, e2)
    return ConformalData(phi, ScalarField(phi.grid, np.log(n1)), frame, residual)


def stereographic_immersion(grid: Grid, scale: float = 1.0) -> ConformalData:
    """Inverse stereographic projection onto the unit sphere, times ``scale``.

    The conformal factor is ``2 scale / (1 + |x|^2)``.
    """
    if grid.kind != "disk":
        raise ValueError("stereographic immersion needs a disk grid")
    x, y = grid.points[:, 0], grid.points[:, 1]
    r2 = x * x + y * y
    phi = np.column_stack([2 * x, 2 * y, r2 - 1.0]) / (1.0 + r2)[:, None]
    return frame_from_immersion(VecField3(grid, scale * phi))


def flat_immersion(grid: Grid, scale: float = 1.0) -> ConformalData:
    P = grid.points
    return frame_from_immersion(VecField3(grid, scale * np.column_stack([P[:, 0], P[:, 1], np.zeros(grid.size)])))


# ------------------------------------------------------------ connection


def connection_form(frame: Frame) -> VecField2:
    """``(<e1, d1 e2>, <e1, d2 e2>)`` at every node."""
    d1, d2 = partials(frame.e2)
    a = frame.e1.values
    return VecField2(frame.grid, np.column_stack([np.sum(a * d1, axis=1), np.sum(a * d2, axis=1)]))


def frame_jacobian(frame: Frame) -> ScalarField:
    """``d1 e1 . d2 e2 - d2 e1 . d1 e2``, the curl of the connection form."""
    return wente_rhs(frame.e1, frame.e2)


def rotate_frame(frame: Frame, theta: ScalarField) -> Frame:
    """Rotate ``(e1, e2)`` in their plane by ``theta``; ``u`` is kept as is."""
    if theta.grid != frame.grid:
        frame = frame.on(theta.grid)
    c = np.cos(theta.values)[:, None]
    s = np.sin(theta.values)[:, None]
    a, b = frame.e1.values, frame.e2.values
    g = frame.grid
    return Frame(VecField3(g, c * a - s * b), VecField3(g, s * a + c * b), frame.u)


# ------------------------------------------------------------ gauge


def _deep(grid: Grid) -> np.ndarray:
    return grid.interior(2)


def coulomb_gauge(frame: Frame, r: float | None = None, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> GaugeResult:
    """Rotate the frame on ``B(0, r)`` so its connection form is divergence free.

    ``theta`` minimises ``||grad(theta) + <e1, grad e2>||_{L2(B_r)}`` and has
    zero mean on ``B_r``; the minimal value is ``f_r``.
    """
    g = frame.grid
    if g.kind != "disk":
        raise ValueError("coulomb gauge needs a disk grid")
    if r is None:
        r = g.mask_radius
    if not (0 < r <= g.mask_radius + 1e-12):
        raise ValueError("radius must lie in (0, grid radius]")
    sub = g if abs(r - g.mask_radius) < 1e-15 else g.with_radius(r)
    if sub.size == 0:
        raise ValueError("ball contains no nodes")
    conn = connection_form(frame)
    rep = neumann_poisson(conn, sub, tol=tol, max_iter=max_iter)
    gauged = rep.extra["rotated_connection"]
    # one-sided stencils at the parent edge reach two nodes inward, so the
    # optimality condition is a plain divergence only beyond them
    deep = _deep(sub) & g.interior(3)[g.index[sub.ij]]

    g_sub = conn.on(sub)
    scale = 1.0
    div_res = 0.0
    if np.any(deep):
        scale = max(1.0, float(np.max(np.abs(divergence(g_sub).values[deep]))))
        div_res = float(np.max(np.abs(divergence(gauged).values[deep]))) / scale

    rotated = rotate_frame(frame.on(sub), rep.solution)
    frame_div = 0.0
    if np.any(deep):
        frame_div = float(np.max(np.abs(divergence(connection_form(rotated)).values[deep]))) / scale
    edge = sub.edge
    nu = (sub.points[edge] - np.asarray(sub.center)) / np.maximum(sub.radii[edge], 1e-300)[:, None]
    flux = float(np.sqrt(np.mean(np.sum(gauged.values[edge] * nu, axis=1) ** 2))) if np.any(edge) else 0.0
    return GaugeResult(
        rep.solution,
        rotated,
        float(rep.value),
        div_res,
        float(r),
        gauged,
        frame_div,
        flux,
        rep.iterations,
        rep.residual,
    )


def _check_radii(radii, g: Grid) -> list:
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("need at least one radius")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if radii[0] <= 0 or radii[-1] > g.mask_radius + 1e-12:
        raise ValueError("radii must lie in (0, grid radius]")
    return radii


def gauge_curve(frame: Frame, radii, tol: float = DEFAULT_TOL) -> LiftDiagnostics:
    """Minimal gauge value ``f(r)`` and the zero-rotation competitor per radius."""
    radii = _check_radii(radii, frame.grid)
    conn = connection_form(frame)
    f_values, competitors, divs = [], [], []
    for r in radii:
        res = coulomb_gauge(frame, r, tol=tol)
        f_values.append(res.f_r)
        divs.append(res.div_residual)
        competitors.append(l2_norm(restrict(conn, r)))
    return LiftDiagnostics(radii, f_values, competitor_norms=competitors, div_residuals=divs)


def continuity_roots(C: float, epsilon: float) -> tuple[float, float] | None:
    """Roots ``F1 <= F2`` of ``C x^2 - x + C eps^2``; ``None`` if they are complex.

    ``x <= C (x^2 + eps^2)`` holds exactly outside ``(F1, F2)``.
    """
    if not C > 0:
        raise ValueError("constant C must be positive")
    disc = 1.0 - 4.0 * C * C * epsilon * epsilon
    if disc < 0:
        return None
    root = np.sqrt(disc)
    # F1 written without cancellation for small eps
    F1 = 2.0 * C * epsilon * epsilon / (1.0 + root)
    F2 = (1.0 + root) / (2.0 * C)
    return float(F1), float(F2)


def classify_branch(f_values, F1: float, F2: float, margin: float = 0.1) -> str:
    f = np.asarray(f_values, dtype=float)
    if np.all(f <= F1 * (1.0 + margin)):
        return "lower"
    if np.any(f >= F2):
        return "upper"
    return "indeterminate"


def lifting_pipeline(
    frame: Frame,
    s: float,
    radii,
    C: float,
    margin: float = 0.1,
    tol: float = DEFAULT_TOL,
) -> LiftDiagnostics:
    """Continuity-argument diagnostics for the gauge curve ``f(r)``.

    For every radius the frame is gauged, the stream function of the
    gauged connection is obtained from the zero-boundary Wente problem
    ``Laplace(psi) = J``, and ``f(r)`` is compared with the roots of
    ``x = C (x^2 + eps^2)`` where ``eps = [u]_{W^{s, 2/s}}`` on the full
    grid.  When those roots are complex the result is flagged as
    ``smallness_violated`` instead of raising.
    """
    if not (0.5 < s < 1.0):
        raise ValueError("s must lie in (1/2, 1)")
    g = frame.grid
    radii = _check_radii(radii, g)
    eps = gagliardo_seminorm(frame.u, s, 2.0 / s).value
    conn = connection_form(frame)
    f_values, competitors, divs, wente = [], [], [], []
    last = None
    for r in radii:
        res = coulomb_gauge(frame, r, tol=tol)
        f_values.append(res.f_r)
        divs.append(res.div_residual)
        competitors.append(l2_norm(restrict(conn, r)))
        psi = wente_solve(res.rotated.e1, res.rotated.e2, tol=tol)
        wente.append(gradient_l2(psi.solution))
        last = res
    diag = LiftDiagnostics(radii, f_values, competitor_norms=competitors, div_residuals=divs)
    diag.s = float(s)
    diag.epsilon = float(eps)
    diag.C_used = float(C)
    diag.margin = float(margin)
    diag.wente_norms = wente
    diag.final_connection_l2 = float(l2_norm(last.connection))
    if eps > 0:
        diag.final_ratio = diag.final_connection_l2 / eps**2
        diag.wente_ratio_sq = wente[-1] / eps**2
        diag.wente_ratio_ns = wente[-1] / eps ** (2.0 / s)

    roots = continuity_roots(C, eps)
    if roots is None:
        diag.smallness_violated = True
        diag.branch = "indeterminate"
        return diag
    F1, F2 = roots
    diag.F1 = [F1] * len(radii)
    diag.F2 = [F2] * len(radii)
    diag.branch = classify_branch(diag.f_values, F1, F2, margin)
    return diag


# ------------------------------------------------------------ lambda split


def lambda_decomposition(conformal: ConformalData, K_radius: float = 0.5, tol: float = DEFAULT_TOL):
    """Split the conformal factor into a harmonic part and a zero-trace rest.

    Returns
    -------
    lam0 : ScalarField
        ``lam - lam_h``, zero on the mask edge.
    lam_h : ScalarField
        Discrete harmonic extension of the edge trace of ``lam``.
    diagnostics : dict
        ``grad_lam0_l2``; ``laplace_residual`` (max of
        ``|Laplace(lam0) + J|`` two nodes inside the mask, relative to
        ``max(max|J|, 1)``); ``sup_lam_h`` on ``B(0, K_radius)`` with the
        integrals of the positive and negative parts of ``lam_h``;
        ``grad_phi_l2``; ``exp_integral`` = integral of ``exp(2|lam0|)``.
    """
    lam = conformal.lam
    g = lam.grid
    lam_h = harmonic_extension(lam, tol=tol).solution
    lam0 = lam - lam_h
    J = frame_jacobian(conformal.frame).values
    deep = _deep(g)
    scale = max(1.0, float(np.max(np.abs(J[deep])))) if np.any(deep) else 1.0
    lap_res = float(np.max(np.abs(laplacian(lam0).values[deep] + J[deep]))) / scale if np.any(deep) else 0.0
    inside = g.radii < K_radius
    d1, d2 = partials(conformal.phi)
    diagnostics = {
        "grad_lam0_l2": gradient_l2(lam0),
        "laplace_residual": lap_res,
        "sup_lam_h": float(np.max(lam_h.values[inside])) if np.any(inside) else float("nan"),
        "K_radius": float(K_radius),
        "int_lam_h_pos": float(integrate(ScalarField(g, np.maximum(lam_h.values, 0.0)))),
        "int_lam_h_neg": float(integrate(ScalarField(g, np.maximum(-lam_h.values, 0.0)))),
        "grad_phi_l2": float(np.sqrt(np.sum(d1**2 + d2**2) * g.h**2)),
        "exp_integral": float(integrate(ScalarField(g, np.exp(2.0 * np.abs(lam0.values))))),
        "conformality_residual": conformal.conformality_residual,
    }
    return lam0, lam_h, diagnostics


def perp_connection_defect(conformal: ConformalData, depth: int = 2) -> float:
    """Max of ``|-perp_grad(lam) - <e1, grad e2>|`` over nodes ``depth`` steps inside."""
    lhs = -perp_gradient(conformal.lam).values
    rhs = connection_form(conformal.frame).values
    sel = conformal.lam.grid.interior(depth)
    return float(np.max(np.abs(lhs[sel] - rhs[sel])))

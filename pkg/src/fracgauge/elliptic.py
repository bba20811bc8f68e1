"""Poisson-type solvers on masked disk grids.

The Dirichlet solvers treat edge nodes (masked nodes with an unmasked
4-neighbour) as the discrete boundary and solve the 5-point equation on
the remaining nodes.  The gauge solver is a least-squares problem for the
full gradient stencils, so it carries its own weak Neumann condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .domain import Field, Grid, ScalarField, VecField2, gradient, integrate, partials

__all__ = [
    "SolveReport",
    "ConvergenceError",
    "poisson_dirichlet",
    "wente_rhs",
    "wente_solve",
    "neumann_poisson",
    "harmonic_extension",
    "HarmonicBound",
    "harmonic_sup_bound_check",
    "gradient_l2",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolveReport:
    """Solution of a linear elliptic problem with its convergence record.

    ``value`` holds the minimal functional value for least-squares solves
    (``None`` otherwise).
    """

    solution: ScalarField
    residual: float
    iterations: int
    boundary_kind: str
    converged: bool = True
    value: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .io import field_to_dict

        out = {
            "boundary_kind": self.boundary_kind,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": bool(self.converged),
            "solution": field_to_dict(self.solution),
        }
        if self.value is not None:
            out["value"] = self.value
        return out


class ConvergenceError(RuntimeError):
    """Raised when a solver misses its tolerance; carries the report."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


def _require_disk(grid: Grid) -> None:
    if grid.kind != "disk":
        raise ValueError("this solver needs a disk grid")


def _on(f: Field, grid: Grid | None) -> Field:
    if grid is None or grid == f.grid:
        return f
    return f.on(grid)


@lru_cache(maxsize=32)
def _dirichlet_system(grid: Grid):
    inner = np.flatnonzero(~grid.edge)
    bnd = np.flatnonzero(grid.edge)
    L = grid.laplace_op
    L_ii = L[inner][:, inner].tocsc()
    L_ib = L[inner][:, bnd].tocsr()
    lu = splu(-L_ii) if inner.size else None
    return inner, bnd, L_ii, L_ib, lu


def _cg_solve(A, b, tol, max_iter, x0=None):
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, callback=tick)
    return x, info, count[0]


def _solve_interior(grid, rhs_vals, bvals, tol, max_iter, method):
    inner, bnd, L_ii, L_ib, lu = _dirichlet_system(grid)
    sol = np.zeros(grid.size)
    sol[bnd] = bvals
    if inner.size == 0:
        return sol, 0.0, 0, True
    b = rhs_vals[inner] - L_ib @ bvals
    scale = max(np.max(np.abs(b)), np.finfo(float).tiny)
    if method == "direct":
        x = -lu.solve(b)
        r = L_ii @ x - b
        # one step of iterative refinement is cheap with the factor at hand
        x = x + lu.solve(r)
        iterations = 2
    elif method == "cg":
        cap = max_iter if max_iter is not None else 20 * grid.n**2
        x, _, iterations = _cg_solve(-L_ii, -b, tol * 1e-2, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    sol[inner] = x
    residual = float(np.max(np.abs(L_ii @ x - b)))
    return sol, residual, iterations, residual <= tol * scale


def poisson_dirichlet(
    rhs: ScalarField,
    grid: Grid | None = None,
    boundary: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    method: str = "direct",
) -> SolveReport:
    """Solve ``Laplace(u) = rhs`` with Dirichlet data on the mask edge.

    Parameters
    ----------
    rhs : ScalarField
        Right-hand side; only non-edge values enter.
    grid : Grid, optional
        Disk (sub-)grid to solve on; ``rhs`` is re-attached if needed.
    boundary : array, optional
        Values on the edge nodes (in mask order), default zero.
    tol : float
        Relative tolerance on the max-norm residual.
    max_iter : int, optional
        Iteration cap for ``method="cg"`` (default ``20 n**2``).
    method : {"direct", "cg"}

    Raises
    ------
    ConvergenceError
        If the residual stays above ``tol`` times the data scale.
    """
    rhs = _on(rhs, grid)
    g = rhs.grid
    _require_disk(g)
    n_bnd = int(np.count_nonzero(g.edge))
    bvals = np.zeros(n_bnd) if boundary is None else np.asarray(boundary, dtype=float)
    if bvals.shape != (n_bnd,):
        raise ValueError(f"expected {n_bnd} boundary values, got shape {bvals.shape}")
    sol, residual, iters, ok = _solve_interior(g, rhs.values, bvals, tol, max_iter, method)
    report = SolveReport(ScalarField(g, sol), residual, iters, "dirichlet", ok)
    if not ok:
        raise ConvergenceError(f"Dirichlet solve missed tolerance (residual {residual:.3g})", report)
    return report


def wente_rhs(a: ScalarField, b: ScalarField) -> ScalarField:
    """Pointwise Jacobian ``d1 a d2 b - d2 a d1 b`` (perp-gradient of a dotted with gradient of b)."""
    if not a.grid == b.grid:
        raise ValueError("a and b must live on the same grid")
    a1, a2 = partials(a)
    b1, b2 = partials(b)
    jac = a1 * b2 - a2 * b1
    if jac.ndim == 2:
        jac = jac.sum(axis=1)
    return ScalarField(a.grid, jac)


def wente_solve(
    a: ScalarField, b: ScalarField, grid: Grid | None = None, tol: float = DEFAULT_TOL, method: str = "direct"
) -> SolveReport:
    """Zero-boundary solution of ``Laplace(u) = <perp-grad a, grad b>``.

    Vector-valued ``a`` and ``b`` are contracted componentwise.
    """
    rhs = wente_rhs(a, b)
    return poisson_dirichlet(rhs, grid, tol=tol, method=method)


@lru_cache(maxsize=64)
def _gauge_system(parent: Grid, sub: Grid):
    rows = parent.index[sub.ij]
    Dx, Dy = parent.diff_ops
    G = sp.vstack([Dx[rows], Dy[rows]]).tocsr()
    cols = np.flatnonzero(np.asarray(abs(G).sum(axis=0)).ravel() > 0)
    A = G[:, cols].tocsr()
    N = (A.T @ A).tocsr()
    return rows, cols, A, N


def neumann_poisson(
    g: VecField2,
    domain: Grid | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> SolveReport:
    """Minimise ``||grad(theta) + g||_{L2(domain)}`` over lattice functions theta.

    The gradient stencils are those of ``g.grid``; only their rows at
    nodes of ``domain`` are summed, so the minimal value is monotone in
    the domain.  The normal equations are solved by conjugate gradients
    started at zero, which yields the minimum-norm minimiser even though
    the central-difference gradient has sublattice null modes.  The
    returned theta lives on ``domain`` and has zero mean there.

    The report's ``value`` is the minimal ``L2`` norm; ``extra`` carries
    ``theta_support`` (the theta values on every node the stencils touch,
    as a parent-grid array with NaN elsewhere) and ``rotated_connection``
    (``g + grad(theta)`` on ``domain``).
    """
    parent = g.grid
    sub = parent if domain is None else domain
    if not parent.same_lattice(sub):
        raise ValueError("domain must share the field's lattice")
    _require_disk(parent)
    rows, cols, A, N = _gauge_system(parent, sub)
    b = -np.concatenate([g.values[rows, 0], g.values[rows, 1]])
    rhs = A.T @ b
    h2 = parent.h**2
    if not np.any(rhs):
        theta_cols = np.zeros(cols.size)
        iters = 0
        info = 0
    else:
        cap = max_iter if max_iter is not None else 20 * parent.n**2
        theta_cols, info, iters = _cg_solve(N, rhs, tol * 1e-2, cap)
    ne_res = N @ theta_cols - rhs
    scale = max(np.max(np.abs(rhs)), np.finfo(float).tiny)
    residual = float(np.max(np.abs(ne_res)) / scale) if np.any(rhs) else 0.0

    full = np.full(parent.size, np.nan)
    full[cols] = theta_cols
    theta_sub = full[rows]
    shift = float(np.mean(theta_sub))
    theta_sub = theta_sub - shift
    full = full - shift

    fitted = A @ theta_cols - b
    m = rows.size
    conn = np.column_stack([fitted[:m], fitted[m:]])
    value = float(np.sqrt(np.sum(fitted**2) * h2))
    ok = info == 0 and residual <= tol
    report = SolveReport(
        ScalarField(sub, theta_sub),
        residual,
        iters,
        "neumann-mean-zero",
        ok,
        value,
        {"theta_support": full, "rotated_connection": VecField2(sub, conn)},
    )
    if not ok:
        raise ConvergenceError(f"gauge solve missed tolerance (residual {residual:.3g})", report)
    return report


def harmonic_extension(
    trace, grid: Grid | None = None, tol: float = DEFAULT_TOL, method: str = "direct"
) -> SolveReport:
    """Discrete harmonic function with prescribed values on the mask edge.

    ``trace`` is either a field on the grid (its edge values are used) or
    an array of edge values in mask order (``grid`` required then).
    """
    if isinstance(trace, Field):
        tr = _on(trace, grid)
        g = tr.grid
        bvals = tr.values[g.edge]
    else:
        if grid is None:
            raise ValueError("grid required when the trace is given as an array")
        g = grid
        bvals = np.asarray(trace, dtype=float)
    return poisson_dirichlet(ScalarField(g, np.zeros(g.size)), g, bvals, tol=tol, method=method)


@dataclass(frozen=True)
class HarmonicBound:
    """Ingredients of ``sup_K f <= C1 int f_+ - C2 int f_-`` for one sample."""

    sup: float
    int_pos: float
    int_neg: float
    K_radius: float
    laplace_residual: float

    def holds(self, c1: float, c2: float, slack: float = 0.0) -> bool:
        return self.sup <= c1 * self.int_pos - c2 * self.int_neg + slack

    def min_c1(self) -> float:
        """Smallest ``C1`` that works with ``C2 = 0`` (inf when impossible)."""
        if self.sup <= 0:
            return 0.0
        return self.sup / self.int_pos if self.int_pos > 0 else np.inf

    def max_c2(self, c1: float) -> float:
        """Largest ``C2`` compatible with a given ``C1``."""
        slack = c1 * self.int_pos - self.sup
        return slack / self.int_neg if self.int_neg > 0 else np.inf

    def to_dict(self) -> dict:
        return {
            "sup": self.sup,
            "int_pos": self.int_pos,
            "int_neg": self.int_neg,
            "K_radius": self.K_radius,
            "laplace_residual": self.laplace_residual,
        }


def harmonic_sup_bound_check(f: ScalarField, K_radius: float = 0.5, tol: float = 1e-8) -> HarmonicBound:
    """Measure ``sup_{B(0,K)} f`` against the integrals of ``f_+`` and ``f_-``.

    ``f`` must be discrete harmonic on the non-edge nodes: the max-norm
    5-point residual, relative to ``max|f| / h**2``, may not exceed ``tol``.
    """
    g = f.grid
    _require_disk(g)
    if not (0 < K_radius <= g.mask_radius):
        raise ValueError("K_radius must lie in (0, grid radius]")
    lap = g.laplace_op @ f.values
    scale = max(np.max(np.abs(f.values)), np.finfo(float).tiny) / g.h**2
    resid = float(np.max(np.abs(lap[~g.edge])) / scale) if np.any(~g.edge) else 0.0
    if resid > tol:
        raise ValueError(f"field is not discrete harmonic (relative residual {resid:.3g})")
    inside = g.radii < K_radius
    if not np.any(inside):
        raise ValueError("no nodes inside the K ball")
    pos = float(integrate(ScalarField(g, np.maximum(f.values, 0.0))))
    neg = float(integrate(ScalarField(g, np.maximum(-f.values, 0.0))))
    return HarmonicBound(float(np.max(f.values[inside])), pos, neg, float(K_radius), resid)


def gradient_l2(f: ScalarField) -> float:
    """``||grad f||_{L2}`` with the toolkit's difference stencils."""
    v = gradient(f).values
    return float(np.sqrt(np.sum(v**2) * f.grid.h**2))

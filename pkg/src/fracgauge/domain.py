"""Lattice grids on disks and squares, grid-attached fields, discrete calculus.

Nodes sit at cell centers of an ``n x n`` lattice covering the box
``[cx - R, cx + R] x [cy - R, cy + R]``, so ``h = 2R/n``.  Full-lattice arrays
are indexed ``[i, j]`` with ``i`` along x (axis 0) and ``j`` along y (axis 1);
"row-major" always means numpy C order of that layout.

Fields store one value (or vector) per *masked* node, in C order of the
masked lattice positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid",
    "Field",
    "ScalarField",
    "VecField2",
    "VecField3",
    "make_grid",
    "gradient",
    "perp_gradient",
    "divergence",
    "laplacian",
    "integrate",
    "restrict",
    "l2_norm",
]

KINDS = ("disk", "square")


@dataclass(frozen=True)
class Grid:
    """Cell-centered lattice with a domain mask.

    ``R`` is the half-width of the lattice box.  For disks the mask radius
    defaults to ``R`` but may be smaller (sub-balls produced by `restrict`
    share the parent lattice).
    """

    kind: str
    R: float
    n: int
    center: tuple[float, float] = (0.0, 0.0)
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if int(self.n) != self.n or self.n < 4:
            raise ValueError("need at least 4 nodes per axis")
        if self.radius is not None and not (0 < self.radius <= self.R * np.sqrt(2) + 1e-12):
            raise ValueError("mask radius out of range")

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.n

    @property
    def mask_radius(self) -> float:
        return self.R if self.radius is None else self.radius

    @cached_property
    def axis(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.arange(self.n) + 0.5
        return (self.center[0] - self.R + k * self.h, self.center[1] - self.R + k * self.h)

    @cached_property
    def lattice(self) -> tuple[np.ndarray, np.ndarray]:
        """Full-lattice coordinate arrays ``X, Y`` of shape ``(n, n)``."""
        return np.meshgrid(*self.axis, indexing="ij")

    @cached_property
    def mask(self) -> np.ndarray:
        X, Y = self.lattice
        if self.kind == "square" and self.radius is None:
            m = np.ones((self.n, self.n), dtype=bool)
        else:
            r2 = (X - self.center[0]) ** 2 + (Y - self.center[1]) ** 2
            m = r2 < self.mask_radius**2
        m.setflags(write=False)
        return m

    @cached_property
    def flat(self) -> np.ndarray:
        """C-order flat lattice indices of masked nodes."""
        return np.flatnonzero(self.mask)

    @cached_property
    def ij(self) -> tuple[np.ndarray, np.ndarray]:
        return np.unravel_index(self.flat, (self.n, self.n))

    @cached_property
    def index(self) -> np.ndarray:
        """Lattice array mapping a node to its masked index, ``-1`` outside."""
        idx = np.full((self.n, self.n), -1, dtype=np.int64)
        idx[self.ij] = np.arange(self.size)
        return idx

    @property
    def size(self) -> int:
        return int(self.flat.size)

    @cached_property
    def points(self) -> np.ndarray:
        X, Y = self.lattice
        return np.column_stack([X[self.ij], Y[self.ij]])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.hypot(self.points[:, 0] - self.center[0], self.points[:, 1] - self.center[1])

    def with_radius(self, r: float) -> "Grid":
        """Same lattice, disk mask of radius ``r`` about the center."""
        return Grid("disk", self.R, self.n, self.center, float(r))

    def same_lattice(self, other: "Grid") -> bool:
        return self.R == other.R and self.n == other.n and tuple(self.center) == tuple(other.center)

    def interior(self, depth: int = 1) -> np.ndarray:
        """Boolean per masked node: all axis neighbours up to ``depth`` are masked."""
        m = self.mask
        ok = m.copy()
        for d in range(1, depth + 1):
            for axis in (0, 1):
                for sgn in (1, -1):
                    sh = np.zeros_like(m)
                    src = [slice(None)] * 2
                    dst = [slice(None)] * 2
                    if sgn > 0:
                        dst[axis], src[axis] = slice(0, self.n - d), slice(d, None)
                    else:
                        dst[axis], src[axis] = slice(d, None), slice(0, self.n - d)
                    sh[tuple(dst)] = m[tuple(src)]
                    ok &= sh
        return ok[self.ij]

    @cached_property
    def edge(self) -> np.ndarray:
        """Masked nodes with at least one unmasked 4-neighbour (the discrete boundary)."""
        return ~self.interior(1)

    def descriptor(self) -> dict:
        d = {"kind": self.kind, "R": self.R, "n": self.n}
        if tuple(self.center) != (0.0, 0.0):
            d["center"] = list(self.center)
        if self.radius is not None:
            d["radius"] = self.radius
        return d

    @classmethod
    def from_descriptor(cls, d: dict) -> "Grid":
        kind = d["kind"]
        if kind == "square-periodic":
            kind = "square"
        return cls(kind, float(d["R"]), int(d["n"]), tuple(d.get("center", (0.0, 0.0))), d.get("radius"))

    # -- sparse difference operators -------------------------------------

    @cached_property
    def diff_ops(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        return _first_derivative(self, 0), _first_derivative(self, 1)

    @cached_property
    def laplace_op(self) -> sp.csr_matrix:
        """5-point Laplacian rows for interior nodes (zero rows on the edge)."""
        idx, (I, J), h = self.index, self.ij, self.h
        inner = np.flatnonzero(~self.edge)
        rows, cols, vals = [inner], [inner], [np.full(inner.size, -4.0 / h**2)]
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rows.append(inner)
            cols.append(idx[I[inner] + di, J[inner] + dj])
            vals.append(np.full(inner.size, 1.0 / h**2))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.size, self.size)
        )


def _first_derivative(grid: Grid, axis: int) -> sp.csr_matrix:
    """Central differences, second-order one-sided stencils at mask edges.

    Falls back to a two-point difference when a chord is too short for a
    three-point stencil, and to zero for an isolated node.
    """
    n, h = grid.n, grid.h
    pad = np.full((n + 4, n + 4), -1, dtype=np.int64)
    pad[2:-2, 2:-2] = grid.index
    I, J = grid.ij
    I, J = I + 2, J + 2

    def nb(k):
        return pad[I + k, J] if axis == 0 else pad[I, J + k]

    p1, p2, m1, m2 = nb(1), nb(2), nb(-1), nb(-2)
    me = np.arange(grid.size)
    rows, cols, vals = [], [], []

    def add(sel, targets, coefs):
        for t, c in zip(targets, coefs):
            rows.append(me[sel])
            cols.append(t[sel])
            vals.append(np.full(int(sel.sum()), c))

    central = (p1 >= 0) & (m1 >= 0)
    fwd = (p1 >= 0) & (m1 < 0)
    bwd = (m1 >= 0) & (p1 < 0)
    add(central, (p1, m1), (0.5 / h, -0.5 / h))
    add(fwd & (p2 >= 0), (me, p1, p2), (-1.5 / h, 2.0 / h, -0.5 / h))
    add(fwd & (p2 < 0), (me, p1), (-1.0 / h, 1.0 / h))
    add(bwd & (m2 >= 0), (me, m1, m2), (1.5 / h, -2.0 / h, 0.5 / h))
    add(bwd & (m2 < 0), (me, m1), (1.0 / h, -1.0 / h))
    if not rows:
        return sp.csr_matrix((grid.size, grid.size))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.size, grid.size)
    )


@dataclass(frozen=True, eq=False)
class Field:
    """Values attached to the masked nodes of a grid."""

    grid: Grid
    values: np.ndarray
    components: int = field(init=False, default=0)

    ncomp: int | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            k = 1
        elif v.ndim == 2:
            k = v.shape[1]
        else:
            raise ValueError("field values must be 1-D or 2-D")
        if v.shape[0] != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.shape[0]}")
        if self.ncomp is not None and k != self.ncomp:
            raise ValueError(f"expected {self.ncomp} components, got {k}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "components", k)

    def full(self, fill: float = np.nan) -> np.ndarray:
        shape = (self.grid.n, self.grid.n) + (() if self.components == 1 else (self.components,))
        out = np.full(shape, fill)
        out[self.grid.ij] = self.values
        return out

    def with_values(self, values) -> "Field":
        return field_like(self.grid, values)

    def on(self, grid: Grid) -> "Field":
        """Re-attach to another mask on the same lattice (sub-mask required)."""
        if not self.grid.same_lattice(grid):
            raise ValueError("grids do not share a lattice")
        idx = self.grid.index[grid.ij]
        if np.any(idx < 0):
            raise ValueError("target mask is not contained in the source mask")
        return field_like(grid, self.values[idx])

    def __add__(self, other):
        if isinstance(other, Field):
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


class ScalarField(Field):
    def __init__(self, grid, values):
        super().__init__(grid, values, ncomp=1)


class VecField2(Field):
    def __init__(self, grid, values):
        super().__init__(grid, values, ncomp=2)


class VecField3(Field):
    def __init__(self, grid, values):
        super().__init__(grid, values, ncomp=3)


def field_like(grid: Grid, values) -> Field:
    v = np.asarray(values, dtype=float)
    k = 1 if v.ndim == 1 else v.shape[1]
    return {1: ScalarField, 2: VecField2, 3: VecField3}.get(k, lambda g, x: Field(g, x))(grid, v)


def make_grid(kind: str, R: float, n: int, center=(0.0, 0.0)) -> Grid:
    return Grid(kind, float(R), int(n), tuple(float(c) for c in center))


def _apply(op: sp.csr_matrix, v: np.ndarray) -> np.ndarray:
    return np.asarray(op @ v)


def gradient(f: Field) -> Field:
    """Gradient of a scalar field, or Jacobian ``(M, k, 2)`` values for vector fields."""
    Dx, Dy = f.grid.diff_ops
    if f.components == 1:
        return VecField2(f.grid, np.column_stack([_apply(Dx, f.values), _apply(Dy, f.values)]))
    return np.stack([_apply(Dx, f.values), _apply(Dy, f.values)], axis=-1)


def partials(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """``(d1 f, d2 f)`` as raw arrays, for scalar or vector fields."""
    Dx, Dy = f.grid.diff_ops
    return _apply(Dx, f.values), _apply(Dy, f.values)


def perp_gradient(f: ScalarField) -> VecField2:
    """``(-d_y f, d_x f)``."""
    dx, dy = partials(f)
    return VecField2(f.grid, np.column_stack([-dy, dx]))


def divergence(v: VecField2) -> ScalarField:
    Dx, Dy = v.grid.diff_ops
    return ScalarField(v.grid, _apply(Dx, v.values[:, 0]) + _apply(Dy, v.values[:, 1]))


def laplacian(f: ScalarField) -> ScalarField:
    """Compact 5-point Laplacian; edge nodes get 0."""
    return ScalarField(f.grid, _apply(f.grid.laplace_op, f.values))


def integrate(f: Field) -> float | np.ndarray:
    """Midpoint rule over the mask (numpy pairwise summation)."""
    return np.sum(f.values, axis=0) * f.grid.h**2


def l2_norm(f: Field) -> float:
    v = f.values if f.components == 1 else np.sum(f.values**2, axis=1)
    if f.components == 1:
        v = v**2
    return float(np.sqrt(np.sum(v) * f.grid.h**2))


def restrict(f: Field, r: float) -> Field:
    """Restrict a field to the sub-disk of radius ``r`` about the grid center."""
    g = f.grid
    if not (r > 0):
        raise ValueError("restriction radius must be positive")
    limit = g.mask_radius if g.kind == "disk" else g.R * np.sqrt(2)
    if r > limit + 1e-12:
        raise ValueError("restriction radius exceeds the domain")
    if g.kind == "disk" and abs(r - g.mask_radius) < 1e-15:
        return f
    return f.on(g.with_radius(r))

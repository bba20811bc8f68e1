"""Fourier multipliers on periodic squares.

Transforms are plain ``numpy.fft`` on ``n x n`` lattices with ``n`` a
power of two; frequencies are angular (``xi = 2 pi k / side``).  The zero
mode is always discarded, so every homogeneous operator acts modulo
constants.

The Littlewood-Paley profile is ``psi0(r) = eta(log2 r)`` with
``eta(t) = exp(1 - 1 / (1 - t**2))`` on ``|t| < 1``, normalised as
``psi(r) = psi0(r) / sum_k psi0(2**-k r)`` so that ``sum_j psi(2**-j r) = 1``
for every ``r > 0`` and ``psi`` is supported in ``(1/2, 2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as _quad
from scipy.special import gamma

from .domain import Field, Grid
from .sobolev import inversion_extension

__all__ = [
    "PeriodicField",
    "LPDecomposition",
    "embed",
    "smooth_cutoff",
    "frequencies",
    "frac_laplacian",
    "riesz_potential",
    "riesz_transform",
    "singular_integral_frac_laplacian",
    "frac_laplacian_constant",
    "riesz_potential_constant",
    "lp_profile",
    "lp_levels",
    "lp_project",
    "lp_decompose",
    "triebel_seminorm",
    "lp_norm",
    "spectral_tail",
    "restrict_periodic",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Samples on the cell centres of a periodic square ``[c - side/2, c + side/2)^2``.

    ``values`` has shape ``(n, n)`` or ``(n, n, k)``.
    """

    side: float
    n: int
    values: np.ndarray
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not _is_pow2(int(self.n)):
            raise ValueError("n must be a power of two")
        if not self.side > 0:
            raise ValueError("side must be positive")
        v = np.array(self.values, dtype=float)
        if v.shape[:2] != (self.n, self.n):
            raise ValueError(f"values must have leading shape ({self.n}, {self.n})")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return self.side / self.n

    @property
    def grid(self) -> Grid:
        return Grid("square", self.side / 2.0, self.n, tuple(self.center))

    def with_values(self, values) -> "PeriodicField":
        return PeriodicField(self.side, self.n, values, self.center)

    def mean(self):
        return self.values.mean(axis=(0, 1))

    def to_field(self) -> Field:
        from .domain import field_like

        v = self.values.reshape(self.n * self.n, -1)
        return field_like(self.grid, v[:, 0] if v.shape[1] == 1 and self.values.ndim == 2 else v)

    @classmethod
    def from_field(cls, f: Field) -> "PeriodicField":
        g = f.grid
        if g.kind != "square" or g.size != g.n * g.n:
            raise ValueError("need a fully masked square grid")
        shape = (g.n, g.n) if f.components == 1 else (g.n, g.n, f.components)
        return cls(2.0 * g.R, g.n, f.values.reshape(shape), tuple(g.center))

    def to_dict(self) -> dict:
        k = 1 if self.values.ndim == 2 else self.values.shape[2]
        flat = self.values.reshape(self.n * self.n, k)
        vals = [float(v) for v in flat[:, 0]] if k == 1 else [[float(x) for x in row] for row in flat]
        grid = {"kind": "square-periodic", "R": self.side / 2.0, "n": self.n}
        if tuple(self.center) != (0.0, 0.0):
            grid["center"] = list(self.center)
        return {"grid": grid, "components": k, "values": vals}


def frequencies(side: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Angular frequency arrays ``(xi1, xi2)`` in ``fft2`` layout."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=side / n)
    return np.meshgrid(k, k, indexing="ij")


def _as_periodic(f) -> PeriodicField:
    return PeriodicField.from_field(f) if isinstance(f, Field) else f


def _apply_multiplier(f: PeriodicField, m: np.ndarray) -> np.ndarray:
    F = np.fft.fft2(f.values, axes=(0, 1))
    if F.ndim == 3:
        F = F * m[:, :, None]
    else:
        F = F * m
    return np.fft.ifft2(F, axes=(0, 1)).real


def _radial(f: PeriodicField) -> np.ndarray:
    X1, X2 = frequencies(f.side, f.n)
    return np.hypot(X1, X2)


def _check_order(s: float, lo: float = 0.0, hi: float = 2.0) -> None:
    if not (lo < s < hi):
        raise ValueError(f"order must lie in ({lo}, {hi}), got {s}")


def frac_laplacian(f: PeriodicField | Field, s: float) -> PeriodicField:
    """Multiplier ``|xi|**s`` (so ``s = 2`` would be ``-Laplace``)."""
    f = _as_periodic(f)
    _check_order(s)
    r = _radial(f)
    m = np.zeros_like(r)
    nz = r > 0
    m[nz] = r[nz] ** s
    return f.with_values(_apply_multiplier(f, m))


def riesz_potential(f: PeriodicField | Field, s: float) -> PeriodicField:
    """Multiplier ``|xi|**-s`` with the zero mode removed."""
    f = _as_periodic(f)
    _check_order(s)
    r = _radial(f)
    m = np.zeros_like(r)
    nz = r > 0
    m[nz] = r[nz] ** (-s)
    return f.with_values(_apply_multiplier(f, m))


def riesz_transform(f: PeriodicField | Field) -> PeriodicField:
    """Components ``R_j f`` with multipliers ``-i xi_j / |xi|`` stacked on a new last axis.

    Modes whose ``xi_j`` sits on the Nyquist line have no real-valued odd
    extension and are set to zero in ``R_j``.
    """
    f = _as_periodic(f)
    X1, X2 = frequencies(f.side, f.n)
    r = np.hypot(X1, X2)
    nyq = f.n // 2
    out = []
    F = np.fft.fft2(f.values, axes=(0, 1))
    for axis, X in enumerate((X1, X2)):
        m = np.zeros(r.shape, dtype=complex)
        nz = r > 0
        m[nz] = -1j * X[nz] / r[nz]
        if axis == 0:
            m[nyq, :] = 0.0
        else:
            m[:, nyq] = 0.0
        G = F * (m[:, :, None] if F.ndim == 3 else m)
        out.append(np.fft.ifft2(G, axes=(0, 1)).real)
    return f.with_values(np.stack(out, axis=-1))


# ---------------------------------------------------------------- embedding


def smooth_cutoff(r: np.ndarray, inner: float = 1.0, outer: float = 1.5) -> np.ndarray:
    """C-infinity radial step: 1 for ``r <= inner``, 0 for ``r >= outer``."""

    def bump(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    t = (outer - np.asarray(r, dtype=float)) / (outer - inner)
    a, b = bump(t), bump(1.0 - t)
    return a / (a + b)


def embed(f: Field, pad: int = 2) -> PeriodicField:
    """Place a unit-disk field in the periodic square of side ``2 pad``.

    The field is extended by inversion to ``B(0, 2)``, multiplied by a
    smooth cutoff that equals 1 on ``B(0, 1)`` and vanishes outside
    ``B(0, 1.5)``, and zero-filled elsewhere.  The square lattice shares
    nodes with the disk lattice, so ``n * pad`` must be a power of two.
    """
    if int(pad) != pad or pad < 2:
        raise ValueError("pad must be an integer >= 2")
    g = f.grid
    if g.kind != "disk" or not np.isclose(g.mask_radius, 1.0) or g.n % 2:
        raise ValueError("embed needs an even-sized unit-disk grid")
    m = g.n * int(pad)
    if not _is_pow2(m):
        raise ValueError("n * pad must be a power of two")
    ext = inversion_extension(f, 2.0)
    eg = ext.grid
    off = (m - eg.n) // 2
    k = f.components
    full = np.zeros((m, m) if k == 1 else (m, m, k))
    chi = smooth_cutoff(eg.radii)
    I, J = eg.ij
    vals = ext.values * (chi if k == 1 else chi[:, None])
    full[I + off, J + off] = vals
    return PeriodicField(2.0 * pad, m, full)


def restrict_periodic(pf: PeriodicField, grid: Grid) -> Field:
    """Read a periodic field back onto a disk grid that shares its lattice."""
    from .domain import field_like

    if not np.isclose(grid.h, pf.h):
        raise ValueError("lattice spacing mismatch")
    off = int(round((pf.side / 2.0 - grid.R) / pf.h))
    I, J = grid.ij
    return field_like(grid, pf.values[I + off, J + off])


# ---------------------------------------------------------------- singular integral


def frac_laplacian_constant(s: float) -> float:
    """Normalising constant of the 2-D singular-integral form of ``|xi|**s``."""
    return 2.0**s * gamma(1.0 + s / 2.0) / (np.pi * abs(gamma(-s / 2.0)))


def riesz_potential_constant(t: float) -> float:
    """``c_t`` with ``|xi|**-t = c_t * integral |x - y|**(t - 2) f(y) dy`` in 2-D."""
    return gamma((2.0 - t) / 2.0) / (np.pi * 2.0**t * gamma(t / 2.0))


@lru_cache(maxsize=32)
def _square_moment(power: float) -> float:
    """Integral of ``|e|**power`` over the unit square centred at the origin."""
    val = _quad.quad(lambda a: (0.5 / np.cos(a)) ** (power + 2.0) / (power + 2.0), 0.0, np.pi / 4)[0]
    return 8.0 * val


def _box_tail(points: np.ndarray, lo: float, hi: float, s: float, nphi: int = 256) -> np.ndarray:
    """``integral over y outside the box of |x - y|**(-2 - s)`` for each x."""
    phi = (np.arange(nphi) + 0.5) * (2 * np.pi / nphi)
    c, sn = np.cos(phi), np.sin(phi)
    x = points[:, 0:1]
    y = points[:, 1:2]
    with np.errstate(divide="ignore"):
        tx = np.where(c > 0, (hi - x) / c, np.where(c < 0, (lo - x) / c, np.inf))
        ty = np.where(sn > 0, (hi - y) / sn, np.where(sn < 0, (lo - y) / sn, np.inf))
    rho = np.minimum(tx, ty)
    return (rho ** (-s)).sum(axis=1) * (2 * np.pi / nphi) / s


def singular_integral_frac_laplacian(f: PeriodicField | Field, s: float) -> PeriodicField:
    """``c_s * PV integral (f(x) - f(y)) / |x - y|**(2 + s) dy`` by lattice quadrature.

    ``f`` is treated as a function on the plane that vanishes outside the
    square (it should be compactly supported inside it).  Pairs are summed
    with the midpoint rule via a zero-padded FFT convolution; the region
    outside the square contributes ``f(x)`` times the exact kernel mass
    there, and the excluded self cell is filled in from the second-order
    Taylor term of ``f``.
    """
    f = _as_periodic(f)
    _check_order(s, 0.0, 1.0)
    if f.values.ndim != 2:
        raise ValueError("scalar periodic field expected")
    n, h = f.n, f.h
    idx = np.arange(2 * n)
    idx = np.where(idx < n, idx, idx - 2 * n).astype(float)
    D1, D2 = np.meshgrid(idx, idx, indexing="ij")
    r = np.hypot(D1, D2) * h
    K = np.zeros_like(r)
    K[r > 0] = r[r > 0] ** (-2.0 - s)
    pad = np.zeros((2 * n, 2 * n))
    pad[:n, :n] = f.values
    ones = np.zeros((2 * n, 2 * n))
    ones[:n, :n] = 1.0
    FK = np.fft.rfft2(K)
    conv = np.fft.irfft2(np.fft.rfft2(pad) * FK, s=K.shape)[:n, :n]
    mass = np.fft.irfft2(np.fft.rfft2(ones) * FK, s=K.shape)[:n, :n]
    G = f.grid
    lo, hi = f.center[0] - f.side / 2.0, f.center[0] + f.side / 2.0
    tail = _box_tail(G.points, lo, hi, s).reshape(n, n)
    v = f.values
    lap = -4.0 * v
    lap[1:, :] += v[:-1, :]
    lap[:-1, :] += v[1:, :]
    lap[:, 1:] += v[:, :-1]
    lap[:, :-1] += v[:, 1:]
    lap /= h * h
    self_cell = -0.25 * lap * h ** (2.0 - s) * _square_moment(-s)
    total = (v * mass - conv) * h * h + v * tail + self_cell
    return f.with_values(frac_laplacian_constant(s) * total)


# ---------------------------------------------------------------- Littlewood-Paley


def _eta(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def lp_profile(r) -> np.ndarray:
    """Normalised annulus profile ``psi(r)`` (zero for ``r <= 0``)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    t = np.log2(r[pos])
    num = _eta(t)
    k = np.floor(t)
    den = _eta(t - k) + _eta(t - k - 1.0)
    out[pos] = num / den
    return out


def lp_levels(f: PeriodicField) -> tuple[int, int]:
    """Smallest and largest level whose annulus fits on the lattice.

    The lowest level is the first whose annulus still reaches below the
    smallest nonzero frequency; the highest keeps ``2**(j+1)`` at or below
    the Nyquist frequency.
    """
    xi_min = 2.0 * np.pi / f.side
    xi_nyq = np.pi * f.n / f.side
    j_min = int(math.floor(math.log2(xi_min))) - 1
    j_max = int(math.floor(math.log2(xi_nyq))) - 1
    return j_min, j_max


def lp_project(f: PeriodicField, j: int) -> PeriodicField:
    """Band ``f_j`` with multiplier ``psi(2**-j |xi|)``."""
    j_min, j_max = lp_levels(f)
    if not (j_min <= j <= j_max):
        raise ValueError(f"level {j} outside the representable range [{j_min}, {j_max}]")
    m = lp_profile(_radial(f) * 2.0 ** (-j))
    return f.with_values(_apply_multiplier(f, m))


@dataclass(frozen=True)
class LPDecomposition:
    j_min: int
    j_max: int
    bands: dict

    def reconstruct(self) -> np.ndarray:
        return np.sum([self.bands[j].values for j in range(self.j_min, self.j_max + 1)], axis=0)


def lp_decompose(f: PeriodicField, j_min: int | None = None, j_max: int | None = None) -> LPDecomposition:
    lo, hi = lp_levels(f)
    j_min = lo if j_min is None else max(lo, j_min)
    j_max = hi if j_max is None else min(hi, j_max)
    return LPDecomposition(j_min, j_max, {j: lp_project(f, j) for j in range(j_min, j_max + 1)})


def lp_norm(f: PeriodicField, p: float) -> float:
    v = f.values
    mag = np.abs(v) if v.ndim == 2 else np.linalg.norm(v.reshape(f.n, f.n, -1), axis=2)
    return float((np.sum(mag**p) * f.h**2) ** (1.0 / p))


def spectral_tail(f: PeriodicField, j_max: int | None = None) -> float:
    """Fraction of the non-constant spectral energy above ``2**j_max``.

    Levels up to ``j_max`` sum to one exactly on ``|xi| <= 2**j_max``.
    """
    if j_max is None:
        j_max = lp_levels(f)[1]
    F = np.fft.fft2(f.values, axes=(0, 1))
    power = np.abs(F) ** 2
    if power.ndim == 3:
        power = power.sum(axis=2)
    power[0, 0] = 0.0
    energy = power.sum()
    if energy == 0:
        return 0.0
    return float(power[_radial(f) > 2.0**j_max].sum() / energy)


def triebel_seminorm(f: PeriodicField, s: float, p: float, tail_tol: float = 1e-8) -> float:
    """``(sum_j 2**(j s p) ||f_j||_p**p)**(1/p)`` over the representable levels.

    Warns when the spectral energy outside the covered frequencies exceeds
    ``tail_tol`` times the total (zero mode excluded).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    dec = lp_decompose(f)
    total = 0.0
    for j in range(dec.j_min, dec.j_max + 1):
        total += 2.0 ** (j * s * p) * lp_norm(dec.bands[j], p) ** p
    if spectral_tail(f, dec.j_max) > tail_tol:
        warnings.warn("spectral tail beyond the covered levels exceeds tolerance", RuntimeWarning, stacklevel=2)
    return float(total ** (1.0 / p))

"""Numpy reference implementation of the lattice pair sums."""
import numpy as np

MODE_DIFF = 0
MODE_WEDGE = 1


def _pair_values(A, B, mode, p):
    if mode == MODE_DIFF:
        q = np.sum((A - B) ** 2, axis=-1)
    else:
        q = np.sum(np.cross(A, B) ** 2, axis=-1)
    if p == 2.0:
        return q
    return q ** (0.5 * p)


def pair_sum(values, I, J, n, p, exponent, mode=MODE_DIFF, rmin2=0.0, rmax2=np.inf):
    """Sum over ordered pairs ``a != b`` of ``F(a, b)**p / |d|**exponent``.

    ``d`` is the lattice offset (integer units) between the nodes at
    ``(I[a], J[a])`` and ``(I[b], J[b])``.  ``F`` is ``|v_a - v_b|`` for
    ``mode=0`` and ``|v_a x v_b|`` for ``mode=1``.  Only pairs with
    ``rmin2 <= |d|**2 < rmax2`` contribute.
    """
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    k = V.shape[1]
    full = np.zeros((n, n, k))
    mask = np.zeros((n, n), dtype=bool)
    full[I, J] = V
    mask[I, J] = True
    parts = []
    for di in range(0, n):
        for dj in range(-(n - 1), n):
            if di == 0 and dj <= 0:
                continue
            r2 = di * di + dj * dj
            if r2 < rmin2 or r2 >= rmax2:
                continue
            if dj >= 0:
                sa = (slice(0, n - di), slice(0, n - dj))
                sb = (slice(di, n), slice(dj, n))
            else:
                sa = (slice(0, n - di), slice(-dj, n))
                sb = (slice(di, n), slice(0, n + dj))
            m = mask[sa] & mask[sb]
            if not m.any():
                continue
            vals = _pair_values(full[sa][m], full[sb][m], mode, p)
            parts.append(np.sum(vals) * float(r2) ** (-0.5 * exponent))
    if not parts:
        return 0.0
    return 2.0 * float(np.sum(np.array(parts)))

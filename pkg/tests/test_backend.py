import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgauge import _ext
from fracgauge._ext import pairsum_py

compiled = pytest.importorskip("fracgauge._ext._pairsum")


def test_backend_is_selected():
    assert _ext.BACKEND in ("cython", "python")


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 12),
    k=st.sampled_from([1, 3]),
    p=st.floats(1.1, 4.0),
    exponent=st.floats(2.0, 5.0),
    seed=st.integers(0, 2**31),
    density=st.floats(0.3, 1.0),
    rmax2=st.one_of(st.just(np.inf), st.floats(1.0, 50.0)),
)
def test_compiled_and_numpy_pair_sums_agree(n, k, p, exponent, seed, density, rmax2):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    I, J = np.nonzero(mask)
    values = rng.standard_normal((I.size, k))
    if k == 1:
        values = values[:, 0]
    modes = [0, 1] if k == 3 else [0]
    for mode in modes:
        a = pairsum_py.pair_sum(values, I, J, n, p, exponent, mode, 0.0, rmax2)
        b = compiled.pair_sum(values, I, J, n, p, exponent, mode, 0.0, rmax2)
        assert b == pytest.approx(a, rel=1e-11, abs=1e-300)


def test_single_pair_value():
    values = np.array([0.0, 2.0])
    I = np.array([0, 3])
    J = np.array([0, 4])
    for impl in (pairsum_py.pair_sum, compiled.pair_sum):
        # two ordered pairs, |d| = 5
        assert impl(values, I, J, 5, 2.0, 3.0) == pytest.approx(2 * 4.0 / 125.0)

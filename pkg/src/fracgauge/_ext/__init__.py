"""Hot pair-sum kernels.

``pair_sum`` is taken from the compiled ``_pairsum`` extension when it is
importable, otherwise from the numpy implementation in ``pairsum_py``.  Set
``FRACGAUGE_BACKEND=python`` to force the fallback.
"""
import os

from . import pairsum_py

BACKEND = "python"
pair_sum = pairsum_py.pair_sum

if os.environ.get("FRACGAUGE_BACKEND", "").lower() != "python":
    try:
        from . import _pairsum
    except ImportError:  # extension not built
        pass
    else:
        pair_sum = _pairsum.pair_sum
        BACKEND = "cython"

__all__ = ["pair_sum", "BACKEND", "pairsum_py"]

"""Empirical constants for inequalities of the form ``lhs <= C * rhs``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConstantReport", "fit_constant", "DENOM_FLOOR", "DEFAULT_MARGIN", "RATIO_LIST_LIMIT"]

DENOM_FLOOR = 1e-14
DEFAULT_MARGIN = 1.25
# longer ratio arrays are summarised by quantiles in serialised reports
RATIO_LIST_LIMIT = 5000


@dataclass
class ConstantReport:
    """Per-trial ratios and the constant fitted from them.

    Trials with ``rhs <= DENOM_FLOOR`` are excluded from the ratios and
    counted in ``excluded``; those among them with ``lhs > zero_tol`` are
    violations.  With a fitted constant, even trials calibrate
    (``constant = margin * max ratio``) and odd trials validate; a fixed
    constant is checked against every trial.
    """

    inequality_id: str
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    constant: float
    violations: int
    excluded: int
    two_sided: bool = False
    fitted: bool = True
    margin: float = DEFAULT_MARGIN
    violation_indices: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and np.isfinite(self.max_ratio)

    @property
    def trials(self) -> int:
        return int(self.lhs.size)

    def to_dict(self) -> dict:
        r = self.ratios[np.isfinite(self.ratios)]
        if self.ratios.size <= RATIO_LIST_LIMIT:
            ratios = [None if not np.isfinite(x) else float(x) for x in self.ratios]
        else:
            qs = [0.0, 0.01, 0.5, 0.99, 1.0]
            ratios = {"count": int(r.size), "quantiles": dict(zip(map(str, qs), (np.quantile(r, qs).tolist() if r.size else [None] * 5)))}
        out = {
            "inequality_id": self.inequality_id,
            "trials": self.trials,
            "max_ratio": self.max_ratio,
            "min_ratio": float(r.min()) if r.size else None,
            "constant": self.constant,
            "fitted": self.fitted,
            "two_sided": self.two_sided,
            "margin": self.margin,
            "violations": self.violations,
            "violation_indices": [int(i) for i in self.violation_indices[:100]],
            "excluded": self.excluded,
            "passed": self.passed,
            "ratios": ratios,
        }
        if self.config:
            out["config"] = self.config
        for key, value in self.extra.items():
            if key == "subreports":
                # the headline report is usually one of its own sub-reports
                value = {k: ("headline" if v is self else v.to_dict()) for k, v in value.items()}
            out[key] = value
        return out

    def subreports(self) -> dict:
        return dict(self.extra.get("subreports", {}))

    @property
    def all_passed(self) -> bool:
        return self.passed and all(r.passed for r in self.subreports().values())


def fit_constant(
    inequality_id: str,
    lhs,
    rhs,
    *,
    constant: float | None = None,
    margin: float = DEFAULT_MARGIN,
    two_sided: bool = False,
    zero_tol: float = 1e-12,
    config: dict | None = None,
    extra: dict | None = None,
) -> ConstantReport:
    """Build a ``ConstantReport`` for ``lhs <= C rhs``.

    Parameters
    ----------
    constant : float, optional
        Known constant to test against.  When omitted it is fitted on the
        even-indexed trials and the odd-indexed ones are validated.
    two_sided : bool
        Test ``1/C <= lhs/rhs <= C`` instead; the fit uses
        ``max(ratio, 1/ratio)``.
    """
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    if lhs.shape != rhs.shape:
        raise ValueError("lhs and rhs must have the same length")
    ok = rhs > DENOM_FLOOR
    ratios = np.full(lhs.shape, np.nan)
    ratios[ok] = lhs[ok] / rhs[ok]
    if two_sided:
        with np.errstate(divide="ignore"):
            spread = np.where(ok, np.maximum(ratios, 1.0 / np.where(ratios > 0, ratios, np.nan)), np.nan)
        spread[ok & ~(ratios > 0)] = np.inf
    else:
        spread = ratios
    zero_bad = ~ok & (np.abs(lhs) > zero_tol)
    idx = np.arange(lhs.size)
    if constant is None:
        calib = ok & (idx % 2 == 0)
        base = float(np.max(spread[calib])) if np.any(calib) else 0.0
        constant = margin * base
        check = ok & (idx % 2 == 1)
        fitted = True
    else:
        constant = float(constant)
        check = ok
        fitted = False
    over = check & (spread > constant)
    bad = np.flatnonzero(over | zero_bad)
    max_ratio = float(np.max(spread[ok])) if np.any(ok) else 0.0
    if np.any(zero_bad):
        max_ratio = float("inf")
    return ConstantReport(
        inequality_id=inequality_id,
        lhs=lhs,
        rhs=rhs,
        ratios=ratios,
        max_ratio=max_ratio,
        constant=float(constant),
        violations=int(bad.size),
        excluded=int(np.count_nonzero(~ok)),
        two_sided=two_sided,
        fitted=fitted,
        margin=float(margin) if fitted else 1.0,
        violation_indices=bad.tolist(),
        config=dict(config or {}),
        extra=dict(extra or {}),
    )

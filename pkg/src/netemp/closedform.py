"""Closed-form variances for small cycles and branches.

These are analytic counterparts of :mod:`netemp.infoengine` for the
2-node cycle and the 3- and 4-node branches; the test suite checks the two
routes against each other.

Every variance is in units of the corresponding gain squared. Input and
noise arguments are *variances* (``sigma1`` means sigma_1^2).

2-node cycle notation: ``z = a12 * a21``. Both predictor gradients are
filtered by ``1/(1 - z q^-2)^2``; ``gamma0`` and ``gamma2`` are the
lag-0 and lag-2 autocovariances of that filter's impulse response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from netemp.netmodel import DegenerateParameterError, ValidationError

_TINY = 1e-12


def gamma_coeffs(z: float, form: str = "exact") -> tuple[float, float]:
    """``(gamma0, gamma2)`` for loop gain ``z``.

    ``form="exact"`` returns ``((1+z^2)/(1-z^2)^3, 2z/(1-z^2)^3)``.
    ``form="published"`` evaluates the rational expressions as printed in
    the source article; they agree with the exact ones only to O(z^2) and
    are kept to show where its first numeric table comes from.
    """
    if not abs(z) < 1:
        raise DegenerateParameterError(f"|z| must be < 1, got {z}")
    if form == "exact":
        den = (1.0 - z * z) ** 3
        if den < _TINY:
            raise DegenerateParameterError("gamma denominator vanishes")
        return (1.0 + z * z) / den, 2.0 * z / den
    if form == "published":
        den = z**8 + 4 * z**6 - 6 * z**4 + 4 * z**2 + 1
        if den < _TINY:
            raise DegenerateParameterError("gamma denominator vanishes")
        return (z**4 + 8 * z**2 + 1) / den, 2 * z * (z**2 + 1) / den
    raise ValueError(f"unknown form {form!r}")


@dataclass(frozen=True)
class TwoNodeCycleParams:
    a12: float
    a21: float
    sigma1: float = 1.0
    sigma2: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if not abs(self.a12 * self.a21) < 1:
            raise ValidationError("2-node cycle requires |a12 a21| < 1")
        for name in ("sigma1", "sigma2", "lambda1", "lambda2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")


def _nonzero(x: float, what: str) -> float:
    if abs(x) < _TINY:
        raise DegenerateParameterError(f"{what} is zero")
    return x


def twonode_covariance(emp_id: str, p: TwoNodeCycleParams, gammas: str = "exact") -> np.ndarray:
    """Covariance of ``(a12, a21)`` for EMPs I-IV of the 2-node cycle.

    I: excite {1,2}, measure {1};  II: excite {1,2}, measure {2};
    III: excite {1}, measure {1,2};  IV: excite {2}, measure {1,2}.
    """
    a12, a21 = p.a12, p.a21
    g0, g2 = gamma_coeffs(a12 * a21, gammas)
    if emp_id in ("I", "II"):
        s1, s2 = p.sigma1, p.sigma2
        M = s1 * a21**2 + s2
        N = s1 + s2 * a12**2
        if emp_id == "I":
            _nonzero(a12, "a12")
            c = g0 * s1 * a21 + g2 * s2 * a12
            d = _nonzero(g0**2 * M * N - c**2, "d1")
            return p.lambda1 / d * np.array([
                [g0 * N, -c / a12],
                [-c / a12, g0 * M / a12**2],
            ])
        _nonzero(a21, "a21")
        c = g0 * s2 * a12 + g2 * s1 * a21
        d = _nonzero(g0**2 * M * N - c**2, "d2")
        return p.lambda2 / d * np.array([
            [g0 * N / a21**2, -c / a21],
            [-c / a21, g0 * M],
        ])
    if emp_id in ("III", "IV"):
        l1, l2 = p.lambda1, p.lambda2
        M = l1 * a21**2 + l2
        N = l1 + l2 * a12**2
        if emp_id == "III":
            _nonzero(a21, "a21")
            c = g0 * l2 * a12 + g2 * l1 * a21
            d = _nonzero(p.sigma1 * (g0**2 * M * N - c**2), "d3")
            return l1 * l2 / d * np.array([
                [g0 * N / a21**2, -c / a21],
                [-c / a21, g0 * M],
            ])
        _nonzero(a12, "a12")
        c = g0 * l1 * a21 + g2 * l2 * a12
        d = _nonzero(p.sigma2 * (g0**2 * M * N - c**2), "d4")
        return l1 * l2 / d * np.array([
            [g0 * N, -c / a12],
            [-c / a12, g0 * M / a12**2],
        ])
    raise ValueError(f"unknown 2-node EMP {emp_id!r}")


def twonode_variances(emp_id: str, p: TwoNodeCycleParams,
                      gammas: str = "exact") -> tuple[float, float]:
    """``(var(a12), var(a21))``."""
    P = twonode_covariance(emp_id, p, gammas)
    return float(P[0, 0]), float(P[1, 1])


@dataclass(frozen=True)
class BranchParams:
    """Gains of a 3- or 4-node branch plus per-node variances (index 0 is node 1)."""

    a21: float
    a32: float
    a43: float | None = None
    sigma2: Sequence[float] = (1.0, 1.0, 1.0, 1.0)
    lam: Sequence[float] = (1.0, 1.0, 1.0, 1.0)

    @property
    def n(self) -> int:
        return 3 if self.a43 is None else 4

    def s(self, k: int) -> float:
        return float(self.sigma2[k - 1])

    def l(self, k: int) -> float:
        return float(self.lam[k - 1])


def threenode_branch_variances(emp_id: str, p: BranchParams) -> tuple[float, float]:
    """``(var(a21), var(a32))``. I: excite {1,2}, measure {3}; II: excite {1}, measure {2,3}."""
    a21, a32 = p.a21, p.a32
    if emp_id == "I":
        _nonzero(a32, "a32")
        return p.l(3) * (a21**2 / p.s(2) + 1 / p.s(1)) / a32**2, p.l(3) / p.s(2)
    if emp_id == "II":
        _nonzero(a21, "a21")
        return p.l(2) / p.s(1), (a32**2 * p.l(2) + p.l(3)) / (a21**2 * p.s(1))
    raise ValueError(f"unknown 3-node branch EMP {emp_id!r}")


def sigma2_crossover(p: BranchParams, form: str = "exact") -> float:
    """Input variance at node 2 where both 3-node branch EMPs have equal trace.

    Above it, exciting node 2 (EMP I) is more accurate; below it, measuring
    node 2 (EMP II) is. ``form="exact"`` solves ``tr I = tr II`` from the
    variance expressions above. ``form="published"`` is the printed
    expression, which coincides with it only when ``a21^2 = a32^2``.
    """
    a21s, a32s = p.a21**2, p.a32**2
    l2, l3, s1 = p.l(2), p.l(3), p.s(1)
    if form == "exact":
        num = l3 * s1 * a21s * (a21s + a32s)
        den = l2 * a32s * (a21s + a32s) + l3 * (a32s - a21s)
    elif form == "published":
        num = l3 * s1 * a21s * a32s * (a21s + 1)
        den = l2 * a21s * a32s * (a32s + 1) + l3 * (a32s - a21s)
    else:
        raise ValueError(f"unknown form {form!r}")
    _nonzero(den, "crossover denominator")
    return num / den


def fournode_branch_variances(emp_id: str, p: BranchParams) -> tuple[float, float, float]:
    """``(var(a21), var(a32), var(a43))`` for the 4-node branch.

    I: {1,3}/{2,4};  II: {1,2}/{3,4};  III: {1,2,3}/{4};  IV: {1}/{2,3,4}.
    """
    if p.a43 is None:
        raise ValidationError("4-node branch needs a43")
    a21, a32, a43 = p.a21, p.a32, p.a43
    s1, s2, s3 = p.s(1), p.s(2), p.s(3)
    l2, l3, l4 = p.l(2), p.l(3), p.l(4)
    if emp_id == "I":
        _nonzero(a21, "a21")
        _nonzero(a43, "a43")
        v32 = (l2 * a32**2 / (s1 * a21**2) + l4 * a32**2 / (s3 * a43**2)
               + l4 / (s1 * a21**2 * a43**2))
        return l2 / s1, v32, l4 / s3
    if emp_id == "II":
        _nonzero(a32, "a32")
        q = s1 * a21**2 + s2
        v21 = l3 * l4 * q / ((s1 * s2 * a32**2) * (l3 * a43**2 + l4))
        v32 = (l3 * (s2 * (l3 * a43**2 + l4) + l4 * s1 * a21**2)
               / (s2 * (l3 * a43**2 * q + l4 * q)))
        v43 = (l3 * a43**2 + l4) / (a32**2 * q)
        return v21, v32, v43
    if emp_id == "III":
        _nonzero(a32, "a32")
        _nonzero(a43, "a43")
        v21 = l4 * (s1 * a21**2 + s2) / (s1 * s2 * a32**2 * a43**2)
        v32 = l4 * a32**2 / (s3 * a43**2) + l4 / (s2 * a43**2)
        return v21, v32, l4 / s3
    if emp_id == "IV":
        _nonzero(a21, "a21")
        _nonzero(a32, "a32")
        return (l2 / s1, (l2 * a32**2 + l3) / (s1 * a21**2),
                (l3 * a43**2 + l4) / (s1 * a21**2 * a32**2))
    raise ValueError(f"unknown 4-node branch EMP {emp_id!r}")


def trace(variances: Sequence[float]) -> float:
    return float(math.fsum(variances))

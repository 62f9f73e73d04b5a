"""Single-party index sums and the closed-form criterion bounds.

The index sums are ``sum_b sum_n Tr(P_n^(b) rho)^2`` for a family of
measurements. For MUMs and MUBs they obey a purity-dependent upper bound;
for GSIC-POVMs the sum is fixed exactly by the purity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import TOL, DensityMatrix
from .measurements import GSICPOVM, MUBFamily, MUMFamily


def outcome_probabilities(elements: np.ndarray, rho) -> np.ndarray:
    """``Tr(E rho)`` for every element of a stacked array ``(..., d, d)``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if elements.shape[-1] != m.shape[0]:
        raise ValueError(f"dimension mismatch: measurement on C^{elements.shape[-1]}, state of size {m.shape[0]}")
    p = np.einsum("...ij,ji->...", elements, m)
    if np.max(np.abs(p.imag), initial=0.0) > TOL.imaginary:
        raise ValueError("outcome probabilities have a non-negligible imaginary part")
    return p.real


def mum_index_sum(family: MUMFamily | MUBFamily, rho) -> float:
    return float(np.sum(outcome_probabilities(family.stacked(), rho) ** 2))


def mum_index_bound(M: int, d: int, kappa: float, purity: float) -> float:
    """``(M-1)/d + (1 - kappa + (kappa d - 1) purity)/(d - 1)``."""
    if d < 2 or M < 1:
        raise ValueError(f"need d >= 2 and M >= 1, got d={d}, M={M}")
    if not (1 / d < kappa <= 1):
        raise ValueError(f"kappa must lie in (1/{d}, 1], got {kappa}")
    if not (1 / d - TOL.trace <= purity <= 1 + TOL.trace):
        raise ValueError(f"purity must lie in [1/{d}, 1], got {purity}")
    return (M - 1) / d + (1 - kappa + (kappa * d - 1) * purity) / (d - 1)


def mum_pure_bound(M: int, d: int, kappa: float) -> float:
    """Index-sum bound at purity 1, ``(M-1)/d + kappa``."""
    return (M - 1) / d + kappa


def mub_index_bound(M: int, d: int) -> float:
    if M < 1:
        raise ValueError(f"need at least one basis, got M={M}")
    return 1 + (M - 1) / d


def gsic_index_sum(povm: GSICPOVM, rho) -> float:
    return float(np.sum(outcome_probabilities(povm.elements, rho) ** 2))


def gsic_index_value(a: float, d: int, purity: float) -> float:
    if not (1 / d**3 < a <= 1 / d**2):
        raise ValueError(f"a must lie in (1/{d}^3, 1/{d}^2], got {a}")
    return ((a * d**3 - 1) * purity + d * (1 - a * d)) / (d * (d * d - 1))


def gsic_pure_value(a: float, d: int) -> float:
    """``(a d^2 + 1)/(d (d + 1))``, the index sum of any pure state."""
    return (a * d * d + 1) / (d * (d + 1))


@dataclass(frozen=True)
class CriterionParams:
    """Dimension and count bookkeeping for a bipartite criterion.

    ``d_prime = s*d + r1`` and ``M_prime = t*M + r2``. For GSIC criteria
    the split is on squared dimensions, ``d_prime**2 = s*d**2 + r1``, and
    ``M = M_prime = 1``.
    """

    d: int
    d_prime: int
    M: int
    M_prime: int
    s: int
    t: int
    r1: int
    r2: int
    kappa1: float | None = None
    kappa2: float | None = None
    a1: float | None = None
    a2: float | None = None

    @classmethod
    def for_mum(cls, d: int, d_prime: int, M: int, M_prime: int, kappa1: float = 1.0, kappa2: float = 1.0):
        if d > d_prime:
            raise ValueError(f"first subsystem must be the smaller one: d={d} > d'={d_prime}")
        if M > M_prime:
            raise ValueError(f"need M <= M': M={M}, M'={M_prime}")
        s, r1 = divmod(d_prime, d)
        t, r2 = divmod(M_prime, M)
        return cls(d, d_prime, M, M_prime, s, t, r1, r2, kappa1=kappa1, kappa2=kappa2)

    @classmethod
    def for_gsic(cls, d: int, d_prime: int, a1: float, a2: float):
        if d > d_prime:
            raise ValueError(f"first subsystem must be the smaller one: d={d} > d'={d_prime}")
        s, r = divmod(d_prime**2, d**2)
        return cls(d, d_prime, 1, 1, s, 1, r, 0, a1=a1, a2=a2)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def th1_bound(p: CriterionParams) -> float:
    x = mum_pure_bound(p.M, p.d, p.kappa1)
    y = mum_pure_bound(p.M_prime, p.d_prime, p.kappa2)
    return p.t * p.s / 2 * x + y / 2


def th2_bound(p: CriterionParams) -> float:
    x = mum_pure_bound(p.M, p.d, p.kappa1)
    y = mum_pure_bound(p.M_prime, p.d_prime, p.kappa2)
    return math.sqrt(p.t * p.s * x) * math.sqrt(y)


def sr_bound(p: CriterionParams) -> float:
    """Earlier equal-count bound ``(s/2)[(M-1)/d + k1 + (M-1)/d' + k2]``."""
    if p.M != p.M_prime:
        raise ValueError(f"comparison bound needs M = M', got {p.M} and {p.M_prime}")
    return p.s / 2 * (mum_pure_bound(p.M, p.d, p.kappa1) + mum_pure_bound(p.M, p.d_prime, p.kappa2))


def th2_mub_bound(p: CriterionParams) -> float:
    return math.sqrt(p.t * p.s * mub_index_bound(p.M, p.d)) * math.sqrt(mub_index_bound(p.M_prime, p.d_prime))


def th2_gsic_bound(p: CriterionParams) -> float:
    return math.sqrt(p.s * gsic_pure_value(p.a1, p.d)) * math.sqrt(gsic_pure_value(p.a2, p.d_prime))


def th3_bound(p: CriterionParams, marginal_sum_a: float, marginal_sum_b: float) -> tuple[float, bool]:
    """Marginal-corrected bound; returns ``(bound, clamped)``.

    Radicands are nonnegative analytically; tiny negative values from
    rounding are clamped to zero and ``clamped`` is set when one was
    below ``-1e-9``.
    """
    ra = p.t * p.s * (mum_pure_bound(p.M, p.d, p.kappa1) - marginal_sum_a)
    rb = mum_pure_bound(p.M_prime, p.d_prime, p.kappa2) - marginal_sum_b
    clamped = ra < -1e-9 or rb < -1e-9
    return math.sqrt(max(ra, 0.0)) * math.sqrt(max(rb, 0.0)), clamped

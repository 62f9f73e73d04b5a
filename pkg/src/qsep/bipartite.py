"""Bipartite separability criteria from MUMs, MUBs and GSIC-POVMs.

The left-hand side ``J(rho)`` sums ``Tr(P_n^(b) x Q_m^(c) rho)`` over a
selection that pairs every A-measurement ``b`` with ``t`` distinct
B-measurements ``c`` and, inside each pair, every A-outcome ``n`` with
``s`` distinct B-outcomes ``m``. Different measurement pairs share no
outcome constraints, so the maximum over selections splits into an
outcome matching per pair followed by one matching over measurements.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import bounds as B
from .assignment import Matching, MatchingProblem, optimal_value, solve, solve_greedy
from .linalg import TOL, DensityMatrix, partial_trace, tensor_product
from .measurements import GSICPOVM, POVM, MUBFamily, MUMFamily

VIOLATION_TOL = 1e-9
MARGINAL_TOL = 1e-6


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Selection:
    """Which B-measurements and B-outcomes accompany each A-measurement/outcome.

    ``measurement_pairing[b]`` lists the B-measurements paired with
    A-measurement ``b``; ``outcome_pairing[(b, c)][n]`` lists the
    B-outcomes paired with A-outcome ``n`` inside that measurement pair.
    """

    measurement_pairing: tuple[tuple[int, ...], ...]
    outcome_pairing: Mapping[tuple[int, int], tuple[tuple[int, ...], ...]]

    def pairs(self):
        for b, cs in enumerate(self.measurement_pairing):
            for c in cs:
                yield b, c

    def to_dict(self) -> dict:
        return {
            "measurement_pairing": [list(x) for x in self.measurement_pairing],
            "outcome_pairing": [
                {"a": b, "b": c, "outcomes": [list(o) for o in self.outcome_pairing[(b, c)]]}
                for b, c in self.pairs()
            ],
        }


@dataclass(frozen=True)
class CriterionResult:
    theorem: str
    lhs: float
    bound: float
    violated: bool
    marginal: bool
    selection: object = None
    params: object = None
    bounds: Mapping[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        sel = self.selection.to_dict() if self.selection is not None else None
        params = self.params.as_dict() if self.params is not None else None
        return {
            "theorem": self.theorem,
            "lhs": self.lhs,
            "bound": self.bound,
            "violated": self.violated,
            "marginal": self.marginal,
            "bounds": dict(self.bounds),
            "params": params,
            "selection": sel,
            "notes": list(self.notes),
        }


def verdict(theorem: str, lhs: float, bound: float, **kw) -> CriterionResult:
    gap = lhs - bound
    return CriterionResult(
        theorem, float(lhs), float(bound), bool(gap > VIOLATION_TOL), bool(abs(gap) <= MARGINAL_TOL), **kw
    )


# -- weights ----------------------------------------------------------------


def family_elements(family) -> np.ndarray:
    """Stacked elements ``(n_measurements, n_outcomes, d, d)`` of any family."""
    if isinstance(family, POVM):
        return family.elements[None]
    if isinstance(family, (MUMFamily, MUBFamily, GSICPOVM)):
        return family.stacked()
    arr = np.asarray(family)
    if arr.ndim == 3:
        return arr[None]
    if arr.ndim == 4:
        return arr
    raise TypeError(f"cannot interpret {type(family).__name__} as a measurement family")


def weight_table(op: np.ndarray, EA: np.ndarray, EB: np.ndarray) -> np.ndarray:
    """``W[b, n, c, m] = Tr((EA[b,n] x EB[c,m]) op)`` for an operator on ``C^d x C^d'``."""
    d, dp = EA.shape[-1], EB.shape[-1]
    X = np.asarray(op).reshape(d, dp, d, dp)
    W = np.einsum("bnij,cmkl,jlik->bncm", EA, EB, X, optimize=True)
    if np.max(np.abs(W.imag), initial=0.0) > TOL.imaginary:
        raise ValueError("pair weights have a non-negligible imaginary part")
    return np.ascontiguousarray(W.real)


def delta_operator(rho: DensityMatrix) -> np.ndarray:
    """``rho - rho_A x rho_B``."""
    ra = partial_trace(rho, [0]).matrix
    rb = partial_trace(rho, [1]).matrix
    return rho.matrix - tensor_product(ra, rb)


def _check_bipartite(rho: DensityMatrix, d: int, dp: int) -> None:
    if tuple(rho.dims) != (d, dp):
        raise DimensionMismatchError(f"state dims {list(rho.dims)} do not match measurement dims {[d, dp]}")
    if d > dp:
        raise DimensionMismatchError(f"first subsystem must be the smaller one: {d} > {dp}")


# -- two-level maximization -------------------------------------------------


def best_two_level(W: np.ndarray, s: int, t: int, mode: str = "exact") -> tuple[float, Selection]:
    """Maximize the selection sum over a weight table ``W[b, n, c, m]``."""
    M, D, Mp, Dp = W.shape
    if D * s > Dp:
        raise ValueError(f"infeasible outcome capacity: {D} x {s} > {Dp}")
    if M * t > Mp:
        raise ValueError(f"infeasible measurement capacity: {M} x {t} > {Mp}")
    table = np.empty((M, Mp))
    for b in range(M):
        for c in range(Mp):
            w = W[b, :, c, :]
            table[b, c] = optimal_value(w, s) if mode == "exact" else solve_greedy(MatchingProblem(w, s)).value
    outer = solve(MatchingProblem(table, t), mode)
    outcome = {}
    total = 0.0
    for b, c in outer.pairs():
        inner = solve(MatchingProblem(W[b, :, c, :], s), mode)
        outcome[(b, c)] = inner.assignment
        total += inner.value
    return total, Selection(outer.assignment, outcome)


def selection_sum(W: np.ndarray, selection: Selection) -> float:
    total = 0.0
    for b, c in selection.pairs():
        for n, ms in enumerate(selection.outcome_pairing[(b, c)]):
            for m in ms:
                total += W[b, n, c, m]
    return float(total)


def check_selection(selection: Selection, M: int, Mp: int, D: int, Dp: int, s: int, t: int) -> None:
    if len(selection.measurement_pairing) != M:
        raise ValueError(f"selection covers {len(selection.measurement_pairing)} A-measurements, expected {M}")
    used = [c for cs in selection.measurement_pairing for c in cs]
    if any(len(cs) != t for cs in selection.measurement_pairing) or len(set(used)) != len(used):
        raise ValueError("each A-measurement needs t distinct, unshared B-measurements")
    if any(not 0 <= c < Mp for c in used):
        raise ValueError("B-measurement index out of range")
    for b, c in selection.pairs():
        outs = selection.outcome_pairing[(b, c)]
        flat = [m for ms in outs for m in ms]
        if len(outs) != D or any(len(ms) != s for ms in outs) or len(set(flat)) != len(flat):
            raise ValueError(f"outcome pairing for measurement pair {(b, c)} is not admissible")
        if any(not 0 <= m < Dp for m in flat):
            raise ValueError("B-outcome index out of range")


def random_selection(rng: np.random.Generator, M: int, Mp: int, D: int, Dp: int, s: int, t: int) -> Selection:
    perm = rng.permutation(Mp)
    meas = tuple(tuple(sorted(int(x) for x in perm[b * t:(b + 1) * t])) for b in range(M))
    outcome = {}
    for b, cs in enumerate(meas):
        for c in cs:
            op = rng.permutation(Dp)
            outcome[(b, c)] = tuple(tuple(sorted(int(x) for x in op[n * s:(n + 1) * s])) for n in range(D))
    return Selection(meas, outcome)


def pair_value(
    povm_a, povm_b, rho: DensityMatrix, s: int, absolute: bool = False, delta: bool = False, mode: str = "exact"
) -> tuple[float, Matching]:
    """Best outcome matching for a single measurement pair."""
    EA, EB = family_elements(povm_a), family_elements(povm_b)
    if EA.shape[0] != 1 or EB.shape[0] != 1:
        raise ValueError("pair_value takes one POVM per side")
    _check_bipartite(rho, EA.shape[-1], EB.shape[-1])
    op = delta_operator(rho) if delta else rho.matrix
    W = weight_table(op, EA, EB)[0, :, 0, :]
    if absolute:
        W = np.abs(W)
    if W.shape[0] * s > W.shape[1]:
        raise ValueError(f"infeasible s={s}: {W.shape[0]} x {s} > {W.shape[1]} outcomes")
    m = solve(MatchingProblem(W, s), mode)
    return m.value, m


def _split(famA, famB) -> tuple[np.ndarray, np.ndarray, int, int]:
    EA, EB = family_elements(famA), family_elements(famB)
    d, dp = EA.shape[-1], EB.shape[-1]
    if d > dp:
        raise DimensionMismatchError(f"first subsystem must be the smaller one: {d} > {dp}")
    return EA, EB, dp // d, EB.shape[0] // EA.shape[0]


def maximize_J(rho: DensityMatrix, famA, famB, mode: str = "exact") -> tuple[float, Selection]:
    EA, EB, s, t = _split(famA, famB)
    _check_bipartite(rho, EA.shape[-1], EB.shape[-1])
    if EA.shape[0] > EB.shape[0]:
        raise DimensionMismatchError(f"need M <= M': {EA.shape[0]} > {EB.shape[0]}")
    return best_two_level(weight_table(rho.matrix, EA, EB), s, t, mode)


def selection_value(rho: DensityMatrix, famA, famB, selection: Selection, delta: bool = False) -> float:
    """Selection sum at a fixed selection; with ``delta`` the absolute-value sum over ``rho - rho_A x rho_B``."""
    EA, EB, s, t = _split(famA, famB)
    _check_bipartite(rho, EA.shape[-1], EB.shape[-1])
    check_selection(selection, EA.shape[0], EB.shape[0], EA.shape[1], EB.shape[1], s, t)
    if delta:
        return selection_sum(np.abs(weight_table(delta_operator(rho), EA, EB)), selection)
    return selection_sum(weight_table(rho.matrix, EA, EB), selection)


# -- criteria ---------------------------------------------------------------


def _as_mum(fam) -> MUMFamily:
    if isinstance(fam, MUBFamily):
        return fam.as_mum()
    if not isinstance(fam, MUMFamily):
        raise TypeError(f"expected a MUM or MUB family, got {type(fam).__name__}")
    return fam


def mum_params(famA, famB) -> B.CriterionParams:
    A, Bf = _as_mum(famA), _as_mum(famB)
    return B.CriterionParams.for_mum(A.dim, Bf.dim, A.count, Bf.count, A.kappa, Bf.kappa)


def evaluate_th1(rho, famA, famB, mode: str = "exact") -> CriterionResult:
    p = mum_params(famA, famB)
    J, sel = maximize_J(rho, _as_mum(famA), _as_mum(famB), mode)
    return verdict("T1", J, B.th1_bound(p), selection=sel, params=p)


def evaluate_th2(rho, famA, famB, mode: str = "exact") -> CriterionResult:
    p = mum_params(famA, famB)
    J, sel = maximize_J(rho, _as_mum(famA), _as_mum(famB), mode)
    return verdict("T2", J, B.th2_bound(p), selection=sel, params=p)


def evaluate_sr(rho, famA, famB, mode: str = "exact") -> CriterionResult:
    """Earlier equal-count criterion, for comparison.

    It needs ``M = M'``; when the B-family is larger only its first ``M``
    measurements are used.
    """
    A, Bf = _as_mum(famA), _as_mum(famB)
    notes = ()
    if Bf.count > A.count:
        Bf = MUMFamily(Bf.dim, Bf.kappa, Bf.povms[: A.count])
        notes = (f"B-family truncated to its first {A.count} measurements (comparison bound needs M = M')",)
    p = mum_params(A, Bf)
    J, sel = maximize_J(rho, A, Bf, mode)
    return verdict("SR-T2", J, B.sr_bound(p), selection=sel, params=p, notes=notes)


def evaluate_mub(rho, famA: MUBFamily, famB: MUBFamily, mode: str = "exact") -> CriterionResult:
    if not (isinstance(famA, MUBFamily) and isinstance(famB, MUBFamily)):
        raise TypeError("the MUB criterion takes two MUBFamily instances")
    p = B.CriterionParams.for_mum(famA.dim, famB.dim, famA.count, famB.count)
    J, sel = maximize_J(rho, famA, famB, mode)
    return verdict("T2-MUB", J, B.th2_mub_bound(p), selection=sel, params=p)


def evaluate_gsic(rho, povmA: GSICPOVM, povmB: GSICPOVM, mode: str = "exact") -> CriterionResult:
    if not (isinstance(povmA, GSICPOVM) and isinstance(povmB, GSICPOVM)):
        raise TypeError("the GSIC criterion takes two GSICPOVM instances")
    if povmA.dim > povmB.dim:
        raise DimensionMismatchError(f"first subsystem must be the smaller one: {povmA.dim} > {povmB.dim}")
    p = B.CriterionParams.for_gsic(povmA.dim, povmB.dim, povmA.a, povmB.a)
    _check_bipartite(rho, povmA.dim, povmB.dim)
    W = weight_table(rho.matrix, povmA.stacked(), povmB.stacked())
    J, sel = best_two_level(W, p.s, 1, mode)
    return verdict("T2-GSIC", J, B.th2_gsic_bound(p), selection=sel, params=p)


def evaluate_th3(rho, famA, famB, mode: str = "exact", selection: Selection | None = None) -> CriterionResult:
    """Marginal-corrected criterion on ``rho - rho_A x rho_B``.

    By default the absolute-value sum is maximized over selections; pass
    ``selection`` to evaluate one fixed selection instead.
    """
    A, Bf = _as_mum(famA), _as_mum(famB)
    p = mum_params(A, Bf)
    EA, EB = A.stacked(), Bf.stacked()
    _check_bipartite(rho, A.dim, Bf.dim)
    W = np.abs(weight_table(delta_operator(rho), EA, EB))
    if selection is None:
        S, sel = best_two_level(W, p.s, p.t, mode)
    else:
        check_selection(selection, p.M, p.M_prime, p.d, p.d_prime, p.s, p.t)
        S, sel = selection_sum(W, selection), selection
    sa = B.mum_index_sum(A, partial_trace(rho, [0]))
    sb = B.mum_index_sum(Bf, partial_trace(rho, [1]))
    bound, clamped = B.th3_bound(p, sa, sb)
    notes = ("negative radicand clamped to zero",) if clamped else ()
    return verdict(
        "T3", S, bound, selection=sel, params=p,
        bounds={"marginal_sum_a": sa, "marginal_sum_b": sb}, notes=notes,
    )


BIPARTITE = {
    "t1": evaluate_th1,
    "t2": evaluate_th2,
    "sr": evaluate_sr,
    "t2-mub": evaluate_mub,
    "t2-gsic": evaluate_gsic,
    "t3": evaluate_th3,
}

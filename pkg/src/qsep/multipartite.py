"""Full-separability criteria for m-partite states.

For party ``k`` a selection fixes, for every ``j < M`` and ``i < D``, the
operator ``A_k(j, i) = sum_q sum_p P_k[meas(j, q)][out(i, p)]``. The
left-hand side is ``J = sum_{j,i} Tr((A_1(j,i) x ... x A_m(j,i)) rho)``.

Maximizing over selections couples all parties, so three strategies are
offered. ``canonical`` uses the identity-order selection. ``greedy`` does
coordinate ascent: with the other parties fixed, ``J`` is linear in one
party's selection and that party's best response is the same two-level
matching as the bipartite case. ``exhaustive`` enumerates every selection
of all parties but one and best-responds the remaining party.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import bounds as B
from .assignment import count_assignments, iter_assignments, optimal_value
from .bipartite import CriterionResult, DimensionMismatchError, best_two_level, verdict
from .linalg import DensityMatrix
from .measurements import GSICPOVM, MUBFamily, MUMFamily

EXHAUSTIVE_LIMIT = 10**6
MAX_SWEEPS = 20
IMPROVEMENT_TOL = 1e-12
STRATEGIES = ("canonical", "greedy", "exhaustive")


class ExhaustiveGuardError(ValueError):
    pass


@dataclass(frozen=True)
class MultipartiteParams:
    kind: str
    dims: tuple[int, ...]
    counts: tuple[int, ...]
    efficiency: tuple[float, ...]
    d: int
    M: int
    s: tuple[int, ...]
    t: tuple[int, ...]
    r1: tuple[int, ...]
    r2: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def n_terms(self) -> int:
        """Number of A-side outcome labels ``i`` per measurement label ``j``."""
        return self.d**2 if self.kind == "gsic" else self.d

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class PartySelection:
    measurement_map: tuple[tuple[int, ...], ...]
    outcome_map: Mapping[int, tuple[tuple[int, ...], ...]]

    def to_dict(self) -> dict:
        return {
            "measurements": [list(x) for x in self.measurement_map],
            "outcomes": {str(b): [list(o) for o in self.outcome_map[b]] for b in sorted(self.outcome_map)},
        }


@dataclass(frozen=True)
class MultiSelection:
    parties: tuple[PartySelection, ...]

    def to_dict(self) -> dict:
        return {"parties": [p.to_dict() for p in self.parties]}


def multipartite_params(families: Sequence) -> MultipartiteParams:
    if len(families) < 2:
        raise ValueError("multipartite criteria need at least two parties")
    kinds = {"gsic" if isinstance(f, GSICPOVM) else "mum" for f in families}
    if len(kinds) != 1:
        raise TypeError("cannot mix GSIC-POVMs with MUM/MUB families")
    dims = tuple(f.dim for f in families)
    d = min(dims)
    if kinds == {"gsic"}:
        split = [divmod(dk * dk, d * d) for dk in dims]
        return MultipartiteParams(
            "gsic", dims, (1,) * len(dims), tuple(f.a for f in families), d, 1,
            tuple(x[0] for x in split), (1,) * len(dims), tuple(x[1] for x in split), (0,) * len(dims),
        )
    counts = tuple(f.count for f in families)
    M = min(counts)
    sd = [divmod(dk, d) for dk in dims]
    tm = [divmod(Mk, M) for Mk in counts]
    return MultipartiteParams(
        "mum", dims, counts, tuple(float(f.kappa) for f in families), d, M,
        tuple(x[0] for x in sd), tuple(x[0] for x in tm), tuple(x[1] for x in sd), tuple(x[1] for x in tm),
    )


# -- bounds -----------------------------------------------------------------


def th4_bounds(p: MultipartiteParams) -> tuple[float, float]:
    """Averaged bound and pairwise (Cauchy-Schwarz) bound for MUM families."""
    st = [p.s[k] * p.t[k] for k in range(p.m)]
    prod = math.prod(st)
    K = [B.mum_pure_bound(p.counts[k], p.dims[k], p.efficiency[k]) for k in range(p.m)]
    avg = sum(prod / st[k] * K[k] for k in range(p.m)) / p.m
    pair = min(
        prod * math.sqrt(K[a] / st[a]) * math.sqrt(K[b] / st[b])
        for a, b in itertools.combinations(range(p.m), 2)
    )
    return avg, pair


def th4_mub_bound(p: MultipartiteParams) -> float:
    st = [p.s[k] * p.t[k] for k in range(p.m)]
    prod = math.prod(st)
    K = [B.mub_index_bound(p.counts[k], p.dims[k]) for k in range(p.m)]
    return min(
        prod * math.sqrt(K[a] / st[a]) * math.sqrt(K[b] / st[b])
        for a, b in itertools.combinations(range(p.m), 2)
    )


def th4_gsic_bound(p: MultipartiteParams) -> float:
    prod = math.prod(p.s)
    g = [B.gsic_pure_value(p.efficiency[k], p.dims[k]) for k in range(p.m)]
    return min(
        prod * math.sqrt(g[a] / p.s[a]) * math.sqrt(g[b] / p.s[b])
        for a, b in itertools.combinations(range(p.m), 2)
    )


# -- selection machinery ----------------------------------------------------


class _Problem:
    def __init__(self, rho: DensityMatrix, families: Sequence, p: MultipartiteParams):
        self.p = p
        self.E = [f.stacked() for f in families]
        self.m = p.m
        self.rho = rho.matrix.reshape(p.dims + p.dims)
        letters = iter("abcdefghijklmnopqrstuvwxy")
        self.u = [next(letters) for _ in range(self.m)]  # operator row indices
        self.v = [next(letters) for _ in range(self.m)]  # operator column indices
        self.rho_sub = "".join(self.v) + "".join(self.u)

    def n_outcomes(self, k: int) -> int:
        return self.E[k].shape[1]

    def canonical(self, k: int) -> PartySelection:
        s, t, D = self.p.s[k], self.p.t[k], self.p.n_terms
        meas = tuple(tuple(range(j * t, (j + 1) * t)) for j in range(self.p.M))
        outs = tuple(tuple(range(i * s, (i + 1) * s)) for i in range(D))
        return PartySelection(meas, {b: outs for bs in meas for b in bs})

    def operators(self, k: int, sel: PartySelection) -> np.ndarray:
        E = self.E[k]
        dk = E.shape[-1]
        A = np.zeros((self.p.M, self.p.n_terms, dk, dk), dtype=complex)
        for j, bs in enumerate(sel.measurement_map):
            for b in bs:
                for i, ns in enumerate(sel.outcome_map[b]):
                    for n in ns:
                        A[j, i] += E[b, n]
        return A

    def value(self, ops: Sequence[np.ndarray]) -> float:
        flat = [A.reshape((-1,) + A.shape[2:]) for A in ops]
        subs = ",".join("z" + self.u[k] + self.v[k] for k in range(self.m))
        val = np.einsum(subs + "," + self.rho_sub + "->", *flat, self.rho, optimize=True)
        return float(val.real)

    def weights(self, k: int, ops: Sequence[np.ndarray]) -> np.ndarray:
        """``W[j, i, b, n]``: contribution of ``E_k[b, n]`` to term ``(j, i)``."""
        others = [l for l in range(self.m) if l != k]
        flat = [ops[l].reshape((-1,) + ops[l].shape[2:]) for l in others]
        subs = ",".join("z" + self.u[l] + self.v[l] for l in others)
        sigma = np.einsum(
            subs + "," + self.rho_sub + "->z" + self.v[k] + self.u[k], *flat, self.rho, optimize=True
        )
        W = np.einsum("bnuv,zvu->zbn", self.E[k], sigma, optimize=True).real
        M, D = self.p.M, self.p.n_terms
        return W.reshape(M, D, *W.shape[1:])

    def best_response(self, k: int, ops: Sequence[np.ndarray]) -> tuple[float, PartySelection]:
        W = self.weights(k, ops)
        val, sel = best_two_level(W, self.p.s[k], self.p.t[k], "exact")
        outcome = {c: sel.outcome_pairing[(j, c)] for j, c in sel.pairs()}
        return val, PartySelection(sel.measurement_pairing, outcome)

    def best_response_value(self, k: int, ops: Sequence[np.ndarray]) -> float:
        W = self.weights(k, ops)
        s = self.p.s[k]
        M, _, Mk, _ = W.shape
        table = np.array([[optimal_value(W[j, :, c, :], s) for c in range(Mk)] for j in range(M)])
        return optimal_value(table, self.p.t[k])

    def party_count(self, k: int) -> int:
        p = self.p
        meas = count_assignments(p.M, self.E[k].shape[0], p.t[k])
        outs = count_assignments(p.n_terms, self.n_outcomes(k), p.s[k])
        return meas * outs ** (p.M * p.t[k])

    def iter_party(self, k: int):
        p = self.p
        outs = list(iter_assignments(p.n_terms, self.n_outcomes(k), p.s[k]))
        for meas in iter_assignments(p.M, self.E[k].shape[0], p.t[k]):
            used = [b for bs in meas for b in bs]
            for combo in itertools.product(outs, repeat=len(used)):
                yield PartySelection(meas, dict(zip(used, combo)))


def _check_state(rho: DensityMatrix, families: Sequence) -> None:
    dims = tuple(f.dim for f in families)
    if tuple(rho.dims) != dims:
        raise DimensionMismatchError(f"state dims {list(rho.dims)} do not match measurement dims {list(dims)}")


def _prepare(rho, families) -> _Problem:
    families = [f.as_mum() if isinstance(f, MUBFamily) else f for f in families]
    p = multipartite_params(families)
    _check_state(rho, families)
    return _Problem(rho, families, p)


def maximize_multi(rho: DensityMatrix, families: Sequence, strategy: str = "greedy") -> tuple[float, MultiSelection]:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    prob = _prepare(rho, families)
    m = prob.m
    sels = [prob.canonical(k) for k in range(m)]
    ops = [prob.operators(k, sels[k]) for k in range(m)]
    value = prob.value(ops)

    if strategy == "greedy":
        for _ in range(MAX_SWEEPS):
            improved = False
            for k in range(m):
                val, sel = prob.best_response(k, ops)
                if val > value + IMPROVEMENT_TOL:
                    sels[k], ops[k], value, improved = sel, prob.operators(k, sel), val, True
            if not improved:
                break

    elif strategy == "exhaustive":
        counts = [prob.party_count(k) for k in range(m)]
        total = math.prod(counts)
        if total > EXHAUSTIVE_LIMIT:
            raise ExhaustiveGuardError(f"exhaustive search over {total} selections exceeds {EXHAUSTIVE_LIMIT}")
        last = max(range(m), key=lambda k: (counts[k], k))
        rest = [k for k in range(m) if k != last]
        cached = {k: [(sel, prob.operators(k, sel)) for sel in prob.iter_party(k)] for k in rest}
        best, best_combo = -math.inf, None
        for combo in itertools.product(*(cached[k] for k in rest)):
            trial = list(ops)
            for k, (_, A) in zip(rest, combo):
                trial[k] = A
            val = prob.best_response_value(last, trial)
            if val > best + IMPROVEMENT_TOL:
                best, best_combo = val, combo
        for k, (sel, A) in zip(rest, best_combo):
            sels[k], ops[k] = sel, A
        _, sels[last] = prob.best_response(last, ops)
        ops[last] = prob.operators(last, sels[last])
        value = prob.value(ops)

    return value, MultiSelection(tuple(sels))


def multi_selection_value(rho: DensityMatrix, families: Sequence, selection: MultiSelection) -> float:
    prob = _prepare(rho, families)
    if len(selection.parties) != prob.m:
        raise ValueError(f"selection has {len(selection.parties)} parties, expected {prob.m}")
    return prob.value([prob.operators(k, s) for k, s in enumerate(selection.parties)])


def evaluate_th4(rho: DensityMatrix, families: Sequence, strategy: str = "greedy") -> CriterionResult:
    """MUM criterion; the verdict uses the smaller of the two proven bounds."""
    fams = [f.as_mum() if isinstance(f, MUBFamily) else f for f in families]
    if not all(isinstance(f, MUMFamily) for f in fams):
        raise TypeError("the MUM multipartite criterion takes MUM or MUB families")
    p = multipartite_params(fams)
    J, sel = maximize_multi(rho, fams, strategy)
    avg, pair = th4_bounds(p)
    return verdict(
        "T4", J, min(avg, pair), selection=sel, params=p,
        bounds={"average": avg, "pairwise": pair}, notes=(f"strategy={strategy}",),
    )


def evaluate_th4_mub(rho: DensityMatrix, families: Sequence, strategy: str = "greedy") -> CriterionResult:
    if not all(isinstance(f, MUBFamily) for f in families):
        raise TypeError("the MUB multipartite criterion takes MUBFamily instances")
    p = multipartite_params([f.as_mum() for f in families])
    J, sel = maximize_multi(rho, families, strategy)
    return verdict("T4-MUB", J, th4_mub_bound(p), selection=sel, params=p, notes=(f"strategy={strategy}",))


def evaluate_th4_gsic(rho: DensityMatrix, povms: Sequence, strategy: str = "greedy") -> CriterionResult:
    if not all(isinstance(f, GSICPOVM) for f in povms):
        raise TypeError("the GSIC multipartite criterion takes GSICPOVM instances")
    p = multipartite_params(povms)
    J, sel = maximize_multi(rho, povms, strategy)
    return verdict(
        "T4-GSIC", J, th4_gsic_bound(p), selection=sel, params=p,
        notes=(f"strategy={strategy}", "outcome multiplicities s_k = floor(d_k^2 / d^2) with d = min_k d_k"),
    )


MULTIPARTITE = {
    "t4": evaluate_th4,
    "t4-mub": evaluate_th4_mub,
    "t4-gsic": evaluate_th4_gsic,
}

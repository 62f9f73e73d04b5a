"""Capacity-constrained maximum-weight matchings.

Each of ``nA`` left items receives exactly ``capacity`` distinct right
items and no right item is used twice. The exact solver replicates every
left item ``capacity`` times and solves the resulting rectangular
assignment problem.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

ENUMERATION_LIMIT = 8


class InfeasibleProblemError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MatchingProblem:
    weights: np.ndarray
    capacity: int = 1

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise InfeasibleProblemError(f"weights must be a non-empty matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InfeasibleProblemError("weights must be finite")
        if self.capacity < 1 or w.shape[0] * self.capacity > w.shape[1]:
            raise InfeasibleProblemError(
                f"{w.shape[0]} items x capacity {self.capacity} exceeds {w.shape[1]} targets"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


@dataclass(frozen=True)
class Matching:
    assignment: tuple[tuple[int, ...], ...]
    value: float

    def pairs(self) -> Iterator[tuple[int, int]]:
        for i, cols in enumerate(self.assignment):
            for j in cols:
                yield i, j


def matching_value(weights: np.ndarray, assignment: Sequence[Sequence[int]]) -> float:
    return float(sum(weights[i, j] for i, cols in enumerate(assignment) for j in cols))


def _make(weights: np.ndarray, assignment) -> Matching:
    assignment = tuple(tuple(sorted(int(j) for j in cols)) for cols in assignment)
    return Matching(assignment, matching_value(weights, assignment))


def _lsa(weights: np.ndarray, caps: Sequence[int], cols: np.ndarray):
    """Optimal value and assignment over the allowed columns ``cols``."""
    rows = np.repeat(np.arange(len(caps)), caps)
    if rows.size == 0:
        return 0.0, [[] for _ in caps]
    sub = weights[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    out = [[] for _ in caps]
    for ri, ci in zip(r, c):
        out[rows[ri]].append(int(cols[ci]))
    return float(sub[r, c].sum()), out


def optimal_value(weights: np.ndarray, capacity: int) -> float:
    """Optimal total weight without tie-breaking; the fast path for inner loops."""
    rows = np.repeat(np.arange(weights.shape[0]), capacity)
    sub = weights[rows]
    r, c = linear_sum_assignment(sub, maximize=True)
    return float(sub[r, c].sum())


def solve_exact(problem: MatchingProblem) -> Matching:
    """Globally optimal matching, lexicographically smallest among optima.

    Lexicographic order is over the per-item sorted index tuples. The
    minimum is found by fixing one (item, target) pair at a time and
    re-solving the reduced problem to check the optimum is still reached.
    """
    w = problem.weights
    nA, nB = w.shape
    c = problem.capacity
    best, _ = _lsa(w, [c] * nA, np.arange(nB))
    tol = 1e-12 * max(float(np.max(np.abs(w))), 1e-300) * nA * c

    caps = [c] * nA
    free = list(range(nB))
    fixed_value = 0.0
    chosen: list[list[int]] = [[] for _ in range(nA)]
    for i in range(nA):
        for _ in range(c):
            floor = chosen[i][-1] if chosen[i] else -1
            for j in free:
                if j <= floor:
                    continue
                caps[i] -= 1
                rest = [x for x in free if x != j]
                val, _ = _lsa(w, caps, np.array(rest, dtype=int))
                if fixed_value + w[i, j] + val >= best - tol:
                    chosen[i].append(j)
                    fixed_value += w[i, j]
                    free = rest
                    break
                caps[i] += 1
            else:  # pragma: no cover - the optimum always admits a completion
                raise RuntimeError("tie-breaking failed to reproduce the optimum")
    return _make(w, chosen)


def solve_greedy(problem: MatchingProblem) -> Matching:
    """Take edges by descending weight, ties by (item, target) index."""
    w = problem.weights
    nA, nB = w.shape
    order = sorted(((-w[i, j], i, j) for i in range(nA) for j in range(nB)))
    left = [problem.capacity] * nA
    used = set()
    chosen: list[list[int]] = [[] for _ in range(nA)]
    for _, i, j in order:
        if left[i] and j not in used:
            chosen[i].append(j)
            left[i] -= 1
            used.add(j)
    return _make(w, chosen)


def solve(problem: MatchingProblem, mode: str = "exact") -> Matching:
    if mode == "exact":
        return solve_exact(problem)
    if mode == "greedy":
        return solve_greedy(problem)
    raise ValueError(f"unknown mode {mode!r}; expected 'exact' or 'greedy'")


def iter_assignments(n_items: int, n_targets: int, capacity: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every way to give each item ``capacity`` distinct unused targets."""

    def rec(i, free):
        if i == n_items:
            yield ()
            return
        for combo in itertools.combinations(free, capacity):
            rest = tuple(x for x in free if x not in combo)
            for tail in rec(i + 1, rest):
                yield (combo,) + tail

    yield from rec(0, tuple(range(n_targets)))


def count_assignments(n_items: int, n_targets: int, capacity: int) -> int:
    from math import comb

    total, free = 1, n_targets
    for _ in range(n_items):
        total *= comb(free, capacity)
        free -= capacity
    return total


def enumerate_matchings(problem: MatchingProblem) -> Iterator[Matching]:
    nA, nB = problem.shape
    if nB > ENUMERATION_LIMIT or nA * problem.capacity > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration guard: need nB <= {ENUMERATION_LIMIT} and nA*c <= {ENUMERATION_LIMIT}")
    for a in iter_assignments(nA, nB, problem.capacity):
        yield _make(problem.weights, a)

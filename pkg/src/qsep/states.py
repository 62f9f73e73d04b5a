"""Parametric test states and the PPT oracle.

Random draws use ``numpy.random.Generator(PCG64(seed))``; the same
``StateSpec`` always yields a bit-identical matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from .linalg import TOL, DensityMatrix, min_eigenvalue, partial_transpose, tensor_product

FAMILIES = ("pure-random", "product", "separable-mixture", "isotropic", "embedded-max-entangled", "ghz")
PRNG = "numpy.PCG64"


@dataclass(frozen=True)
class StateSpec:
    family: str
    dims: tuple[int, ...]
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "params", dict(self.params))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown state family {self.family!r}; expected one of {FAMILIES}")
        if not self.dims or any(d < 2 for d in self.dims):
            raise ValueError(f"every subsystem dimension must be at least 2, got {self.dims}")
        p = self.params.get("p")
        if p is not None and not 0 <= p <= 1:
            raise ValueError(f"noise parameter p must lie in [0, 1], got {p}")
        terms = self.params.get("terms")
        if terms is not None and (terms < 1 or int(terms) != terms):
            raise ValueError(f"term count must be a positive integer, got {terms}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {"family": self.family, "dims": list(self.dims), "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "StateSpec":
        return cls(data["family"], tuple(data["dims"]), dict(data.get("params", {})), int(data.get("seed", 0)))


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed mixed state of the given rank (full rank by default)."""
    k = dim if rank is None else rank
    G = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_product_ket(dims, rng: np.random.Generator) -> np.ndarray:
    return tensor_product(*(random_ket(d, rng)[:, None] for d in dims)).ravel()


def max_entangled_ket(d: int, d_prime: int | None = None) -> np.ndarray:
    """``sum_i |i>|i> / sqrt(d)`` in ``C^d x C^d'`` (support on the first d B-levels)."""
    dp = d if d_prime is None else d_prime
    psi = np.zeros(d * dp, dtype=complex)
    psi[[i * dp + i for i in range(d)]] = 1 / np.sqrt(d)
    return psi


def isotropic(d: int, p: float) -> DensityMatrix:
    return embedded(d, d, p)


def embedded(d: int, d_prime: int, p: float) -> DensityMatrix:
    psi = max_entangled_ket(d, d_prime)
    n = d * d_prime
    return DensityMatrix(p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(n) / n, (d, d_prime))


def ghz(dims, p: float = 1.0) -> DensityMatrix:
    d = min(dims)
    n = int(np.prod(dims))
    psi = np.zeros(n, dtype=complex)
    for i in range(d):
        idx = np.ravel_multi_index(tuple([i] * len(dims)), dims)
        psi[idx] = 1 / np.sqrt(d)
    return DensityMatrix(p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(n) / n, dims)


def separable_mixture(dims, terms: int, rng: np.random.Generator) -> DensityMatrix:
    weights = rng.dirichlet(np.ones(terms))
    n = int(np.prod(dims))
    rho = np.zeros((n, n), dtype=complex)
    for w in weights:
        psi = random_product_ket(dims, rng)
        rho += w * np.outer(psi, psi.conj())
    return DensityMatrix(rho, dims)


def generate(spec: StateSpec) -> DensityMatrix:
    rng = rng_for(spec.seed)
    dims, params = spec.dims, spec.params
    fam = spec.family
    if fam == "pure-random":
        return DensityMatrix.from_ket(random_ket(int(np.prod(dims)), rng), dims)
    if fam == "product":
        return DensityMatrix.from_ket(random_product_ket(dims, rng), dims)
    if fam == "separable-mixture":
        return separable_mixture(dims, int(params.get("terms", 4)), rng)
    p = float(params.get("p", 1.0))
    if fam == "isotropic":
        if len(dims) != 2 or dims[0] != dims[1]:
            raise ValueError(f"isotropic states live on d x d, got dims {dims}")
        return isotropic(dims[0], p)
    if fam == "embedded-max-entangled":
        if len(dims) != 2 or dims[0] > dims[1]:
            raise ValueError(f"embedded states need dims (d, d') with d <= d', got {dims}")
        return embedded(dims[0], dims[1], p)
    return ghz(dims, p)


@dataclass(frozen=True)
class PPTVerdict:
    ppt: bool
    min_eigenvalue: float

    def __str__(self) -> str:
        return "PPT" if self.ppt else f"NPT({self.min_eigenvalue:.6g})"


def ppt_check(rho: DensityMatrix, cut=(1,)) -> PPTVerdict:
    lam = min_eigenvalue(partial_transpose(rho, cut))
    return PPTVerdict(lam >= -TOL.psd, lam)


def all_cuts(m: int):
    """One side of every bipartition of ``m`` subsystems (each cut listed once)."""
    for size in range(1, m // 2 + 1):
        for cut in combinations(range(m), size):
            if 2 * size == m and 0 not in cut:
                continue
            yield cut

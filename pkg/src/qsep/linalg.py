"""Dense complex linear algebra and the quantum primitives built on it.

Everything here works on plain ``numpy`` arrays. :class:`DensityMatrix`
bundles a validated matrix with the dimension vector of its subsystems.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    equality: float = 1e-12
    imaginary: float = 1e-10


TOL = Tolerances()


class NotHermitianError(ValueError):
    pass


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    return m


def hermiticity_residual(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a, tol: float = TOL.hermiticity) -> bool:
    a = _as_matrix(a)
    return a.shape[0] == a.shape[1] and hermiticity_residual(a) <= tol


def check_hermitian(a, tol: float = TOL.hermiticity) -> np.ndarray:
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"operator is not square: {a.shape}")
    res = hermiticity_residual(a)
    if res > tol:
        raise NotHermitianError(f"max |A - A^dag| = {res:.3e} exceeds {tol:.1e}")
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A unit-trace positive semidefinite operator on ``C^d1 x ... x C^dm``.

    The matrix is stored read-only. Construction validates hermiticity,
    trace and positivity against :data:`TOL` unless ``validate=False``.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __init__(self, matrix, dims: Iterable[int] | None = None, validate: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        dims = (m.shape[0],) if dims is None else tuple(int(x) for x in dims)
        if any(x < 1 for x in dims) or int(np.prod(dims)) != m.shape[0]:
            raise ValueError(f"dims {dims} do not match matrix size {m.shape[0]}")
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)
        if validate:
            self.validate()

    def validate(self) -> None:
        check_hermitian(self.matrix)
        tr = np.trace(self.matrix).real
        if abs(tr - 1) > TOL.trace:
            raise ValueError(f"trace {tr!r} differs from 1 by more than {TOL.trace:.0e}")
        lam = min_eigenvalue(self.matrix)
        if lam < -TOL.psd:
            raise ValueError(f"minimum eigenvalue {lam:.3e} is below -{TOL.psd:.0e}")

    @classmethod
    def from_ket(cls, psi, dims: Iterable[int] | None = None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


def _unpack(rho, dims):
    if isinstance(rho, DensityMatrix):
        return rho.matrix, rho.dims
    m = _as_matrix(rho)
    if dims is None:
        raise ValueError("dims are required when passing a bare array")
    dims = tuple(int(x) for x in dims)
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ValueError(f"dims {dims} do not match matrix shape {m.shape}")
    return m, dims


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product, first factor outermost."""
    if not ops:
        raise ValueError("need at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def _check_subsystems(idx: Iterable[int], n: int) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(i) for i in idx)))
    if not idx:
        raise ValueError("subsystem index set is empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"subsystem indices {idx} out of range for {n} subsystems")
    return idx


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None) -> DensityMatrix:
    """Reduced state on the subsystems listed in ``keep`` (kept in ascending order)."""
    m, dims = _unpack(rho, dims)
    n = len(dims)
    keep = _check_subsystems(keep, n)
    t = m.reshape(dims + dims)
    # einsum over letters: row labels a.., column labels A..; traced ones share a label
    rows = [chr(ord("a") + k) for k in range(n)]
    cols = [rows[k] if k not in keep else chr(ord("A") + k) for k in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    red = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    kd = tuple(dims[k] for k in keep)
    size = int(np.prod(kd))
    return DensityMatrix(red.reshape(size, size), kd, validate=False)


def partial_transpose(rho, cut: Iterable[int] = (1,), dims: Sequence[int] | None = None) -> np.ndarray:
    """Transpose the indices of the subsystems in ``cut``.

    ``cut`` names one side of a bipartition; it must be non-empty and
    must not contain every subsystem.
    """
    m, dims = _unpack(rho, dims)
    n = len(dims)
    cut = _check_subsystems(cut, n)
    if len(cut) == n:
        raise ValueError("cut must leave at least one subsystem untransposed")
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    for k in cut:
        axes[k], axes[n + k] = n + k, k
    return t.transpose(axes).reshape(m.shape).copy()


def min_eigenvalue(op) -> float:
    op = check_hermitian(op)
    sym = (op + op.conj().T) / 2
    return float(np.linalg.eigvalsh(sym)[0])


def purity(rho) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else _as_matrix(rho)
    return float(np.trace(m @ m).real)


def hs_inner(a, b) -> float:
    """``Tr(a b)`` for Hermitian operands; the imaginary part must vanish."""
    a = a.matrix if isinstance(a, DensityMatrix) else _as_matrix(a)
    b = b.matrix if isinstance(b, DensityMatrix) else _as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    val = np.einsum("ij,ji->", a, b)
    if abs(val.imag) > TOL.imaginary:
        raise ValueError(f"Tr(ab) has imaginary part {val.imag:.3e}")
    return float(val.real)

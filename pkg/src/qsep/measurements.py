"""Measurement families: MUBs, MUMs and GSIC-POVMs.

MUMs and GSIC-POVMs are built from the generalized Gell-Mann basis. The
closed-form recipes are not trusted on their own: every constructor runs
:func:`validate_family` and refuses to return a family whose defining
trace relations fail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .linalg import TOL

# trace relations between family elements are compared at this level
RELATION_TOL = 1e-9
SPREAD_TOL = 1e-8
BISECTION_TOL = 1e-6


class UnsupportedDimensionError(ValueError):
    pass


class InfeasibleParameterError(ValueError):
    """The requested efficiency parameter yields non-PSD elements."""

    def __init__(self, message: str, max_feasible: float):
        super().__init__(message)
        self.max_feasible = max_feasible


@dataclass(frozen=True, eq=False)
class POVM:
    dim: int
    elements: np.ndarray  # shape (n_outcomes, dim, dim)

    def __post_init__(self):
        els = np.array(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1:] != (self.dim, self.dim):
            raise ValueError(f"POVM elements must have shape (n, {self.dim}, {self.dim}), got {els.shape}")
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, n) -> np.ndarray:
        return self.elements[n]


@dataclass(frozen=True, eq=False)
class MUMFamily:
    dim: int
    kappa: float
    povms: tuple[POVM, ...]
    kind: str = field(default="mum", init=False)

    @property
    def count(self) -> int:
        return len(self.povms)

    @property
    def parameter(self) -> float:
        return self.kappa

    def stacked(self) -> np.ndarray:
        """Elements as an array of shape ``(M, d, d, d)``."""
        return np.stack([p.elements for p in self.povms])


@dataclass(frozen=True, eq=False)
class MUBFamily:
    """Orthonormal bases; ``bases[k][:, i]`` is the i-th vector of basis k."""

    dim: int
    bases: tuple[np.ndarray, ...]
    kind: str = field(default="mub", init=False)

    def __post_init__(self):
        bs = []
        for b in self.bases:
            b = np.array(b, dtype=complex)
            if b.shape != (self.dim, self.dim):
                raise ValueError(f"basis must be {self.dim}x{self.dim}, got {b.shape}")
            b.setflags(write=False)
            bs.append(b)
        object.__setattr__(self, "bases", tuple(bs))

    @property
    def count(self) -> int:
        return len(self.bases)

    @property
    def kappa(self) -> float:
        return 1.0

    parameter = kappa

    @property
    def povms(self) -> tuple[POVM, ...]:
        return tuple(
            POVM(self.dim, np.einsum("in,jn->nij", b, b.conj())) for b in self.bases
        )

    def stacked(self) -> np.ndarray:
        return np.stack([p.elements for p in self.povms])

    def as_mum(self) -> MUMFamily:
        return MUMFamily(self.dim, 1.0, self.povms)


@dataclass(frozen=True, eq=False)
class GSICPOVM:
    dim: int
    a: float
    elements: np.ndarray  # shape (dim**2, dim, dim)
    kind: str = field(default="gsic", init=False)

    def __post_init__(self):
        els = np.array(self.elements, dtype=complex)
        if els.shape != (self.dim**2, self.dim, self.dim):
            raise ValueError(f"GSIC-POVM needs {self.dim**2} elements of size {self.dim}, got {els.shape}")
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    @property
    def parameter(self) -> float:
        return self.a

    @property
    def count(self) -> int:
        return 1

    @property
    def povms(self) -> tuple[POVM, ...]:
        return (POVM(self.dim, self.elements),)

    def stacked(self) -> np.ndarray:
        return self.elements[None]


Family = Union[MUMFamily, MUBFamily, GSICPOVM]


# -- operator bases ---------------------------------------------------------


def gell_mann_basis(d: int) -> np.ndarray:
    """Traceless Hermitian operators, orthonormal under ``Tr(F_i F_j)``.

    Returns an array of shape ``(d**2 - 1, d, d)`` ordered as: symmetric
    off-diagonal pairs, antisymmetric pairs, then diagonal operators.
    """
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    c = 1 / np.sqrt(2)
    sym, anti, diag = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = c
            sym.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j * c
            a[k, j] = 1j * c
            anti.append(a)
    for l in range(1, d):
        v = np.zeros(d)
        v[:l] = 1
        v[l] = -l
        diag.append(np.diag(v / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(sym + anti + diag)


# -- MUBs -------------------------------------------------------------------


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n**0.5) + 1))


def build_mubs(d: int) -> MUBFamily:
    """Complete set of ``d + 1`` MUBs for prime ``d``.

    Qubits use the Z, X, Y eigenbases. Odd primes use the computational
    basis followed by the quadratic phase bases
    ``|psi_j^k> = d^{-1/2} sum_n w^{k n^2 + j n} |n>``.
    """
    if not _is_prime(d):
        raise UnsupportedDimensionError(f"MUB construction supports prime dimensions only, got {d}")
    if d == 2:
        s = 1 / np.sqrt(2)
        bases = [
            np.eye(2),
            np.array([[s, s], [s, -s]]),
            np.array([[s, s], [1j * s, -1j * s]]),
        ]
        family = MUBFamily(2, tuple(bases))
    else:
        n = np.arange(d)
        w = np.exp(2j * np.pi / d)
        bases = [np.eye(d)]
        for k in range(d):
            # columns indexed by j
            phase = (k * n[:, None] ** 2 + n[:, None] * n[None, :]) % d
            bases.append(w**phase / np.sqrt(d))
        family = MUBFamily(d, tuple(bases))
    _require_valid(family)
    return family


# -- MUMs and GSIC-POVMs ----------------------------------------------------


def _mum_directions(d: int) -> np.ndarray:
    """Traceless parts ``F_n^{(b)}`` of shape ``(d+1, d, d, d)``."""
    F = gell_mann_basis(d).reshape(d + 1, d - 1, d, d)
    rd = np.sqrt(d)
    out = np.empty((d + 1, d, d, d), dtype=complex)
    for b in range(d + 1):
        total = F[b].sum(axis=0)
        out[b, : d - 1] = total[None] - (d + rd) * F[b]
        out[b, d - 1] = (rd + 1) * total
    return out


def _gsic_directions(d: int) -> np.ndarray:
    F = gell_mann_basis(d)
    total = F.sum(axis=0)
    G = np.empty((d * d, d, d), dtype=complex)
    G[:-1] = total[None] - d * (d + 1) * F
    G[-1] = (d + 1) * total
    return G


def _mum_elements(d: int, kappa: float, directions: np.ndarray) -> np.ndarray:
    t = np.sqrt((kappa - 1 / d) / ((d - 1) * (1 + np.sqrt(d)) ** 2))
    return np.eye(d) / d + t * directions


def _gsic_elements(d: int, a: float, directions: np.ndarray) -> np.ndarray:
    t = np.sqrt((a - 1 / d**3) / ((d + 1) ** 2 * (d * d - 1)))
    return np.eye(d) / d**2 + t * directions


def _min_eig(elements: np.ndarray) -> float:
    sym = (elements + np.conj(np.swapaxes(elements, -1, -2))) / 2
    return float(np.linalg.eigvalsh(sym)[..., 0].min())


def _max_feasible(lo: float, hi: float, feasible) -> float:
    """Largest parameter in ``(lo, hi]`` passing ``feasible``, by bisection."""
    while hi - lo > BISECTION_TOL:
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def max_feasible_kappa(d: int) -> float:
    dirs = _mum_directions(d)
    ok = lambda k: _min_eig(_mum_elements(d, k, dirs)) >= -TOL.psd
    return 1.0 if ok(1.0) else _max_feasible(1 / d, 1.0, ok)


def max_feasible_a(d: int) -> float:
    dirs = _gsic_directions(d)
    ok = lambda a: _min_eig(_gsic_elements(d, a, dirs)) >= -TOL.psd
    hi = 1 / d**2
    return hi if ok(hi) else _max_feasible(1 / d**3, hi, ok)


def build_mums(d: int, kappa: float) -> MUMFamily:
    """Complete set of ``d + 1`` MUMs on ``C^d`` with efficiency ``kappa``."""
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if not (1 / d < kappa <= 1):
        raise ValueError(f"kappa must lie in (1/{d}, 1], got {kappa}")
    dirs = _mum_directions(d)
    els = _mum_elements(d, kappa, dirs)
    if _min_eig(els) < -TOL.psd:
        best = max_feasible_kappa(d)
        raise InfeasibleParameterError(
            f"kappa={kappa} gives non-PSD MUM elements in d={d}; max feasible kappa ~ {best:.6f}",
            best,
        )
    family = MUMFamily(d, float(kappa), tuple(POVM(d, e) for e in els))
    _require_valid(family)
    return family


def build_gsic(d: int, a: float) -> GSICPOVM:
    """GSIC-POVM with ``d**2`` elements and efficiency parameter ``a``."""
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if not (1 / d**3 < a <= 1 / d**2):
        raise ValueError(f"a must lie in (1/{d}^3, 1/{d}^2], got {a}")
    dirs = _gsic_directions(d)
    els = _gsic_elements(d, a, dirs)
    if _min_eig(els) < -TOL.psd:
        best = max_feasible_a(d)
        raise InfeasibleParameterError(
            f"a={a} gives non-PSD GSIC elements in d={d}; max feasible a ~ {best:.6f}", best
        )
    povm = GSICPOVM(d, float(a), els)
    _require_valid(povm)
    return povm


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max(c.residual for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = [f"{self.kind}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok " if c.passed else "BAD"
            lines.append(f"  [{mark}] {c.name}: residual {c.residual:.3e} (tol {c.tolerance:.0e})")
        return "\n".join(lines)


def _psd_check(els: np.ndarray) -> tuple[Check, Check]:
    herm = float(np.max(np.abs(els - np.conj(np.swapaxes(els, -1, -2)))))
    lam = _min_eig(els)
    return Check("hermitian", herm, TOL.hermiticity), Check("positive", max(0.0, -lam), TOL.psd)


def _gram(els: np.ndarray) -> np.ndarray:
    # G[x, y] = Tr(E_x E_y) for Hermitian E
    flat = els.reshape(els.shape[0], -1)
    return (flat.conj() @ flat.T).real


def _validate_mum(fam: MUMFamily) -> list[Check]:
    d, kappa = fam.dim, fam.kappa
    E = fam.stacked()  # (M, d, d, d)
    M = E.shape[0]
    checks = list(_psd_check(E.reshape(-1, d, d)))
    eye = np.eye(d)
    checks.append(Check("completeness", float(np.max(np.abs(E.sum(axis=1) - eye))), TOL.trace))
    tr = np.einsum("bnii->bn", E)
    checks.append(Check("unit trace", float(np.max(np.abs(tr - 1))), TOL.trace))
    G = _gram(E.reshape(M * d, d, d)).reshape(M, d, M, d)
    same = np.where(np.eye(d, dtype=bool), kappa, (1 - kappa) / (d - 1))
    res_same = max(float(np.max(np.abs(G[b, :, b, :] - same))) for b in range(M))
    checks.append(Check("same-measurement overlaps", res_same, RELATION_TOL))
    if M > 1:
        mask = ~np.eye(M, dtype=bool)
        cross = np.abs(G.transpose(0, 2, 1, 3)[mask] - 1 / d)
        checks.append(Check("cross-measurement overlaps", float(np.max(cross)), RELATION_TOL))
    purities = np.einsum("bnbn->bn", G)
    checks.append(Check("kappa consistency", float(np.max(np.abs(purities - kappa))), RELATION_TOL))
    return checks


def _validate_mub(fam: MUBFamily) -> list[Check]:
    d = fam.dim
    B = np.stack(fam.bases)
    eye = np.eye(d)
    ortho = max(float(np.max(np.abs(b.conj().T @ b - eye))) for b in B)
    checks = [Check("orthonormal", ortho, TOL.hermiticity)]
    if len(B) > 1:
        worst = 0.0
        for k in range(len(B)):
            for l in range(k + 1, len(B)):
                ov = np.abs(B[k].conj().T @ B[l]) ** 2
                worst = max(worst, float(np.max(np.abs(ov - 1 / d))))
        checks.append(Check("unbiased overlaps", worst, RELATION_TOL))
    return checks


def _validate_gsic(povm: GSICPOVM) -> list[Check]:
    d, a = povm.dim, povm.a
    E = povm.elements
    checks = list(_psd_check(E))
    checks.append(Check("completeness", float(np.max(np.abs(E.sum(axis=0) - np.eye(d)))), TOL.trace))
    tr = np.einsum("nii->n", E).real
    checks.append(Check("trace 1/d", float(np.max(np.abs(tr - 1 / d))), RELATION_TOL))
    G = _gram(E)
    checks.append(Check("a consistency", float(np.max(np.abs(np.diag(G) - a))), RELATION_TOL))
    off = (1 - d * a) / (d * (d * d - 1))
    mask = ~np.eye(d * d, dtype=bool)
    checks.append(Check("pairwise overlaps", float(np.max(np.abs(G[mask] - off))), RELATION_TOL))
    return checks


def validate_family(family: Family) -> ValidationReport:
    if isinstance(family, MUBFamily):
        checks = _validate_mub(family)
    elif isinstance(family, MUMFamily):
        checks = _validate_mum(family)
    elif isinstance(family, GSICPOVM):
        checks = _validate_gsic(family)
    else:
        raise TypeError(f"not a measurement family: {type(family).__name__}")
    return ValidationReport(family.kind, tuple(checks))


def _require_valid(family: Family) -> None:
    report = validate_family(family)
    if not report.passed:
        raise ValueError(f"constructed family failed validation:\n{report}")


def measured_kappa(family: MUMFamily | MUBFamily) -> float:
    """Mean of ``Tr(P^2)`` per measurement, averaged; spread must be tiny."""
    E = family.stacked()
    sq = np.einsum("bnij,bnji->bn", E, E).real
    per = sq.mean(axis=1)
    spread = float(np.ptp(sq))
    if spread > SPREAD_TOL:
        raise ValueError(f"inconsistent family: Tr(P^2) spread {spread:.3e}")
    return float(per.mean())


def measured_a(povm: GSICPOVM) -> float:
    E = povm.elements
    sq = np.einsum("nij,nji->n", E, E).real
    spread = float(np.ptp(sq))
    if spread > SPREAD_TOL:
        raise ValueError(f"inconsistent GSIC-POVM: Tr(P^2) spread {spread:.3e}")
    return float(sq.mean())


def mub_family_from_bases(bases: Sequence[np.ndarray]) -> MUBFamily:
    """Wrap arbitrary bases (e.g. products of qubit MUBs) and validate them."""
    bases = [np.asarray(b, dtype=complex) for b in bases]
    fam = MUBFamily(bases[0].shape[0], tuple(bases))
    _require_valid(fam)
    return fam

import numpy as np
import pytest

from qsep.linalg import DensityMatrix
from qsep.measurements import mub_family_from_bases

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}

# Partition of the 15 two-qubit Paulis into 5 commuting triples.
TWO_QUBIT_TRIPLES = [
    ("ZI", "IZ", "ZZ"),
    ("XI", "IX", "XX"),
    ("YI", "IY", "YY"),
    ("XZ", "ZY", "YX"),
    ("YZ", "ZX", "XY"),
]


def pauli(word):
    out = np.eye(1, dtype=complex)
    for ch in word:
        out = np.kron(out, PAULI[ch])
    return out


def two_qubit_mubs(count=5):
    """Complete set of 5 MUBs on C^4 from joint eigenbases of commuting Pauli triples."""
    bases = []
    for triple in TWO_QUBIT_TRIPLES[:count]:
        H = sum(c * pauli(w) for c, w in zip((1.0, np.pi, np.e), triple))
        _, vecs = np.linalg.eigh(H)
        bases.append(vecs)
    return mub_family_from_bases(bases)


def phi_plus(d=2):
    psi = np.zeros(d * d, dtype=complex)
    psi[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return DensityMatrix.from_ket(psi, (d, d))


def maximally_mixed(dims):
    n = int(np.prod(dims))
    return DensityMatrix(np.eye(n) / n, dims)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def report_criterion(number, passed, detail):
    ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)

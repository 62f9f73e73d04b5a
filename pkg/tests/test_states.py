import numpy as np
import pytest

from qsep.linalg import partial_trace, purity
from qsep.states import (
    StateSpec,
    all_cuts,
    embedded,
    generate,
    ghz,
    isotropic,
    ppt_check,
)

from conftest import phi_plus


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (2, 2, 2), (2, 2, 3)])
def test_separable_mixture_ppt_every_cut(dims):
    for seed in range(10):
        rho = generate(StateSpec("separable-mixture", dims, {"terms": 4}, seed))
        assert rho.dims == dims
        for cut in all_cuts(len(dims)):
            assert ppt_check(rho, cut).ppt


def test_isotropic_examples():
    np.testing.assert_allclose(isotropic(2, 0).matrix, np.eye(4) / 4, atol=1e-15)
    rho = isotropic(3, 1)
    assert purity(rho) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(partial_trace(rho, [0]).matrix, np.eye(3) / 3, atol=1e-12)


def test_isotropic_purity_elementwise():
    for p in (0.1, 0.5, 0.9):
        rho = isotropic(3, p)
        assert abs(purity(rho) - np.sum(np.abs(rho.matrix) ** 2)) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4])
def test_isotropic_npt_threshold(d):
    grid = np.linspace(0, 1, 201)
    flags = [not ppt_check(isotropic(d, p)).ppt for p in grid]
    k = flags.index(True)
    assert grid[k - 1] <= 1 / (d + 1) <= grid[k]
    lo, hi = grid[k - 1], grid[k]
    for _ in range(40):
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if not ppt_check(isotropic(d, mid)).ppt else (mid, hi)
    assert abs(hi - 1 / (d + 1)) < 1e-8


def test_phi_plus_npt():
    v = ppt_check(phi_plus())
    assert not v.ppt and v.min_eigenvalue == pytest.approx(-0.5)
    assert str(v).startswith("NPT")


def test_embedded_support():
    rho = embedded(2, 4, 1.0)
    assert rho.dims == (2, 4)
    diag = np.diag(rho.matrix).real
    assert diag[0] == pytest.approx(0.5) and diag[5] == pytest.approx(0.5)
    np.testing.assert_allclose(partial_trace(rho, [0]).matrix, np.eye(2) / 2, atol=1e-12)


def test_ghz():
    rho = ghz((2, 2, 2))
    assert purity(rho) == pytest.approx(1.0)
    assert rho.matrix[0, 7] == pytest.approx(0.5)
    assert not ppt_check(rho, (0,)).ppt


def test_determinism():
    for fam in ("pure-random", "product", "separable-mixture"):
        a = generate(StateSpec(fam, (2, 3), {}, 42)).matrix
        b = generate(StateSpec(fam, (2, 3), {}, 42)).matrix
        assert np.array_equal(a, b)
        c = generate(StateSpec(fam, (2, 3), {}, 43)).matrix
        assert not np.array_equal(a, c)


def test_pure_and_product():
    rho = generate(StateSpec("pure-random", (2, 3), seed=1))
    assert purity(rho) == pytest.approx(1.0)
    prod = generate(StateSpec("product", (2, 3), seed=1))
    assert purity(partial_trace(prod, [0])) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "family,dims,params",
    [
        ("nope", (2, 2), {}),
        ("isotropic", (2, 2), {"p": 1.5}),
        ("isotropic", (1, 2), {}),
        ("separable-mixture", (2, 2), {"terms": 0}),
        ("separable-mixture", (2, 2), {"terms": 1.5}),
    ],
)
def test_spec_validation(family, dims, params):
    with pytest.raises(ValueError):
        StateSpec(family, dims, params)


def test_generator_shape_errors():
    with pytest.raises(ValueError):
        generate(StateSpec("isotropic", (2, 3), {"p": 0.5}))
    with pytest.raises(ValueError):
        generate(StateSpec("embedded-max-entangled", (3, 2), {"p": 0.5}))


def test_spec_round_trip():
    spec = StateSpec("isotropic", (3, 3), {"p": 0.3}, 7)
    assert StateSpec.from_dict(spec.to_dict()) == spec


def test_all_cuts():
    assert list(all_cuts(2)) == [(0,)]
    assert list(all_cuts(3)) == [(0,), (1,), (2,)]
    assert len(list(all_cuts(4))) == 7

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qis import asymmetry
from qis.asymmetry import SymmetryClass, TwirlSpec
from qis.errors import ContractError, SizeError
from qis.linalg import commutator_norm
from qis.states import Ensemble, ket, projector, von_neumann_entropy

from conftest import random_density, random_hermitian

Z = np.diag([1.0, -1.0])
ZERO = projector(ket(1, 0))
PLUS = projector(ket(1, 1))
H_DEG = np.diag([1.0, 1.0, 2.0])


def test_twirlspec_validation():
    with pytest.raises(ContractError):
        TwirlSpec(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        TwirlSpec(Z, degeneracy_tol=0)
    with pytest.raises(SizeError):
        asymmetry.twirl(np.eye(3) / 3, TwirlSpec(Z))


def test_twirl_examples(rng):
    np.testing.assert_allclose(asymmetry.twirl(PLUS, TwirlSpec(Z)), np.eye(2) / 2, atol=1e-15)
    rho = random_density(rng, 3)
    np.testing.assert_allclose(asymmetry.twirl(rho, TwirlSpec(np.eye(3))), rho, atol=1e-14)


def test_twirl_degenerate_block(rng):
    rho = random_density(rng, 3)
    out = asymmetry.twirl(rho, TwirlSpec(H_DEG))
    expected = np.zeros_like(rho)
    expected[:2, :2] = rho[:2, :2]
    expected[2, 2] = rho[2, 2]
    np.testing.assert_allclose(out, expected, atol=1e-14)
    assert np.max(np.abs(out[:2, 2])) < 1e-12 and np.max(np.abs(out[2, :2])) < 1e-12
    finite = asymmetry.finite_time_twirl(rho, TwirlSpec(H_DEG), 1e4)
    assert np.max(np.abs(finite - out)) < 2e-4


def test_twirl_groups_within_tol():
    spec = TwirlSpec(np.diag([0.0, 1e-10, 1.0]))
    _, _, groups = spec.eigen()
    assert list(groups) == [0, 0, 1]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3, 4]))
def test_twirl_properties(seed, dim):
    rng = np.random.default_rng(seed)
    spec = TwirlSpec(random_hermitian(rng, dim))
    rho = random_density(rng, dim)
    out = asymmetry.twirl(rho, spec)
    assert commutator_norm(out, spec.generator) < 1e-8
    np.testing.assert_allclose(asymmetry.twirl(out, spec), out, atol=1e-12)
    assert np.trace(out).real == pytest.approx(1, abs=1e-12)
    assert np.linalg.eigvalsh(out).min() > -1e-12
    # nondegenerate spectrum: plain dephasing in the eigenbasis
    w, v = np.linalg.eigh(spec.generator)
    deph = sum(np.vdot(v[:, n], rho @ v[:, n]) * np.outer(v[:, n], v[:, n].conj()) for n in range(dim))
    np.testing.assert_allclose(out, deph, atol=1e-10)


def test_finite_time_twirl_examples(rng):
    out = asymmetry.finite_time_twirl(PLUS, TwirlSpec(Z), 100.0)
    assert abs(out[0, 1]) <= 0.005
    assert abs(out[0, 1]) == pytest.approx(abs(math.sin(200) / 200) / 2, abs=5e-6)  # trapezoid error ~ (w dt)^2 / 12
    diag = np.diag([0.2, 0.5, 0.3]).astype(complex)
    np.testing.assert_allclose(asymmetry.finite_time_twirl(diag, TwirlSpec(H_DEG), 7.3), diag, atol=1e-14)


def test_finite_time_twirl_validation():
    with pytest.raises(ValueError):
        asymmetry.finite_time_twirl(PLUS, TwirlSpec(Z), 0.0)
    with pytest.raises(ValueError):
        asymmetry.finite_time_twirl(PLUS, TwirlSpec(Z), 1.0, steps=50)


def test_finite_time_twirl_convergence(rng):
    rho = random_density(rng, 3)
    spec = TwirlSpec(H_DEG)
    exact = asymmetry.twirl(rho, spec)
    errs = [np.linalg.norm(asymmetry.finite_time_twirl(rho, spec, T) - exact) for T in (10, 100, 1000)]
    # sinc envelope: |off-block| <= |rho_nm| / T for unit gaps
    off = np.sqrt(2 * (np.abs(rho[:2, 2]) ** 2).sum())
    for T, err in zip((10, 100, 1000), errs):
        assert err <= off / T + 1e-6


def test_rel_entropy_asymmetry_examples(rng):
    assert asymmetry.rel_entropy_asymmetry(np.diag([0.3, 0.7]), TwirlSpec(Z)) == pytest.approx(0, abs=1e-12)
    assert asymmetry.rel_entropy_asymmetry(PLUS, TwirlSpec(Z)) == pytest.approx(math.log(2), abs=1e-10)
    rho = 0.9 * PLUS + 0.1 * np.eye(2) / 2
    spec = TwirlSpec(Z)
    expected = von_neumann_entropy(asymmetry.twirl(rho, spec)) - von_neumann_entropy(rho)
    assert asymmetry.rel_entropy_asymmetry(rho, spec) == pytest.approx(expected, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3]))
def test_asymmetry_monotone_under_commuting_twirl(seed, dim):
    rng = np.random.default_rng(seed)
    w, v = np.linalg.eigh(random_hermitian(rng, dim))
    h = v @ np.diag(w) @ v.conj().T
    # H' shares H's eigenbasis, so it commutes with H
    h2 = v @ np.diag(rng.normal(size=dim)) @ v.conj().T
    rho = random_density(rng, dim)
    spec = TwirlSpec(h)
    a = asymmetry.rel_entropy_asymmetry(rho, spec)
    a_tw = asymmetry.rel_entropy_asymmetry(asymmetry.twirl(rho, TwirlSpec(h2)), spec)
    assert a >= -1e-12
    assert a_tw <= a + 1e-9


def test_average_asymmetry_examples(rng):
    comm = Ensemble([0.5, 0.5], [np.diag([0.9, 0.1]), np.diag([0.2, 0.8])])
    assert all(asymmetry.average_asymmetry(comm, k) < 1e-12 for k in range(2))
    e = Ensemble([0.5, 0.5], [ZERO, PLUS])
    assert asymmetry.average_asymmetry(e, 0) == pytest.approx(0.5 * math.log(2), abs=1e-10)
    assert asymmetry.average_asymmetry(e, 0) == pytest.approx(0.346574, abs=1e-6)
    assert asymmetry.average_asymmetry(Ensemble([1.0], [random_density(rng, 3)]), 0) == pytest.approx(0, abs=1e-10)
    with pytest.raises(IndexError):
        asymmetry.average_asymmetry(e, 2)


def test_average_asymmetry_skips_zero_weight():
    e = Ensemble([1.0, 0.0], [np.diag([0.5, 0.5]), PLUS])
    assert asymmetry.average_asymmetry(e, 0) == 0.0


def test_symmetry_class_examples(rng):
    diag = Ensemble([0.2, 0.3, 0.5], [np.diag(rng.dirichlet(np.ones(3))) for _ in range(3)])
    assert asymmetry.ensemble_symmetry_class(diag) is SymmetryClass.SYMMETRIC
    assert asymmetry.ensemble_symmetry_class(Ensemble([0.5, 0.5], [ZERO, PLUS])) is SymmetryClass.ASYMMETRIC
    # a zero-weight non-commuting member does not break symmetry
    e = Ensemble([0.5, 0.5, 0.0], [ZERO, np.diag([0.0, 1.0]), PLUS])
    assert asymmetry.ensemble_symmetry_class(e) is SymmetryClass.SYMMETRIC


def test_max_pairwise_commutator(rng):
    states = [random_density(rng, 2) for _ in range(5)]
    e = Ensemble(np.full(5, 0.2), states)
    brute = max(commutator_norm(a, b) for a in states for b in states)
    assert asymmetry.max_pairwise_commutator(e) == pytest.approx(brute, rel=1e-12)

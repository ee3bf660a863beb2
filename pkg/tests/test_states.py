import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qis import states
from qis.errors import ContractError, KindError, SizeError, SupportError
from qis.states import Ensemble, MeasurementFamily, ket, projector, x_basis, z_basis

from conftest import random_density, random_pure

ZERO = projector(ket(1, 0))
ONE = projector(ket(0, 1))
PLUS = projector(ket(1, 1))


def test_average_state_single(rng):
    rho = random_density(rng, 3)
    np.testing.assert_allclose(states.average_state(Ensemble([1.0], [rho])), rho)


def test_average_state_values():
    np.testing.assert_allclose(states.average_state(Ensemble([0.5, 0.5], [ZERO, ONE])), np.eye(2) / 2)
    avg = states.average_state(Ensemble([0.5, 0.5], [ZERO, PLUS]))
    np.testing.assert_allclose(avg, [[0.75, 0.25], [0.25, 0.25]], atol=1e-15)


def test_ensemble_validation():
    with pytest.raises(ContractError):
        Ensemble([0.6, 0.6], [ZERO, ONE])
    with pytest.raises(SizeError):
        Ensemble([1.0], [ZERO, ONE])
    with pytest.raises(ContractError):
        Ensemble([1.0], [np.diag([0.5, 0.6])])
    with pytest.raises(ContractError):
        Ensemble([1.0], [np.diag([1.2, -0.2])])


def test_entropy_values(rng):
    assert abs(states.von_neumann_entropy(random_pure(rng, 4))) < 1e-12
    assert abs(states.von_neumann_entropy(np.eye(2) / 2) - math.log(2)) < 1e-14
    oracle = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    assert abs(states.von_neumann_entropy(np.diag([0.75, 0.25])) - oracle) < 1e-14
    assert abs(oracle - 0.562335) < 1e-6


def test_entropy_bounds(rng):
    for d in (2, 3, 5):
        s = states.von_neumann_entropy(random_density(rng, d))
        assert 0 <= s <= math.log(d) + 1e-12


def test_relative_entropy_values(rng):
    rho = random_density(rng, 3)
    assert abs(states.relative_entropy(rho, rho)) < 1e-12
    assert abs(states.relative_entropy(ZERO, np.eye(2) / 2) - math.log(2)) < 1e-14


def test_relative_entropy_support_error():
    with pytest.raises(SupportError) as info:
        states.relative_entropy(ZERO, ONE)
    assert info.value.overlap == pytest.approx(1.0)


def test_relative_entropy_to_average_finite(rng):
    members = [random_pure(rng, 3) for _ in range(2)]
    e = Ensemble([0.3, 0.7], members)
    avg = states.average_state(e)
    for m in members:
        assert np.isfinite(states.relative_entropy(m, avg))


def test_data_processing_under_dephasing(rng):
    z = z_basis()
    for _ in range(200):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        lhs = states.relative_entropy(states.dephase(rho, z), states.dephase(sigma, z))
        assert lhs <= states.relative_entropy(rho, sigma) + 1e-9


def test_kl_divergence_rules():
    assert states.kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert states.kl_divergence([0.5, 0.5, 0.0], [0.5, 0.5, 0.0]) == 0
    with pytest.raises(SupportError):
        states.kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_dephase_examples():
    z = z_basis()
    np.testing.assert_allclose(states.dephase(PLUS, z), np.eye(2) / 2, atol=1e-15)
    d = np.diag([0.3, 0.7]).astype(complex)
    np.testing.assert_allclose(states.dephase(d, z), d)
    rho = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    np.testing.assert_allclose(states.dephase(rho, z), np.diag([0.7, 0.3]))


def test_dephase_requires_projective():
    povm = MeasurementFamily(np.stack([np.eye(2) / 2, np.eye(2) / 2]), "povm")
    with pytest.raises(KindError):
        states.dephase(PLUS, povm)


def test_dephase_properties(rng):
    basis = x_basis(2)
    for _ in range(20):
        rho = random_density(rng, 4)
        p = states.dephase(rho, basis)
        for pi in basis.elements:
            assert np.linalg.norm(p @ pi - pi @ p) < 1e-9
        np.testing.assert_allclose(states.measure_probs(p, basis), states.measure_probs(rho, basis), atol=1e-12)
        assert np.max(np.abs(states.dephase(p, basis) - p)) < 1e-12


def test_measure_probs_examples(rng):
    pm = x_basis()
    np.testing.assert_allclose(states.measure_probs(PLUS, pm), [1, 0], atol=1e-15)
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    np.testing.assert_allclose(states.measure_probs(np.eye(2) / 2, MeasurementFamily.from_unitary(u)), [0.5, 0.5])
    np.testing.assert_allclose(states.measure_probs(np.diag([0.75, 0.25]), z_basis()), [0.75, 0.25])


def test_measure_probs_dim_mismatch():
    with pytest.raises(SizeError):
        states.measure_probs(np.eye(4) / 4, z_basis())


def test_measurement_family_checks():
    with pytest.raises(ContractError):
        MeasurementFamily(np.stack([ZERO, ZERO]))
    with pytest.raises(ContractError):
        MeasurementFamily(np.stack([np.eye(2) / 2, np.eye(2) / 2]), "projective")


def test_bloch_vectors():
    np.testing.assert_allclose(states.bloch_vector(PLUS), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(states.bloch_vector(np.eye(2) / 2), [0, 0, 0])
    np.testing.assert_allclose(states.bloch_vector(ZERO), [0, 0, 1])
    y_plus = projector(ket(1, 1j))
    np.testing.assert_allclose(states.bloch_vector(y_plus), [0, 1, 0], atol=1e-15)
    with pytest.raises(SizeError):
        states.bloch_vector(np.eye(4) / 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bloch_norm_bounded(seed):
    rho = random_density(np.random.default_rng(seed), 2)
    assert np.linalg.norm(states.bloch_vector(rho)) <= 1 + 1e-9

# tests/test_analytic.py
import numpy as np
import pytest

from construction.analytic import (cat_path_qgn, cat_state, check_orbitals, coherent_qgn, dense_pauli_expectation,
                                   mixed_state_qgn, pauli_string_along, product_state_qgn, random_orbitals,
                                   slater_correlation, slater_full_state, slater_qgn)
from core.error_handler import ContractViolation
from core.fock import LocalOperator
from core.gauge_network import (OperatorString, consistency_residuals, expectation_string,
                                local_expectation, op_key)
from core.lattice import LatticeSpec, covering_path
from harness.verifier import ANALYTIC_CASES


@pytest.mark.parametrize("name", sorted(ANALYTIC_CASES))
def test_analytic_cases_are_exact(name, rng):
    assert ANALYTIC_CASES[name](rng) <= 1e-12


def test_slater_full_state_matches_correlation(rng):
    phi = random_orbitals(6, 2, rng)
    state = slater_full_state(phi)
    corr = slater_correlation(phi)
    for i in range(6):
        for j in range(6):
            op = (LocalOperator.create(i) * LocalOperator.annihilate(j)).to_sparse(state.basis)
            assert abs(state.expectation(op) - corr[i, j]) < 1e-12
    assert np.isclose(np.trace(corr).real, 2.0)


def test_slater_bond_dimension(rng):
    qgn = slater_qgn(random_orbitals(5, 3, rng))
    assert qgn.chis == [4] * 5
    assert consistency_residuals(qgn).vpsi == 0.0
    with pytest.raises(ContractViolation):
        check_orbitals(np.ones((2, 4)))
    with pytest.raises(ContractViolation):
        slater_qgn(random_orbitals(4, 2, rng), graph=coherent_qgn(np.ones(3)).graph)


def test_coherent_state_is_one_dimensional(rng):
    theta = rng.normal(size=4) + 1j * rng.normal(size=4)
    qgn = coherent_qgn(theta)
    assert qgn.chis == [1] * 4
    assert qgn.kind == "boson"
    for i in range(4):
        assert np.isclose(local_expectation(qgn, i, op_key("n", i)), abs(theta[i]) ** 2)
    value = expectation_string(qgn, OperatorString(((3, op_key("bdag", 3)), (0, op_key("b", 0)))))
    assert np.isclose(value, np.conj(theta[3]) * theta[0])


def test_product_state_strings_factorize():
    up, plus = np.array([1, 0]), np.array([1, 1])
    qgn = product_state_qgn([up, plus, up])
    assert qgn.chis == [2, 2, 2]
    assert consistency_residuals(qgn).vpsi < 1e-15
    s = OperatorString(((0, op_key("sz", 0)), (1, op_key("sx", 1)), (2, op_key("sz", 2))))
    assert np.isclose(expectation_string(qgn, s), 1.0)
    s = OperatorString(((0, op_key("sx", 0)), (2, op_key("sz", 2))))
    assert np.isclose(expectation_string(qgn, s), 0.0)
    with pytest.raises(ContractViolation):
        product_state_qgn([up, up], graph=coherent_qgn(np.ones(3)).graph)


@pytest.mark.parametrize("kronecker, chi", [(False, 2), (True, 4)])
def test_mixed_state_correlations(kronecker, chi):
    qgn = mixed_state_qgn(4, kronecker=kronecker)
    assert qgn.chis == [chi] * 4
    for i in range(3):
        zz = expectation_string(qgn, OperatorString(((i, op_key("sz", i)), (i + 1, op_key("sz", i + 1)))))
        assert np.isclose(zz, 1.0, atol=1e-12)
        assert np.isclose(local_expectation(qgn, i, op_key("sz", i)), 0.0, atol=1e-12)


def test_mixed_kronecker_operators_keep_pauli_algebra():
    qgn = mixed_state_qgn(3, kronecker=True)
    for site in range(3):
        sx, sy, sz = (qgn.operator(site, op_key(name, site)) for name in ("sx", "sy", "sz"))
        assert np.allclose(sx @ sy, 1j * sz, atol=1e-12)
        assert np.allclose(sz @ sz, np.eye(qgn.chi(site)), atol=1e-12)


def test_cat_string_depends_on_the_path():
    lattice = LatticeSpec((2, 3), False)
    qgn = cat_path_qgn(lattice, "snake")
    snake = pauli_string_along(covering_path(lattice, "snake"))
    comb = pauli_string_along(covering_path(lattice, "comb"))
    assert np.isclose(expectation_string(qgn, snake), 1.0, atol=1e-12)
    assert abs(expectation_string(qgn, comb) - 1.0) > 0.5


def test_dense_pauli_expectation_of_cat():
    state = cat_state(4)
    assert np.isclose(dense_pauli_expectation(state, {0: "x", 1: "x", 2: "x", 3: "x"}), 1.0)
    assert np.isclose(dense_pauli_expectation(state, {0: "z", 3: "z"}), 1.0)
    assert np.isclose(dense_pauli_expectation(state, {2: "z"}), 0.0)

# tests/test_oracle.py
import numpy as np
import pytest

from core.error_handler import ContractViolation, ToleranceError
from core.fock import FERMION, FermiModel, FullState, SparseOperator, build_basis, full_hamiltonian
from core.lattice import checkerboard_occupation
from core.oracle import (CorrelationMatrix, correlation_from_occupation, exact_evolve, exact_evolve_series,
                         free_fermion_evolve, free_fermion_series, hopping_matrix, krylov_evolve, propagator)
from tests.conftest import random_state


@pytest.fixture
def fermi6(chain6_graph):
    basis = build_basis(FERMION, 6, sector=3)
    return basis, full_hamiltonian(FermiModel(V=1.0), chain6_graph, basis)


def test_krylov_matches_dense_propagator(fermi6, rng):
    basis, H = fermi6
    psi = random_state(rng, basis.dim)
    expected = propagator(H.toarray(), 1.3) @ psi
    result = krylov_evolve(H, psi, 1.3, krylov_dim=8)
    assert np.allclose(result, expected, atol=1e-9)
    assert np.isclose(np.linalg.norm(result), 1.0, atol=1e-10)


def test_krylov_backward_in_time(fermi6, rng):
    basis, H = fermi6
    psi = random_state(rng, basis.dim)
    forward = krylov_evolve(H, psi, 0.7, krylov_dim=10)
    assert np.allclose(krylov_evolve(H, forward, -0.7, krylov_dim=10), psi, atol=1e-9)


def test_krylov_gives_up_after_halvings(fermi6, rng):
    basis, H = fermi6
    psi = random_state(rng, basis.dim)
    with pytest.raises(ToleranceError):
        krylov_evolve(H, psi, 5.0, krylov_dim=2, tol=1e-30, max_halvings=1)


def test_dense_and_krylov_oracles_agree(fermi6, chain6):
    basis, H = fermi6
    state = FullState.from_bits(basis, checkerboard_occupation(chain6))
    dense = exact_evolve(state, H, 2.0, dense_cutoff=basis.dim + 1)
    krylov = exact_evolve(state, H, 2.0, dense_cutoff=0)
    assert np.allclose(dense.amplitudes, krylov.amplitudes, atol=1e-9)
    assert exact_evolve(state, H, 0.0).amplitudes is not state.amplitudes


def test_series_matches_single_calls(fermi6, chain6):
    basis, H = fermi6
    state = FullState.from_bits(basis, checkerboard_occupation(chain6))
    times = [0.0, 0.5, 0.5, 1.0]
    series = exact_evolve_series(state, H, times, dense_cutoff=0)
    assert len(series) == 4
    assert np.allclose(series[0].amplitudes, state.amplitudes)
    assert np.allclose(series[3].amplitudes, exact_evolve(state, H, 1.0).amplitudes, atol=1e-9)

    with pytest.raises(ContractViolation):
        exact_evolve_series(state, H, [1.0, 0.5])


def test_non_hermitian_hamiltonian_is_rejected(fermi6):
    basis, _ = fermi6
    state = FullState.from_bits(basis, 0b000111)
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    matrix[0, 1] = 1.0
    with pytest.raises(ContractViolation):
        exact_evolve(state, SparseOperator(matrix), 1.0)


def test_free_fermion_matches_exact_for_zero_interaction(chain6_graph, chain6):
    basis = build_basis(FERMION, 6, sector=3)
    H = full_hamiltonian(FermiModel(V=0.0), chain6_graph, basis)
    bits = checkerboard_occupation(chain6)
    state = FullState.from_bits(basis, bits)
    C0 = correlation_from_occupation(bits, 6)
    h = hopping_matrix(chain6_graph)

    times = [0.0, 0.4, 1.1, 2.0]
    exact = exact_evolve_series(state, H, times)
    free = free_fermion_series(h, C0, times)
    for full, corr in zip(exact, free):
        assert np.allclose(full.occupations(), corr.occupations(), atol=1e-10)
        assert np.isclose(corr.particle_number(), 3.0)


def test_free_fermion_uses_transposed_hopping():
    # complex hopping on a triangle: C(t) = e^{i hᵀ t} C0 e^{-i hᵀ t}
    h = np.array([[0, 1j, 0], [-1j, 0, 1], [0, 1, 0]], dtype=complex)
    C0 = correlation_from_occupation(0b001, 3)
    t = 0.9
    U = propagator(h.T, -t)
    expected = U @ C0.matrix @ U.conj().T
    assert np.allclose(free_fermion_evolve(h, C0, t).matrix, expected, atol=1e-12)


def test_hopping_matrix_on_periodic_chain(chain6_graph):
    h = hopping_matrix(chain6_graph, hopping=2.0)
    assert np.allclose(h, h.T)
    assert np.allclose(h.sum(axis=1), -4.0)
    assert h[0, 5] == -2.0


def test_correlation_matrix_validation():
    with pytest.raises(ContractViolation):
        CorrelationMatrix(np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(ContractViolation):
        CorrelationMatrix(np.diag([1.5, 0.0]))
    with pytest.raises(ContractViolation):
        CorrelationMatrix(np.zeros((2, 3)))
    with pytest.raises(ContractViolation):
        free_fermion_evolve(np.eye(3), np.eye(2), 1.0)

    C = correlation_from_occupation(0b1010, 4)
    assert C.occupations().tolist() == [0.0, 1.0, 0.0, 1.0]
    assert C.n_sites == 4

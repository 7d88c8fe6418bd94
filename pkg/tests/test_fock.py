# tests/test_fock.py
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.error_handler import ContractViolation, InvalidSectorError, KindMismatchError
from core.fock import (FERMION, SPIN, FermiModel, FullState, IsingModel, LocalOperator, build_basis,
                       build_local_hamiltonians, fermion_op, full_hamiltonian, number_op, pauli_op, popcount, site_observable)
from core.lattice import build_nn_patch_graph, checkerboard_occupation


def test_sector_basis_is_sorted_and_complete():
    basis = build_basis(FERMION, 6, sector=3)
    assert basis.dim == 20
    assert np.all(np.diff(basis.states.astype(np.int64)) > 0)
    assert set(popcount(basis.states).tolist()) == {3}
    assert basis.index(0b000111)[0] == 0
    assert basis.index(0b000011)[0] == -1
    assert 0b010101 in basis


def test_basis_contract_errors():
    with pytest.raises(InvalidSectorError):
        build_basis(SPIN, 4, sector=2)
    with pytest.raises(InvalidSectorError):
        build_basis(FERMION, 4, sector=5)
    with pytest.raises(KindMismatchError):
        build_basis(FERMION, 4, frame="x")
    with pytest.raises(ContractViolation):
        build_basis(SPIN, 0)


def test_popcount_matches_python():
    values = np.array([0, 1, 0b1011, 2 ** 40 + 7, 2 ** 63], dtype=np.uint64)
    assert popcount(values).tolist() == [bin(int(v)).count("1") for v in values]


def test_canonical_anticommutation():
    basis = build_basis(FERMION, 4)
    c = [LocalOperator.annihilate(i).to_sparse(basis).toarray() for i in range(4)]
    cdag = [LocalOperator.create(i).to_sparse(basis).toarray() for i in range(4)]
    eye = np.eye(basis.dim)
    for i in range(4):
        for j in range(4):
            assert np.allclose(c[i] @ cdag[j] + cdag[j] @ c[i], eye * (i == j))
            assert np.allclose(c[i] @ c[j] + c[j] @ c[i], 0)


def test_jordan_wigner_ordering_sign():
    basis = build_basis(FERMION, 3)
    vacuum = FullState.from_bits(basis, 0).amplitudes
    c0 = LocalOperator.create(0).to_sparse(basis)
    c1 = LocalOperator.create(1).to_sparse(basis)
    a = c1 @ (c0 @ vacuum)
    b = c0 @ (c1 @ vacuum)
    assert np.allclose(a, -b)
    assert np.isclose(np.linalg.norm(a), 1.0)


@pytest.mark.parametrize("frame", ["z", "x"])
def test_pauli_algebra_in_both_frames(frame):
    basis = build_basis(SPIN, 2, frame=frame)
    sx, sy, sz = (pauli_op(basis, 1, a).toarray() for a in "xyz")
    assert np.allclose(sx @ sy, 1j * sz)
    assert np.allclose(sy @ sz, 1j * sx)
    assert np.allclose(sx @ sx, np.eye(4))


def test_x_frame_is_hadamard_rotated():
    basis = build_basis(SPIN, 1, frame="x")
    assert np.allclose(pauli_op(basis, 0, "x").toarray(), np.diag([1, -1]))
    assert np.allclose(pauli_op(basis, 0, "z").toarray(), [[0, 1], [1, 0]])
    assert np.allclose(pauli_op(basis, 0, "y").toarray(), [[0, 1j], [-1j, 0]])


def test_fermion_op_changes_sector():
    basis = build_basis(FERMION, 4, sector=2)
    create = fermion_op(basis, 1, "create")
    annihilate = fermion_op(basis, 1, "annihilate")
    assert create.shape == (4, 6)
    assert annihilate.shape == (4, 6)
    n1 = number_op(basis, 1).toarray()
    assert np.allclose(create.dagger().toarray() @ create.toarray(), np.eye(6) - n1)

    full = build_basis(FERMION, 2, sector=2)
    assert fermion_op(full, 0, "create").shape == (0, 1)


def test_checkerboard_energy_vanishes(chain6_graph, chain6):
    basis = build_basis(FERMION, 6, sector=3)
    H = full_hamiltonian(FermiModel(V=1.0), chain6_graph, basis)
    assert H.is_hermitian()
    state = FullState.from_bits(basis, checkerboard_occupation(chain6))
    assert abs(state.expectation(H)) < 1e-14


def test_ising_all_right_energy(square3):
    graph = build_nn_patch_graph(square3)
    basis = build_basis(SPIN, 9, frame="x")
    H = full_hamiltonian(IsingModel(h=3.0), graph, basis)
    state = FullState.from_bits(basis, 0)
    assert np.isclose(state.expectation(H), -27.0)


def test_full_hamiltonian_kind_mismatch(chain6_graph):
    with pytest.raises(KindMismatchError):
        full_hamiltonian(IsingModel(), chain6_graph, build_basis(FERMION, 6, sector=3))


def test_matrix_on_states_matches_sparse_block():
    basis = build_basis(FERMION, 6, sector=3)
    op = LocalOperator.create(0) * LocalOperator.annihilate(1) + 2.0 * LocalOperator.number(3)
    dense = op.to_sparse(basis).toarray()
    picks = np.array([5, 0, 11, 7])
    block = op.matrix_on_states(basis.states[picks])
    assert np.allclose(block, dense[np.ix_(picks, picks)])


def test_full_state_norm_is_enforced():
    basis = build_basis(SPIN, 2)
    with pytest.raises(ContractViolation):
        FullState(np.array([1.0, 1.0, 0.0, 0.0]), basis)
    state = FullState.from_vector(basis, np.array([1.0, 1.0, 0.0, 0.0]))
    assert np.allclose(state.occupations(), [0.5, 0.0])


def test_site_observable_rejects_wrong_kind():
    with pytest.raises(KindMismatchError):
        site_observable(FERMION, "sx", 0)
    with pytest.raises(KindMismatchError):
        LocalOperator.number(0) + LocalOperator.pauli(0, "x")


factor = st.tuples(st.sampled_from(["c", "cdag", "n"]), st.integers(0, 3))
term = st.tuples(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                 st.lists(factor, min_size=1, max_size=3))


@settings(max_examples=40, deadline=None)
@given(st.lists(term, min_size=1, max_size=4))
def test_dagger_is_conjugate_transpose(terms):
    basis = build_basis(FERMION, 4)
    op = LocalOperator([(c, tuple(f)) for c, f in terms], FERMION)
    assert np.allclose(op.dagger().to_sparse(basis).toarray(), op.to_sparse(basis).toarray().conj().T)


def test_local_hamiltonians_sum_to_the_full_one(chain6, chain6_graph):
    basis = build_basis(FERMION, 6, sector=3)
    model = FermiModel(V=1.0)
    pieces = build_local_hamiltonians(model, chain6_graph, basis)
    assert [idx for idx, _ in pieces] == list(range(chain6_graph.n_patches))
    total = sum(op.matrix for _, op in pieces)
    assert abs(total - full_hamiltonian(model, chain6_graph, basis).matrix).max() < 1e-14
    for _, op in pieces:
        assert abs(op.matrix - op.matrix.conj().T).max() < 1e-14

    with pytest.raises(KindMismatchError):
        build_local_hamiltonians(IsingModel(), chain6_graph, basis)
    with pytest.raises(ContractViolation):
        build_local_hamiltonians(model, chain6_graph, build_basis(FERMION, 4, sector=2))

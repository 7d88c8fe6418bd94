# tests/test_images.py
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from construction.analytic import chain_graph, rainbow_state
from construction.images import ImageRequest, default_midpoint, images_for_k_point, images_for_strings
from core.error_handler import ContractViolation, UnsupportedPathError
from core.fock import SPIN, FullState, build_basis, pauli_op
from core.gauge_network import (OperatorString, expectation_string, op_key, qgn_from_truncation,
                                truncation_maps_from_images)
from core.lattice import LatticeSpec, build_single_site_patch_graph
from harness.verifier import exact_encoding_trial
from tests.conftest import random_state


def test_default_midpoint():
    assert [default_midpoint(m) for m in (1, 2, 3, 4)] == [1.0, 2.0, 2.0, 3.0]


def test_request_validation():
    with pytest.raises(ContractViolation):
        ImageRequest([[]])
    with pytest.raises(ContractViolation):
        ImageRequest([[(0, None), (1, None)]], [0.5])
    with pytest.raises(ContractViolation):
        ImageRequest([[(0, None), (1, None)]], [1.25])
    with pytest.raises(ContractViolation):
        ImageRequest([[(0, None)]], [1.0, 2.0])
    ImageRequest([[(0, None), (1, None)]], [1.5])


def test_three_operator_images(rng):
    graph = chain_graph(3)
    psi = random_state(rng, 8)
    A, B, C = (rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)) for _ in range(3))
    images = images_for_strings(psi, ImageRequest([[(0, A), (1, B), (2, C)]]), graph)

    adag_psi = A.conj().T @ psi
    c_psi = C @ psi
    expected = [[psi, psi, adag_psi], [psi, adag_psi, c_psi], [psi, c_psi, psi]]
    for got, want in zip(images, expected):
        assert len(got) == len(want)
        for a, b in zip(got, want):
            assert np.allclose(a, b)
    assert truncation_maps_from_images(images).chis == [2, 3, 2]


def test_single_operator_image_is_the_state(rng):
    graph = chain_graph(4)
    basis = build_basis(SPIN, 4)
    state = FullState(random_state(rng, basis.dim), basis)
    sy = pauli_op(basis, 2, "y")
    images = images_for_strings(state, ImageRequest([[(2, sy)]]), graph)
    Q = truncation_maps_from_images(images)
    assert Q.chis == [1, 1, 1, 1]
    qgn = qgn_from_truncation(state, Q, graph, [{}, {}, {op_key("sy", 2): sy}, {}])
    value = expectation_string(qgn, OperatorString(((2, op_key("sy", 2)),)))
    assert np.isclose(value, state.expectation(sy), atol=1e-12)


def test_bridging_counts_visits(rng):
    graph = chain_graph(6)
    request = ImageRequest([[(0, np.eye(64)), (3, np.eye(64))], [(5, np.eye(64))]])
    assert request.visit_counts(graph) == [1, 1, 1, 1, 0, 1]
    expanded, m0 = request.expanded(graph)[0]
    assert [p for p, _ in expanded] == [0, 1, 2, 3]
    assert m0 == 4.0

    with pytest.raises(UnsupportedPathError):
        ImageRequest([[(1, None), (1, None)]]).expanded(graph)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_strings_are_encoded_exactly(seed):
    trial = exact_encoding_trial(np.random.default_rng(seed), n_sites=6)
    assert trial['error'] <= 1e-10
    assert trial['chi_excess'] <= 0


@pytest.mark.slow
def test_exact_encoding_on_eight_qubits():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        trial = exact_encoding_trial(rng, n_sites=8)
        assert trial['error'] <= 1e-10
        assert trial['chi_excess'] <= 0


def test_k_point_rejects_bad_arguments(chain6_graph):
    with pytest.raises(ContractViolation):
        images_for_k_point(np.ones(4), [np.eye(4)], 0, chain6_graph)
    with pytest.raises(ContractViolation):
        images_for_k_point(np.ones(4), [], 1, chain6_graph)


@pytest.mark.parametrize("style", ["snake", "comb", "diagonal"])
def test_rainbow_two_point_functions(style):
    n = 6
    state = rainbow_state(n)
    basis = state.basis
    graph = build_single_site_patch_graph(LatticeSpec((2, 3), False), style)
    paulis = {(s, a): pauli_op(basis, s, a) for s in range(n) for a in "xyz"}

    Q = truncation_maps_from_images(images_for_k_point(state, list(paulis.values()), 1, graph))
    assert max(Q.chis) <= 1 + len(paulis)
    requested = [{op_key(f"s{a}", s): paulis[(s, a)] for a in "xyz"} for (s,) in graph.patches]
    qgn = qgn_from_truncation(state, Q, graph, requested)

    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for mu in "xyz":
                for nu in "xyz":
                    s = OperatorString(((i, op_key(f"s{mu}", i)), (j, op_key(f"s{nu}", j))))
                    expected = -1.0 if (mu == nu and j == n - 1 - i) else 0.0
                    assert abs(expectation_string(qgn, s) - expected) < 1e-10

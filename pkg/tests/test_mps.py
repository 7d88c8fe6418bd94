# tests/test_mps.py
import itertools

import numpy as np
import pytest

from construction.analytic import pauli_string_along
from construction.mps import (MPS, CanonicalMPS, canonical_residual, ghz_mps, mps_canonicalize, mps_expectation,
                              mps_to_dense, mps_to_qgn, pauli_tables, product_mps, random_mps)
from core.error_handler import ConstructionError
from core.gauge_network import OperatorString, density_matrix_from_qgn, expectation_string, op_key
from core.serialization import load_qgn, save_mps
from harness.runner import convert_mps

PAULIS = pauli_tables()

# (seed, n, χ)؛ (6, 8) و (8, 8) پیوند میانی را روی 2^3 اشباع می‌کنند
MPS_CASES = [(seed, 2 + seed % 9, 1 + (3 * seed) % 8) for seed in range(18)] + [(18, 8, 8), (19, 10, 8)]


@pytest.fixture
def random6(rng):
    return random_mps(6, 2, 3, rng)


@pytest.fixture(params=MPS_CASES, ids=lambda c: f"seed{c[0]}-n{c[1]}-chi{c[2]}")
def case(request):
    seed, n, chi = request.param
    return random_mps(n, 2, chi, np.random.default_rng(seed)), n, chi


def test_canonical_form_identities(case):
    mps, n, chi = case
    cmps = mps_canonicalize(mps)
    assert canonical_residual(cmps) <= 1e-10
    assert cmps.bond_dims == [min(chi, 2 ** k, 2 ** (n - k)) for k in range(n + 1)]
    for s in cmps.schmidt:
        assert np.isclose(np.sum(s ** 2), 1.0)
        assert np.all(np.diff(s) <= 1e-12)


def test_canonical_form_preserves_the_state(case):
    mps, _, _ = case
    dense = mps_to_dense(mps)
    dense = dense / np.linalg.norm(dense)
    restored = mps_to_dense(mps_canonicalize(mps).to_mps())
    overlap = np.vdot(dense, restored)
    assert np.isclose(abs(overlap), 1.0, atol=1e-12)


def test_two_point_strings_match_dense(case):
    mps, n, _ = case
    qgn = mps_to_qgn(mps_canonicalize(mps))
    for i, j in itertools.combinations(range(n), 2):
        for a, b in (("sx", "sz"), ("sy", "sy"), ("sz", "sx")):
            s = OperatorString(((i, op_key(a, i)), (j, op_key(b, j))))
            expected = mps_expectation(mps, {i: PAULIS[a], j: PAULIS[b]})
            assert abs(expectation_string(qgn, s) - expected) <= 1e-10


def test_connections_are_partial_isometries(case):
    mps, n, _ = case
    cmps = mps_canonicalize(mps)
    qgn = mps_to_qgn(cmps)
    for i in range(n - 1):
        v = qgn.connection(i, i + 1)
        assert np.allclose(v @ v.conj().T @ v, v, atol=1e-10)
        s = np.linalg.svd(v, compute_uv=False)
        chi_mid = cmps.bond_dims[i + 1]
        assert np.sum(np.isclose(s, 1.0, atol=1e-10)) == chi_mid ** 2
        assert np.all(s <= 1.0 + 1e-9)
    assert qgn.chis == [b_l * 2 * b_r for b_l, b_r in zip(cmps.bond_dims, cmps.bond_dims[1:])]


def test_density_matrix_from_mps_qgn(rng):
    mps = random_mps(4, 2, 2, rng)
    qgn = mps_to_qgn(mps_canonicalize(mps))
    psi = mps_to_dense(mps)
    psi = psi / np.linalg.norm(psi)
    rho = density_matrix_from_qgn(qgn)
    assert np.allclose(rho, np.outer(psi, psi.conj()), atol=1e-10)


def test_ghz_string_along_the_chain():
    cmps = mps_canonicalize(ghz_mps(5))
    assert all(np.isclose(np.linalg.norm(c), 1.0) for c in cmps.centers)
    assert cmps.bond_dims == [1, 2, 2, 2, 2, 1]
    qgn = mps_to_qgn(cmps)
    assert np.isclose(expectation_string(qgn, pauli_string_along(range(5))), 1.0, atol=1e-12)


def test_product_mps_has_local_bond_dimension():
    up, plus = np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2)
    qgn = mps_to_qgn(mps_canonicalize(product_mps([up, plus, up])))
    assert qgn.chis == [2, 2, 2]
    s = OperatorString(((0, op_key("sz", 0)), (1, op_key("sx", 1))))
    assert np.isclose(expectation_string(qgn, s), 1.0)


def test_invalid_mps_is_rejected():
    with pytest.raises(ConstructionError):
        MPS([])
    with pytest.raises(ConstructionError):
        MPS([np.ones((2, 2, 1))])
    with pytest.raises(ConstructionError):
        MPS([np.ones((1, 2, 2)), np.ones((3, 2, 1))])
    with pytest.raises(ConstructionError):
        mps_canonicalize([np.zeros((1, 2, 1)), np.zeros((1, 2, 1))])


def test_non_canonical_input_is_rejected(random6):
    cmps = mps_canonicalize(random6)
    broken = CanonicalMPS(centers=[2 * c for c in cmps.centers], left=cmps.left, right=cmps.right,
                          schmidt=cmps.schmidt)
    with pytest.raises(ConstructionError):
        mps_to_qgn(broken)


def test_convert_mps_files(tmp_path, random6):
    source = save_mps(random6.tensors, tmp_path / "state_mps.npz")
    chis = convert_mps(source, tmp_path / "state_qgn.npz", path_style="snake")
    qgn = load_qgn(tmp_path / "state_qgn.npz")
    assert chis == qgn.chis
    assert qgn.metadata['construction'] == "mps"
    assert qgn.graph.path_style == "snake"

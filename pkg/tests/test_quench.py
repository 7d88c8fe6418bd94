# tests/test_quench.py
import numpy as np
import pytest

from construction.quench import (build_quench_qgn, fermion_quench_images, ising_quench_images,
                                 patch_operator_tables, qgn_from_basis_images, quench_chi_sequence)
from core.error_handler import ContractViolation, InvalidImageError
from core.fock import FERMION, SPIN, FermiModel, FullState, IsingModel, build_basis, popcount
from core.gauge_network import (OperatorString, consistency_residuals, expectation_string, local_expectation,
                                mean_local_expectation, op_key, qgn_from_truncation, qgn_total_number,
                                truncation_maps_from_images)
from core.lattice import LatticeSpec, build_nn_patch_graph, build_single_site_patch_graph, checkerboard_occupation
from dynamics.hamiltonian import energy_qgn


def test_fermion_sequence_doubles_then_saturates(chain6, chain6_graph):
    sequence = quench_chi_sequence(chain6_graph, checkerboard_occupation(chain6), FERMION)
    assert sequence[:3] == [2, 4, 8]
    assert sequence == sorted(sequence)
    assert sequence[-1] == 20


def occupations(states, n_sites):
    return {tuple(i for i in range(n_sites) if s >> i & 1) for s in states.tolist()}


def test_fermion_images_grow_one_bond_per_iteration():
    chain10 = LatticeSpec((10,), (True,))
    graph = build_nn_patch_graph(chain10)
    bits = checkerboard_occupation(chain10)
    patch = graph.patches.index((0, 1))

    third = fermion_quench_images(graph, bits, min_chi=1 << 20, max_iterations=3)
    assert occupations(third.states[patch], 10) == {
        (0, 2, 4, 6, 8), (1, 2, 4, 6, 8),        # شروع و جابه‌جایی خود وصله
        (2, 4, 6, 8, 9), (0, 1, 4, 6, 8),        # از وصله‌های هم‌پوشان
        (0, 3, 4, 6, 8), (0, 2, 4, 6, 9),        # دو پیوند دورتر
        (1, 3, 4, 6, 8), (1, 2, 4, 6, 9),
    }

    fourth = fermion_quench_images(graph, bits, min_chi=1 << 20, max_iterations=4)
    grown = occupations(fourth.states[patch], 10)
    assert len(grown) == 16
    assert (0, 2, 4, 6, 7) in grown
    assert (0, 2, 3, 6, 8) in grown
    assert quench_chi_sequence(graph, bits, FERMION)[:5] == [2, 4, 8, 16, 30]


def permuted(states, perm):
    out = set()
    for s in states.tolist():
        out.add(sum(1 << perm[i] for i in range(len(perm)) if s >> i & 1))
    return out


def assert_symmetric_images(graph, images, perm):
    index = {tuple(sorted(p)): k for k, p in enumerate(graph.patches)}
    for k, patch in enumerate(graph.patches):
        target = index[tuple(sorted(perm[s] for s in patch))]
        assert permuted(images.states[k], perm) == set(images.states[target].tolist())


@pytest.mark.parametrize("name", ["shift", "mirror"])
def test_fermion_images_respect_chain_symmetries(name):
    chain10 = LatticeSpec((10,), (True,))
    graph = build_nn_patch_graph(chain10)
    perm = {"shift": [(i + 2) % 10 for i in range(10)],
            "mirror": [(-i) % 10 for i in range(10)]}[name]
    bits = checkerboard_occupation(chain10)
    assert sum(1 << perm[i] for i in range(10) if bits >> i & 1) == bits
    images = fermion_quench_images(graph, bits, min_chi=30)
    assert_symmetric_images(graph, images, perm)


@pytest.mark.parametrize("name", ["shift_x", "shift_y", "transpose", "mirror"])
def test_ising_images_respect_square_symmetries(square3, name):
    graph = build_nn_patch_graph(square3)
    maps = {
        "shift_x": lambda x, y: ((x + 1) % 3, y),
        "shift_y": lambda x, y: (x, (y + 1) % 3),
        "transpose": lambda x, y: (y, x),
        "mirror": lambda x, y: ((-x) % 3, y),
    }
    perm = [square3.index(maps[name](*square3.coords(s))) for s in range(square3.n_sites)]
    images = ising_quench_images(graph, min_chi=28)
    assert_symmetric_images(graph, images, perm)


def test_fermion_images_stay_in_sector(chain6, chain6_graph):
    bits = checkerboard_occupation(chain6)
    images = fermion_quench_images(chain6_graph, bits, min_chi=8)
    assert min(images.chis) >= 8
    for states in images.states:
        assert set(popcount(states).tolist()) == {3}
        assert np.uint64(bits) in states


def test_full_sector_is_reported_saturated(chain6, chain6_graph):
    images = fermion_quench_images(chain6_graph, checkerboard_occupation(chain6), min_chi=20)
    assert images.saturated
    assert images.chis == [20] * 6

    capped = fermion_quench_images(chain6_graph, checkerboard_occupation(chain6), min_chi=1000)
    assert capped.saturated
    assert capped.chis == [20] * 6


def test_ising_first_iteration_flips_both_sites(square3):
    graph = build_nn_patch_graph(square3)
    images = ising_quench_images(graph, min_chi=4)
    assert images.checkpoints[0] == [4] * graph.n_patches
    assert images.chis == [4] * graph.n_patches
    assert quench_chi_sequence(graph, 0, SPIN, max_iterations=2)[0] == 4


def test_image_loop_preconditions(chain6):
    with pytest.raises(ContractViolation):
        fermion_quench_images(build_single_site_patch_graph(chain6), 0b010101, min_chi=4)
    with pytest.raises(ContractViolation):
        fermion_quench_images(build_nn_patch_graph(chain6), 0b010101, min_chi=0)


def test_basis_image_qgn_is_consistent(chain6, chain6_graph):
    bits = checkerboard_occupation(chain6)
    qgn, images = build_quench_qgn(FermiModel(V=1.0), chain6_graph, bits, min_chi=8)
    assert qgn.chis == images.chis
    residuals = consistency_residuals(qgn)
    assert residuals.vpsi == 0.0
    assert residuals.singular_excess <= 1e-12
    assert energy_qgn(qgn) == pytest.approx(0.0, abs=1e-14)
    assert qgn.metadata['chi_checkpoints'][0] == 2
    for patch, (i, j) in enumerate(chain6_graph.patches):
        assert local_expectation(qgn, patch, op_key("n", i)) == pytest.approx((bits >> i) & 1)
    for site in range(6):
        assert mean_local_expectation(qgn, site, "n") == pytest.approx((bits >> site) & 1)
    assert qgn_total_number(qgn) == pytest.approx(3.0)


def test_basis_images_match_generic_truncation(chain6, chain6_graph):
    model = FermiModel(V=1.0)
    bits = checkerboard_occupation(chain6)
    images = fermion_quench_images(chain6_graph, bits, min_chi=4)
    tables = patch_operator_tables(model, chain6_graph)
    direct = qgn_from_basis_images(bits, images.states, chain6_graph, tables, FERMION)

    basis = build_basis(FERMION, 6, sector=3)
    state = FullState.from_bits(basis, bits)
    vectors = []
    for states in images.states:
        unit = np.zeros((basis.dim, states.size), dtype=complex)
        unit[basis.index(states), np.arange(states.size)] = 1.0
        vectors.append(list(unit.T))
    requested = [{name: op.to_sparse(basis) for name, op in table.items()} for table in tables]
    generic = qgn_from_truncation(state, truncation_maps_from_images(vectors), chain6_graph, requested)

    for patch in range(6):
        for name in tables[patch]:
            assert np.isclose(local_expectation(direct, patch, name), local_expectation(generic, patch, name))
    s = OperatorString(((0, "H"), (3, "H")))
    assert np.isclose(expectation_string(direct, s), expectation_string(generic, s), atol=1e-12)


def test_ising_quench_qgn_energy(square3):
    graph = build_nn_patch_graph(square3)
    qgn, _ = build_quench_qgn(IsingModel(h=3.0), graph, 0, min_chi=4)
    assert qgn.kind == SPIN
    assert qgn.metadata['frame'] == "x"
    assert energy_qgn(qgn) == pytest.approx(-27.0)
    site = graph.patches[0][0]
    assert local_expectation(qgn, 0, op_key("sx", site)) == pytest.approx(1.0)

    # σxσy = iσz روی هر وصله
    for patch, (i, _) in enumerate(graph.patches):
        sx, sy, sz = (qgn.operator(patch, op_key(name, i)) for name in ("sx", "sy", "sz"))
        assert np.allclose(sx @ sy, 1j * sz)


def test_missing_initial_state_is_rejected(chain6_graph):
    model = FermiModel()
    tables = patch_operator_tables(model, chain6_graph)
    images = [np.array([0b000111], dtype=np.uint64)] * 6
    with pytest.raises(InvalidImageError):
        qgn_from_basis_images(0b010101, images, chain6_graph, tables, FERMION)
    with pytest.raises(ContractViolation):
        qgn_from_basis_images(0b010101, images[:3], chain6_graph, tables, FERMION)


def test_large_lattice_without_full_basis():
    lattice = LatticeSpec((40,), (True,))
    graph = build_nn_patch_graph(lattice)
    qgn, images = build_quench_qgn(FermiModel(), graph, checkerboard_occupation(lattice), min_chi=4)
    assert min(qgn.chis) >= 4
    assert energy_qgn(qgn) == pytest.approx(0.0, abs=1e-14)

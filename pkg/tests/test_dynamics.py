# tests/test_dynamics.py
import numpy as np
import pytest
from scipy.linalg import expm

from construction.quench import build_quench_qgn
from core.error_handler import ContractViolation, IntegratorError
from core.fock import FermiModel
from core.gauge_network import consistency_residuals
from core.lattice import LatticeSpec, build_nn_patch_graph, checkerboard_occupation
from dynamics.evolution import ObservableSchedule, TimeSeries, evolve, sample_observables, step_count
from dynamics.hamiltonian import (HAMILTONIAN, CouplingTerm, GeneralCoupling, build_h_prime,
                                  build_h_prime_general, energy_general, energy_qgn, map_patches)
from dynamics.integrator import IntegratorConfig, RKTableau, expm_herm, rk4_modified_step
from utils.checkpoint import CheckpointManager


def quench(n_sites: int, chi: int, V: float = 1.0):
    lattice = LatticeSpec((n_sites,), (True,))
    graph = build_nn_patch_graph(lattice)
    qgn, _ = build_quench_qgn(FermiModel(V=V), graph, checkerboard_occupation(lattice), min_chi=chi)
    return qgn


@pytest.fixture
def chain6_qgn():
    return quench(6, 8)


def test_rk4_tableau_defaults():
    tableau = RKTableau.rk4()
    assert tableau.stages == 4
    assert tableau.c == (0.0, 0.5, 0.5, 1.0)


@pytest.mark.parametrize("a, b, c", [
    ([[0.0]], [0.9], [0.0]),
    ([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5], [0.5, 1.0]),
    ([[0.5, 0.0], [0.5, 0.0]], [0.5, 0.5], [0.0, 1.0]),
    ([[0.0, 0.0]], [0.5, 0.5], [0.0, 1.0]),
])
def test_invalid_tableaus(a, b, c):
    with pytest.raises(ContractViolation):
        RKTableau(a, b, c)


def test_integrator_config_validation():
    with pytest.raises(ContractViolation):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ContractViolation):
        IntegratorConfig(dt=0.1, mode="implicit")
    with pytest.raises(ContractViolation):
        IntegratorConfig(dt=0.1, n_jobs=0)


def test_expm_herm_matches_scipy(rng):
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    g = a + a.conj().T
    u = expm_herm(g, 0.3)
    assert np.allclose(u, expm(-0.3j * g), atol=1e-12)
    assert np.allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_h_prime_is_hermitian_and_matches_general_form(chain6_qgn):
    h_prime = build_h_prime(chain6_qgn)
    assert h_prime.is_hermitian()
    assert h_prime.hermitian_residual < 1e-12

    general = build_h_prime_general(chain6_qgn, GeneralCoupling.from_local_hamiltonians(chain6_qgn))
    for patch in range(chain6_qgn.n_patches):
        assert np.allclose(general[patch], h_prime[patch], atol=1e-12)

    couplings = GeneralCoupling.from_local_hamiltonians(chain6_qgn)
    assert energy_general(chain6_qgn, couplings) == pytest.approx(energy_qgn(chain6_qgn), abs=1e-12)


def test_coupling_terms_are_validated():
    with pytest.raises(ContractViolation):
        CouplingTerm((0, 1), ("H",), 1.0)
    with pytest.raises(ContractViolation):
        CouplingTerm((0,), ("H",), 1j)
    term = CouplingTerm((3, 1), ("a", "b"), 2)
    assert term.ordered() == [(1, "b"), (3, "a")]


def test_threaded_patch_map_matches_serial():
    assert map_patches(lambda p: p * p, 8, n_jobs=2) == [p * p for p in range(8)]


@pytest.mark.parametrize("mode", ["modified", "plain"])
def test_step_keeps_vpsi_and_norms(chain6_qgn, mode):
    cfg = IntegratorConfig(dt=0.05, mode=mode)
    current = chain6_qgn
    for _ in range(10):
        current = rk4_modified_step(current, cfg)
    assert current.time == pytest.approx(0.5)
    assert consistency_residuals(current).vpsi <= 1e-12
    for psi in current.psi:
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    # ورودی دست‌نخورده می‌ماند
    assert chain6_qgn.time == 0.0
    assert consistency_residuals(chain6_qgn).vpsi == 0.0


def test_threaded_step_matches_serial(chain6_qgn):
    serial = rk4_modified_step(chain6_qgn, IntegratorConfig(dt=0.05))
    threaded = rk4_modified_step(chain6_qgn, IntegratorConfig(dt=0.05, n_jobs=2))
    for a, b in zip(serial.psi, threaded.psi):
        assert np.allclose(a, b, atol=1e-14)


def test_energy_is_conserved_on_ten_sites():
    qgn = quench(10, 16)
    e0 = energy_qgn(qgn)
    series = evolve(qgn, 4.0, IntegratorConfig(dt=0.05), ObservableSchedule(stride=10, residuals=False))
    drift = np.max(np.abs(series.column("energy") - e0))
    assert drift / 10 <= 1e-3
    assert series.times[-1] == pytest.approx(4.0)


def test_non_hermitian_generator_is_refused(chain6_qgn):
    broken = chain6_qgn.copy()
    h = broken.operators[0][HAMILTONIAN]
    broken.operators[0][HAMILTONIAN] = h + 1e-3 * np.triu(np.ones_like(h), 1)
    with pytest.raises(IntegratorError):
        rk4_modified_step(broken, IntegratorConfig(dt=0.05))


def test_step_count():
    assert step_count(2.0, 0.005) == 400
    assert step_count(0.0, 0.1) == 0
    with pytest.raises(ContractViolation):
        step_count(0.33, 0.1)
    with pytest.raises(ContractViolation):
        step_count(-1.0, 0.5)


def test_evolve_sampling_and_checkpoints(chain6_qgn, tmp_path):
    manager = CheckpointManager(tmp_path, run_name="evolve", keep=5)
    calls = []
    series = evolve(chain6_qgn, 0.5, IntegratorConfig(dt=0.05), ObservableSchedule(stride=3),
                    checkpoint_every=5, checkpoint_manager=manager,
                    on_step=lambda step, qgn: calls.append(step))

    assert calls == list(range(1, 11))
    assert np.allclose(series.times, [0.0, 0.15, 0.3, 0.45, 0.5])
    assert series.final.time == pytest.approx(0.5)
    assert [c['step'] for c in manager.list_checkpoints()] == [10, 5]

    frame = series.to_frame()
    assert {"t", "n_0", "n_5", "energy", "number", "vpsi_residual", "triangle_residual"} <= set(frame.columns)
    assert np.all(frame["vpsi_residual"] <= 1e-12)


def test_schedule_subsets_and_validation(chain6_qgn):
    row = sample_observables(chain6_qgn, ObservableSchedule(sites=[1], residuals=False))
    assert set(row) == {"t", "n_1", "energy", "number"}
    assert row["n_1"] == pytest.approx(0.0)
    with pytest.raises(ContractViolation):
        ObservableSchedule(stride=0)


def test_timeseries_csv_keeps_full_precision(tmp_path, chain6_qgn):
    series = evolve(chain6_qgn, 0.1, IntegratorConfig(dt=0.05))
    path = series.to_csv(tmp_path / "out" / "timeseries.csv")
    restored = TimeSeries.from_csv(path)
    assert len(restored) == len(series) == 3
    assert np.array_equal(restored.column("n_2"), series.column("n_2"))
    assert np.array_equal(restored.times, series.times)

# tests/test_acceptance.py
"""
سناریوهای انتها به انتها روی نمونه‌های کوچک؛ موارد طولانی با --runslow
"""
from pathlib import Path

import numpy as np
import pytest

import config
from core.lattice import LatticeSpec, build_nn_patch_graph
from harness.benchmark import benchmark_step_scaling
from harness.experiment import experiment_from_dict, load_experiment
from harness.runner import run
from harness.verifier import verify

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def _no_env_threads(monkeypatch):
    monkeypatch.delenv("QGN_THREADS", raising=False)


def chain(n_sites: int, **extra) -> dict:
    data = {
        'name': f'chain_{n_sites}',
        'model': {'type': 'fermi', 'V': 1.0},
        'lattice': {'dims': [n_sites], 'periodic': True},
        'chi': 16,
        'dt': 0.05,
        'time': 0.5,
        'oracle': 'krylov',
    }
    data.update(extra)
    return data


def test_saturated_chain_matches_exact_evolution():
    cfg = load_experiment(CONFIG_DIR / "fermi_chain_6.yaml", {'oracle': 'krylov'})
    result = run(cfg, write=False)
    assert result.images.saturated
    assert result.report.worst_error <= 1e-6
    assert result.report.max_vpsi_residual <= 1e-12
    assert result.series.times[-1] == pytest.approx(2.0)


def test_free_fermion_chain_stays_close_to_conserved():
    cfg = load_experiment(CONFIG_DIR / "free_fermion_chain_10.yaml")
    report = run(cfg, write=False).report
    assert report.max_vpsi_residual <= 1e-12
    assert report.energy_drift <= config.VERIFY_FREE_DRIFT
    assert report.number_drift is not None
    assert report.number_drift <= config.VERIFY_FREE_DRIFT


def test_larger_chi_tracks_free_fermions_better():
    errors = {}
    for chi in (2, 20):
        cfg = experiment_from_dict(chain(6, model={'type': 'fermi', 'V': 0.0}, chi=chi, dt=0.01,
                                         oracle='free-fermion'))
        errors[chi] = run(cfg, write=False).report.error_by_time[-1]
    assert errors[20] < errors[2]
    assert errors[20] <= 1e-6


def test_free_fermion_chain_10_error_drops_with_chi():
    errors = {}
    for chi in (2, 16):
        cfg = experiment_from_dict(chain(10, model={'type': 'fermi', 'V': 0.0}, chi=chi,
                                         oracle='free-fermion'))
        result = run(cfg, write=False)
        assert result.series.times[-1] == pytest.approx(0.5)
        errors[chi] = result.report.error_by_time[-1]
    assert errors[16] < errors[2]


@pytest.mark.slow
def test_interacting_chain_10_error_is_monotone_in_chi():
    errors = []
    for chi in (2, 8, 30):
        cfg = experiment_from_dict(chain(10, chi=chi, dt=0.02))
        errors.append(run(cfg, write=False).report.error_by_time[-1])
    assert errors == sorted(errors, reverse=True), errors


def test_gauge_invariance_at_chi_16():
    cfg = experiment_from_dict(chain(8, verify={'checks': ['gauge_invariance']}))
    report = verify(cfg)
    assert report.passed, [c.detail for c in report.failures]


def test_ising_odd_magnetizations_stay_zero():
    cfg = load_experiment(CONFIG_DIR / "ising_3x3.yaml", {'oracle': 'none'})
    frame = run(cfg, write=False).series.to_frame()
    odd = [c for c in frame.columns if c.startswith(("sy_", "sz_"))]
    assert odd
    assert np.max(np.abs(frame[odd].to_numpy())) <= 1e-10
    assert frame["t"].iloc[-1] == pytest.approx(2.0)


def test_saturated_ising_chain_matches_dense_oracle():
    cfg = experiment_from_dict({
        'name': 'ising_chain_6',
        'model': {'type': 'ising', 'h': 3.0},
        'lattice': {'dims': [6], 'periodic': True},
        'chi': 64, 'dt': 0.02, 'time': 0.5, 'oracle': 'dense',
    })
    result = run(cfg, write=False)
    assert result.images.saturated
    sx = [c for c in result.report.max_error if c.startswith("sx_")]
    assert sx
    assert max(result.report.max_error[c] for c in sx) <= 1e-3


def test_saturated_open_ising_lattice_matches_dense_oracle():
    cfg = experiment_from_dict({
        'name': 'ising_open_2x3',
        'model': {'type': 'ising', 'h': 3.0},
        'lattice': {'dims': [2, 3], 'periodic': False},
        'chi': 64, 'dt': 0.01, 'time': 0.5, 'oracle': 'dense',
    })
    graph = build_nn_patch_graph(cfg.lattice())
    # گوشه‌ها در دو وصله، میانه لبه‌ها در سه وصله
    assert {len(graph.patches_containing(s)) for s in range(6)} == {2, 3}

    result = run(cfg, write=False)
    assert result.images.saturated
    assert result.report.chis == [64] * graph.n_patches
    sx = [c for c in result.report.max_error if c.startswith("sx_")]
    assert len(sx) == 6
    assert max(result.report.max_error[c] for c in sx) <= 1e-3


@pytest.mark.slow
def test_energy_drift_shrinks_with_dt():
    cfg = experiment_from_dict(chain(10, verify={'checks': ['integrator_order'],
                                                 'order_dts': [0.1, 0.05, 0.025], 'order_time': 1.0}))
    report = verify(cfg)
    assert report.passed, [c.detail for c in report.failures]


@pytest.mark.slow
def test_step_cost_scales_like_chi_cubed():
    graph = build_nn_patch_graph(LatticeSpec((6,), (True,)))
    result = benchmark_step_scaling(graph, [64, 128, 256], steps=3)
    assert 2.3 <= result.exponent <= 3.5

# harness/runner.py
"""
اجرای یک آزمایش: ساخت QGN، تحول زمانی، اوراکل و نوشتن خروجی‌ها

خروجی‌ها در پوشه output:
    timeseries.csv   مشاهده‌پذیرهای QGN در هر نمونه
    comparison.csv   مقدار QGN، اوراکل و خطا برای هر ستون
    report.json      ComparisonReport و اطلاعات اجرا
    qgn_final.npz    QGN نهایی
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from construction.mps import mps_canonicalize, mps_to_qgn
from construction.quench import QuenchImages, build_quench_qgn
from core.error_handler import ContractViolation
from core.fock import FERMION, SPIN, FullState, build_basis, full_hamiltonian, number_op, pauli_op
from core.gauge_network import QGN
from core.lattice import PatchGraph, build_nn_patch_graph
from core.oracle import (correlation_from_occupation, exact_evolve_series, free_fermion_series,
                         hopping_matrix)
from core.serialization import load_mps, save_qgn
from dynamics.evolution import ObservableSchedule, TimeSeries, evolve
from dynamics.integrator import IntegratorConfig
from harness.experiment import ExperimentConfig
from utils.checkpoint import CheckpointManager
from utils.logger import JsonLogger, PerformanceLogger

logger = logging.getLogger(__name__)


@dataclass
class ComparisonReport:
    """
    خلاصه مقایسه QGN با اوراکل

    max_error: بیشینه |QGN - oracle| روی زمان برای هر ستون
    error_by_time: بیشینه خطا روی ستون‌ها در هر زمان
    """
    max_error: Dict[str, float] = field(default_factory=dict)
    error_by_time: List[float] = field(default_factory=list)
    energy_drift: float = 0.0
    number_drift: Optional[float] = None
    wall_time: Dict[str, float] = field(default_factory=dict)
    chis: List[int] = field(default_factory=list)
    chi_checkpoints: List[int] = field(default_factory=list)
    saturated: bool = False
    max_vpsi_residual: float = 0.0
    oracle: str = "none"

    def __post_init__(self):
        drifts = [self.energy_drift] + ([self.number_drift] if self.number_drift is not None else [])
        if not all(np.isfinite(d) for d in drifts):
            raise ContractViolation(f"drift fields must be finite, got {drifts}")

    @property
    def worst_error(self) -> float:
        return max(self.max_error.values(), default=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    series: TimeSeries
    report: ComparisonReport
    comparison: Optional[pd.DataFrame]
    qgn: QGN
    images: QuenchImages
    output: Optional[Path] = None


# ==================== ساخت ====================

def build_experiment(cfg: ExperimentConfig) -> Tuple[PatchGraph, QGN, QuenchImages]:
    graph = build_nn_patch_graph(cfg.lattice())
    model = cfg.build_model()
    qgn, images = build_quench_qgn(model, graph, cfg.initial_bits(), cfg.chi)
    qgn.metadata['experiment'] = cfg.name
    logger.info(f"✅ Built {cfg.model} QGN on {cfg.dims}: chi = {min(qgn.chis)}..{max(qgn.chis)}"
                f"{' (saturated)' if images.saturated else ''}")
    return graph, qgn, images


def schedule_for(cfg: ExperimentConfig) -> ObservableSchedule:
    return ObservableSchedule(sites=cfg.sites, names=cfg.observables, stride=cfg.stride)


# ==================== اوراکل ====================

def oracle_observables(cfg: ExperimentConfig, graph: PatchGraph, times: np.ndarray,
                       columns: List[str]) -> pd.DataFrame:
    """
    مقدار دقیق ستون‌های مشاهده‌پذیر (مثل n_3 یا sx_0) روی همان شبکه زمانی

    حالت spin در پایه x ساخته می‌شود تا حالت اولیه همان رشته بیتی QGN باشد.
    """
    model = cfg.build_model()
    bits = cfg.initial_bits()
    n = graph.n_sites
    frame = {}

    if cfg.oracle == "free-fermion":
        h = hopping_matrix(graph, model.hopping)
        series = free_fermion_series(h, correlation_from_occupation(bits, n), times)
        occupations = np.array([c.occupations() for c in series])
        for col in columns:
            name, site = col.rsplit("_", 1)
            frame[col] = occupations[:, int(site)]
        return pd.DataFrame(frame, index=times)

    if cfg.model == "fermi":
        basis = build_basis(FERMION, n, sector=bin(bits).count("1"))
    else:
        basis = build_basis(SPIN, n, frame="x")
    state = FullState.from_bits(basis, bits)
    H = full_hamiltonian(model, graph, basis)
    cutoff = config.DENSE_ORACLE_MAX_DIM + 1 if cfg.oracle == "dense" else 0
    states = exact_evolve_series(state, H, times, dense_cutoff=cutoff)

    for col in columns:
        name, site = col.rsplit("_", 1)
        site = int(site)
        op = number_op(basis, site) if name == "n" else pauli_op(basis, site, name[1])
        frame[col] = np.array([s.expectation(op).real for s in states])
    logger.info(f"🔮 {cfg.oracle} oracle: dim = {basis.dim}, {len(times)} samples")
    return pd.DataFrame(frame, index=times)


def compare(series: TimeSeries, oracle: pd.DataFrame) -> Tuple[pd.DataFrame, Dict[str, float], List[float]]:
    """جدول مقایسه با ستون‌های <col>_qgn، <col>_oracle و <col>_error"""
    qgn = series.to_frame()
    table = pd.DataFrame({'t': qgn['t'].to_numpy()})
    max_error, errors = {}, []
    for col in oracle.columns:
        exact = oracle[col].to_numpy()
        approx = qgn[col].to_numpy()
        err = np.abs(approx - exact)
        table[f"{col}_qgn"] = approx
        table[f"{col}_oracle"] = exact
        table[f"{col}_error"] = err
        max_error[col] = float(err.max()) if err.size else 0.0
        errors.append(err)
    by_time = np.max(np.vstack(errors), axis=0).tolist() if errors else []
    return table, max_error, by_time


def _drift(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - values[0]))) if values.size else 0.0


# ==================== اجرا ====================

def run(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """
    کل زنجیره یک آزمایش

    Args:
        cfg: پیکربندی اعتبارسنجی‌شده
        write: نوشتن CSV و گزارش در cfg.output
    """
    perf = PerformanceLogger(logger)
    logger.info(f"🔮 Run '{cfg.name}': {cfg.model} {cfg.params} on {cfg.dims}, "
                f"chi={cfg.chi}, dt={cfg.dt}, T={cfg.time}, oracle={cfg.oracle}")

    perf.start("construction")
    graph, qgn, images = build_experiment(cfg)
    perf.end_and_log("construction")

    manager = None
    if cfg.checkpoint_every and write:
        manager = CheckpointManager(Path(cfg.output) / "checkpoints", run_name=cfg.name)

    perf.start("evolution")
    integrator = IntegratorConfig(dt=cfg.dt, mode=cfg.mode, n_jobs=cfg.threads)
    series = evolve(qgn, cfg.time, integrator, schedule_for(cfg),
                    checkpoint_every=cfg.checkpoint_every, checkpoint_manager=manager)
    perf.end_and_log("evolution")

    frame = series.to_frame()
    comparison, max_error, by_time = None, {}, []
    if cfg.oracle != "none":
        perf.start("oracle")
        columns = [c for c in frame.columns if c.rsplit("_", 1)[0] in ("n", "sx", "sy", "sz")]
        oracle = oracle_observables(cfg, graph, series.times, columns)
        comparison, max_error, by_time = compare(series, oracle)
        perf.end_and_log("oracle")

    number = frame['number'].to_numpy() if qgn.kind == FERMION else None
    report = ComparisonReport(
        max_error=max_error,
        error_by_time=by_time,
        energy_drift=_drift(frame['energy'].to_numpy()),
        number_drift=_drift(number) if number is not None else None,
        wall_time=dict(perf.timings),
        chis=list(qgn.chis),
        chi_checkpoints=list(qgn.metadata.get('chi_checkpoints', [])),
        saturated=images.saturated,
        max_vpsi_residual=float(frame['vpsi_residual'].max()) if 'vpsi_residual' in frame else 0.0,
        oracle=cfg.oracle,
    )

    result = RunResult(series=series, report=report, comparison=comparison,
                       qgn=series.final, images=images)
    if write:
        result.output = write_outputs(cfg, result)
    JsonLogger(logger).log_report({'name': cfg.name, 'worst_error': report.worst_error,
                                   'energy_drift': report.energy_drift})
    return result


def write_outputs(cfg: ExperimentConfig, result: RunResult) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    result.series.to_csv(out / config.TIMESERIES_FILE)
    if result.comparison is not None:
        result.comparison.to_csv(out / config.COMPARISON_FILE, index=False,
                                 float_format=config.CSV_FLOAT_FORMAT)
    save_qgn(result.qgn, out / "qgn_final.npz")

    payload = {
        'report': result.report.to_dict(),
        'integrator_mode': cfg.mode,
        'seed': cfg.seed,
        'config': cfg.to_dict(),
    }
    with open(out / config.REPORT_FILE, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, default=str)
    logger.info(f"📦 Outputs written to {out}")
    return out


# ==================== MPS ====================

def convert_mps(input_path, output_path, path_style: str = "snake") -> List[int]:
    """خواندن MPS، فرم کانونی، تبدیل و ذخیره QGN؛ خروجی χ هر سایت"""
    tensors = load_mps(input_path)
    cmps = mps_canonicalize(tensors)
    qgn = mps_to_qgn(cmps, path_style=path_style)
    save_qgn(qgn, output_path)
    logger.info(f"📦 QGN written to {output_path}: chi = {qgn.chis}")
    return list(qgn.chis)

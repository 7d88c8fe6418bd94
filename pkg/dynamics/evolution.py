# dynamics/evolution.py
"""
حلقه تحول زمانی QGN و سری زمانی مشاهده‌پذیرها
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

import config
from core.error_handler import ContractViolation
from core.fock import FERMION, observable_names
from core.gauge_network import QGN, consistency_residuals, mean_local_expectation, qgn_total_number
from dynamics.hamiltonian import energy_qgn
from dynamics.integrator import IntegratorConfig, rk4_modified_step

logger = logging.getLogger(__name__)


@dataclass
class ObservableSchedule:
    """
    چه چیزی و هر چند گام یک بار نمونه‌برداری شود

    sites / names: None یعنی همه سایت‌ها و مشاهده‌پذیرهای پیش‌فرض نوع سیستم
    """
    sites: Optional[List[int]] = None
    names: Optional[List[str]] = None
    stride: int = config.SAMPLE_STRIDE
    residuals: bool = True

    def __post_init__(self):
        if self.stride < 1:
            raise ContractViolation(f"sample stride must be >= 1, got {self.stride}")


def sample_observables(qgn: QGN, schedule: ObservableSchedule) -> Dict[str, float]:
    sites = schedule.sites if schedule.sites is not None else range(qgn.graph.n_sites)
    names = schedule.names if schedule.names is not None else observable_names(qgn.kind)

    row = {'t': qgn.time}
    for site in sites:
        for name in names:
            row[f"{name}_{site}"] = mean_local_expectation(qgn, site, name)
    row['energy'] = energy_qgn(qgn)
    row['number'] = qgn_total_number(qgn) if qgn.kind == FERMION else np.nan
    if schedule.residuals:
        residuals = consistency_residuals(qgn)
        row['vpsi_residual'] = residuals.vpsi
        row['triangle_residual'] = residuals.triangle
    return row


@dataclass
class TimeSeries:
    """سطرهای نمونه‌برداری؛ final آخرین QGN است"""
    rows: List[Dict[str, float]] = field(default_factory=list)
    final: Optional[QGN] = None

    def append(self, row: Dict[str, float]):
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    @property
    def times(self) -> np.ndarray:
        return np.array([r['t'] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT)
        logger.info(f"📦 Time series written: {path} ({len(self.rows)} rows)")
        return path

    @classmethod
    def from_csv(cls, path: Path) -> "TimeSeries":
        frame = pd.read_csv(path, float_precision="round_trip")
        return cls(rows=frame.to_dict(orient="records"))


def step_count(T: float, dt: float) -> int:
    steps = int(round(T / dt))
    if T < 0 or abs(steps * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ContractViolation(f"T={T} is not a non-negative multiple of dt={dt}")
    return steps


def evolve(qgn: QGN, T: float, cfg: IntegratorConfig,
           schedule: Optional[ObservableSchedule] = None,
           checkpoint_every: int = 0, checkpoint_manager=None,
           on_step: Optional[Callable[[int, QGN], None]] = None) -> TimeSeries:
    """
    گام‌های متوالی RK با نمونه‌برداری طبق schedule

    نمونه اول در t اولیه و نمونه آخر همیشه در انتهای تحول گرفته می‌شود.
    """
    schedule = schedule or ObservableSchedule()
    n_steps = step_count(T, cfg.dt)
    series = TimeSeries()
    series.append(sample_observables(qgn, schedule))

    current = qgn
    for step in range(1, n_steps + 1):
        current = rk4_modified_step(current, cfg)
        if on_step is not None:
            on_step(step, current)
        if step % schedule.stride == 0 or step == n_steps:
            series.append(sample_observables(current, schedule))
        if checkpoint_every and checkpoint_manager is not None and step % checkpoint_every == 0:
            checkpoint_manager.save(current, step)
        if step % max(1, n_steps // 10) == 0:
            logger.info(f"🔄 t = {current.time:.4f} ({step}/{n_steps})")

    series.final = current
    return series

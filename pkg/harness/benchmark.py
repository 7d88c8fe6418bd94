# harness/benchmark.py
"""
زمان هر گام RK برحسب χ روی QGN های مصنوعی

اتصال‌ها از یکانی‌های تصادفی ساخته می‌شوند (V_IJ = U_I U_J†) تا QGN سازگار باشد.
نتیجه فقط اطلاعاتی است.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from core.gauge_network import QGN
from core.lattice import PatchGraph
from dynamics.hamiltonian import HAMILTONIAN
from dynamics.integrator import IntegratorConfig, rk4_modified_step
from harness.verifier import random_unitary
from utils.logger import PerformanceLogger

logger = logging.getLogger(__name__)


@dataclass
class BenchmarkResult:
    chis: List[int]
    seconds_per_step: List[float]
    exponent: float

    def to_dict(self) -> dict:
        return {'chis': self.chis, 'seconds_per_step': self.seconds_per_step, 'exponent': self.exponent}


def synthetic_qgn(graph: PatchGraph, chi: int, rng: np.random.Generator) -> QGN:
    unitaries = [random_unitary(chi, rng) for _ in range(graph.n_patches)]
    psi = [u[:, 0].copy() for u in unitaries]
    connections = {(i, j): unitaries[i] @ unitaries[j].conj().T for i, j in sorted(graph.edges)}
    operators = []
    for _ in range(graph.n_patches):
        a = rng.normal(size=(chi, chi)) + 1j * rng.normal(size=(chi, chi))
        operators.append({HAMILTONIAN: 0.5 * (a + a.conj().T) / chi})
    return QGN(graph=graph, psi=psi, connections=connections, operators=operators,
               metadata={'construction': 'synthetic'})


def benchmark_step_scaling(graph: PatchGraph, chis: Sequence[int], steps: int = 3,
                           dt: float = 0.01, seed: int = 0, n_jobs: int = 1) -> BenchmarkResult:
    """
    میانگین زمان گام برای هر χ و نمای برازش log(t) = p log(χ) + c
    """
    rng = np.random.default_rng(seed)
    perf = PerformanceLogger(logger)
    cfg = IntegratorConfig(dt=dt, n_jobs=n_jobs)
    timings = []
    for chi in chis:
        qgn = synthetic_qgn(graph, int(chi), rng)
        rk4_modified_step(qgn, cfg)
        perf.start(f"chi={chi}")
        for _ in range(steps):
            qgn = rk4_modified_step(qgn, cfg)
        timings.append(perf.end(f"chi={chi}") / steps)
        logger.info(f"⏱ chi={chi}: {timings[-1]:.4f}s per step")

    exponent = float(np.polyfit(np.log(chis), np.log(timings), 1)[0]) if len(chis) > 1 else float("nan")
    logger.info(f"📊 step cost ~ chi^{exponent:.2f}")
    return BenchmarkResult(chis=[int(c) for c in chis], seconds_per_step=timings, exponent=exponent)

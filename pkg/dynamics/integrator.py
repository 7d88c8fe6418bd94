# dynamics/integrator.py
"""
Runge-Kutta اصلاح‌شده برای QGN

هر مرحله k:
    Ũ^(k)_I = exp(-i δt Σ_{l<k} a_kl G̃^(l)_I)
    V^(k)_IJ = Ũ_I V_IJ Ũ_J†  →  G^(k) = H' ساخته‌شده از V^(k)
    G̃^(k) = ½(Ũ† G^(k) Ũ + G^(k))        (در حالت plain: G̃ = G)
به‌روزرسانی نهایی:
    U_I = exp(-i δt Σ_k b_k G̃^(k)_I) ، ψ_I ← U_I ψ_I ، V_IJ ← U_I V_IJ U_J†

چون U یکانی است، Vψ = ψ و ‖ψ‖ تا خطای گرد کردن حفظ می‌شوند.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh

import config
from core.error_handler import ContractViolation, IntegratorError
from core.gauge_network import QGN
from dynamics.hamiltonian import build_h_prime, map_patches

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RKTableau:
    a: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]
    c: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'a', tuple(tuple(float(x) for x in row) for row in self.a))
        object.__setattr__(self, 'b', tuple(float(x) for x in self.b))
        object.__setattr__(self, 'c', tuple(float(x) for x in self.c))
        s = len(self.b)
        if len(self.a) != s or len(self.c) != s or any(len(row) != s for row in self.a):
            raise ContractViolation("tableau a, b and c must describe the same number of stages")
        if abs(sum(self.b) - 1.0) > 1e-12:
            raise ContractViolation(f"tableau weights must sum to 1, got {sum(self.b)}")
        if self.c[0] != 0.0:
            raise ContractViolation("first stage must start at c = 0")
        for k, row in enumerate(self.a):
            if any(row[l] != 0.0 for l in range(k, s)):
                raise ContractViolation("only explicit tableaus are supported")

    @property
    def stages(self) -> int:
        return len(self.b)

    @classmethod
    def rk4(cls) -> "RKTableau":
        return cls(**config.RK4_TABLEAU)


@dataclass
class IntegratorConfig:
    dt: float
    tableau: RKTableau = field(default_factory=RKTableau.rk4)
    mode: str = "modified"
    n_jobs: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ContractViolation(f"time step must be positive, got {self.dt}")
        if self.mode not in config.INTEGRATOR_MODES:
            raise ContractViolation(f"unknown integrator mode '{self.mode}'")
        if self.n_jobs == 0:
            raise ContractViolation("n_jobs must be nonzero")


def expm_herm(generator: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i dt G) برای G هرمیتی از راه تجزیه ویژه"""
    if generator.size == 0:
        return generator.astype(complex)
    evals, evecs = eigh(generator)
    return (evecs * np.exp(-1j * dt * evals)) @ evecs.conj().T


def _rotate_connections(connections: Dict, unitaries: Sequence[np.ndarray]) -> Dict:
    return {(i, j): unitaries[i] @ v @ unitaries[j].conj().T for (i, j), v in connections.items()}


def _guard(generators: List[np.ndarray], residual: float, stage: int) -> List[np.ndarray]:
    if not np.isfinite(residual) or any(not np.all(np.isfinite(g)) for g in generators):
        raise IntegratorError(f"stage {stage + 1}: generator has non-finite entries")
    if residual > config.HERMITIAN_TOLERANCE:
        raise IntegratorError(f"stage {stage + 1}: generator Hermiticity residual {residual:.2e} "
                              f"exceeds {config.HERMITIAN_TOLERANCE:.0e}")
    return generators


def rk4_modified_step(qgn: QGN, cfg: IntegratorConfig) -> QGN:
    """یک گام δt؛ QGN ورودی تغییر نمی‌کند"""
    tableau = cfg.tableau
    dt = cfg.dt
    n = qgn.n_patches
    stage_generators: List[List[np.ndarray]] = []

    for k in range(tableau.stages):
        weights = [(l, tableau.a[k][l]) for l in range(k) if tableau.a[k][l] != 0.0]
        if weights:
            def stage_unitary(p, weights=weights):
                generator = sum(w * stage_generators[l][p] for l, w in weights)
                return expm_herm(generator, dt)

            unitaries = map_patches(stage_unitary, n, cfg.n_jobs)
            stage = qgn.evolved(
                [u @ v for u, v in zip(unitaries, qgn.psi)],
                _rotate_connections(qgn.connections, unitaries),
                qgn.time + tableau.c[k] * dt,
            )
        else:
            unitaries = None
            stage = qgn

        h_prime = build_h_prime(stage, cfg.n_jobs)
        generators = h_prime.matrices
        residual = h_prime.hermitian_residual

        if unitaries is not None and cfg.mode == "modified":
            def symmetrize(p):
                u = unitaries[p]
                g = generators[p]
                return 0.5 * (u.conj().T @ g @ u + g)

            generators = map_patches(symmetrize, n, cfg.n_jobs)
            residual = max(residual, max(
                (float(np.abs(g - g.conj().T).max()) for g in generators if g.size), default=0.0))
            generators = [0.5 * (g + g.conj().T) for g in generators]

        stage_generators.append(_guard(generators, residual, k))

    def final_unitary(p):
        generator = sum(b * stage_generators[k][p] for k, b in enumerate(tableau.b) if b != 0.0)
        return expm_herm(generator, dt)

    unitaries = map_patches(final_unitary, n, cfg.n_jobs)
    psi = [u @ v for u, v in zip(unitaries, qgn.psi)]
    return qgn.evolved(psi, _rotate_connections(qgn.connections, unitaries), qgn.time + dt)

# core/oracle.py
"""
اوراکل‌های دقیق برای مقایسه با QGN:
- تحول شرودینگر کامل (Lanczos با زیرگام تطبیقی، یا قطری‌سازی کامل برای ابعاد کوچک)
- تحول ماتریس همبستگی فرمیون‌های آزاد
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, expm

import config
from core.error_handler import ContractViolation, ToleranceError
from core.fock import FullState, SparseOperator
from core.lattice import PatchGraph

logger = logging.getLogger(__name__)

_BREAKDOWN = 1e-14


# ==================== Lanczos ====================

def _lanczos(matvec, v0: np.ndarray, krylov_dim: int):
    """
    پایه کریلف با متعامدسازی کامل

    Returns:
        (پایه به صورت سطری، قطر، زیرقطر با باقیمانده آخر، شکست زودهنگام)
    """
    n = v0.size
    m = min(krylov_dim, n)
    basis = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[0] = v0

    for j in range(m):
        w = matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j]
        if j > 0:
            w = w - beta[j - 1] * basis[j - 1]
        # متعامدسازی مجدد کامل
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < _BREAKDOWN:
            return basis[:j + 1], alpha[:j + 1], beta[:j + 1], True
        if j + 1 < m:
            basis[j + 1] = w / beta[j]
    return basis, alpha, beta, m == n


def _krylov_step(matvec, psi: np.ndarray, tau: float, krylov_dim: int) -> Tuple[np.ndarray, float]:
    """یک گام e^{-iHτ}ψ در زیرفضای کریلف؛ خروجی (بردار، تخمین خطا)"""
    norm0 = np.linalg.norm(psi)
    if norm0 == 0.0:
        return psi.copy(), 0.0

    basis, alpha, beta, exhausted = _lanczos(matvec, psi / norm0, krylov_dim)
    k = alpha.size
    if k == 1:
        evals, evecs = alpha.copy(), np.ones((1, 1))
    else:
        evals, evecs = eigh_tridiagonal(alpha, beta[:k - 1])

    coef = evecs @ (np.exp(-1j * tau * evals) * evecs[0, :])
    result = norm0 * (basis.T @ coef)
    error = 0.0 if exhausted else float(norm0 * beta[k - 1] * abs(coef[k - 1]))
    return result, error


def krylov_evolve(H: SparseOperator, psi: np.ndarray, t: float,
                  krylov_dim: int = None, tol: float = None,
                  max_halvings: int = None) -> np.ndarray:
    """
    e^{-iHt}ψ با زیرگام‌های تطبیقی

    هر بار که تخمین خطا از tol بیشتر شود، زیرگام نصف می‌شود.
    """
    krylov_dim = krylov_dim or config.KRYLOV_DIM
    tol = tol if tol is not None else config.KRYLOV_TOLERANCE
    max_halvings = max_halvings if max_halvings is not None else config.KRYLOV_MAX_HALVINGS

    matrix = H.matrix
    matvec = lambda v: matrix @ v  # noqa: E731

    direction = 1.0 if t >= 0 else -1.0
    remaining = abs(t)
    substep = remaining
    halvings = 0
    current = np.asarray(psi, dtype=complex).copy()

    while remaining > 1e-15 * max(abs(t), 1.0):
        step = min(substep, remaining)
        candidate, error = _krylov_step(matvec, current, direction * step, krylov_dim)
        if error > tol:
            substep = step / 2
            halvings += 1
            if halvings > max_halvings:
                raise ToleranceError(
                    f"Krylov propagation did not converge (error {error:.3e} > {tol:.1e} "
                    f"after {halvings} halvings)"
                )
            continue
        current = candidate
        remaining -= step

    if halvings:
        logger.debug(f"🔄 Krylov substep settled at {substep:.4g} after {halvings} halvings")
    return current


# ==================== تحول کامل ====================

def _require_hermitian(H: SparseOperator):
    if H.shape[0] != H.shape[1]:
        raise ContractViolation(f"Hamiltonian must be square, got {H.shape}")
    if not H.spot_check_hermitian():
        raise ContractViolation(f"Hamiltonian '{H.name or 'H'}' is not Hermitian")


def _dense_propagator(H: SparseOperator):
    evals, evecs = eigh(H.toarray())

    def propagate(psi: np.ndarray, t: float) -> np.ndarray:
        return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ psi))

    return propagate


def exact_evolve(state: FullState, H: SparseOperator, t: float,
                 dense_cutoff: Optional[int] = None, krylov_dim: int = None) -> FullState:
    """
    e^{-iHt}|Ψ> روی فضای کامل

    زیر dense_cutoff با قطری‌سازی کامل، در غیر این صورت با Lanczos.
    """
    _require_hermitian(H)
    if H.dim != state.basis.dim:
        raise ContractViolation(f"Hamiltonian dim {H.dim} != state dim {state.basis.dim}")
    if t == 0:
        return state.copy()

    cutoff = dense_cutoff if dense_cutoff is not None else config.DENSE_CUTOFF
    if H.dim < cutoff:
        amplitudes = _dense_propagator(H)(state.amplitudes, t)
    else:
        amplitudes = krylov_evolve(H, state.amplitudes, t, krylov_dim=krylov_dim)
    return FullState(amplitudes, state.basis, normalized=False)


def exact_evolve_series(state: FullState, H: SparseOperator, times: Sequence[float],
                        dense_cutoff: Optional[int] = None,
                        krylov_dim: int = None) -> List[FullState]:
    """
    حالت‌ها روی یک شبکه زمانی صعودی (همان شبکه نمونه‌برداری QGN)
    """
    _require_hermitian(H)
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ContractViolation("times must be non-decreasing")

    cutoff = dense_cutoff if dense_cutoff is not None else config.DENSE_CUTOFF
    results = []
    if H.dim < cutoff:
        propagate = _dense_propagator(H)
        for t in times:
            results.append(FullState(propagate(state.amplitudes, t), state.basis, normalized=False))
        return results

    current = state.amplitudes
    previous_t = 0.0
    for t in times:
        if t != previous_t:
            current = krylov_evolve(H, current, t - previous_t, krylov_dim=krylov_dim)
            previous_t = t
        results.append(FullState(current.copy(), state.basis, normalized=False))
    logger.debug(f"✅ Krylov oracle sampled {len(times)} times (dim={H.dim})")
    return results


# ==================== فرمیون آزاد ====================

@dataclass
class CorrelationMatrix:
    """C_ij = <c†_i c_j>"""
    matrix: np.ndarray
    validate: bool = True

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ContractViolation(f"correlation matrix must be square, got {self.matrix.shape}")
        if self.validate:
            self.check()

    def check(self, tol: float = 1e-10):
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=tol):
            raise ContractViolation("correlation matrix is not Hermitian")
        evals = np.linalg.eigvalsh(self.matrix)
        if evals.min() < -tol or evals.max() > 1 + tol:
            raise ContractViolation(f"correlation eigenvalues outside [0, 1]: [{evals.min()}, {evals.max()}]")

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    def occupations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def particle_number(self) -> float:
        return float(np.real(np.trace(self.matrix)))


def correlation_from_occupation(bits: int, n_sites: int) -> CorrelationMatrix:
    """ماتریس همبستگی قطری یک حالت فوک"""
    occupation = [(bits >> i) & 1 for i in range(n_sites)]
    return CorrelationMatrix(np.diag(np.asarray(occupation, dtype=complex)))


def hopping_matrix(patch_graph: PatchGraph, hopping: float = 1.0) -> np.ndarray:
    """h تک‌ذره‌ای: H = Σ h_ij c†_i c_j برای جمله پرش روی هر وصله پیوندی"""
    n = patch_graph.n_sites
    h = np.zeros((n, n), dtype=complex)
    for i, j in patch_graph.patches:
        h[i, j] -= hopping
        h[j, i] -= hopping
    return h


def free_fermion_evolve(h_single: np.ndarray, C0, t: float) -> CorrelationMatrix:
    """
    C(t) = e^{i hᵀ t} C0 e^{-i hᵀ t}

    برای h حقیقی متقارن همان e^{iht} C0 e^{-iht} است.
    """
    h_single = np.asarray(h_single, dtype=complex)
    C = C0.matrix if isinstance(C0, CorrelationMatrix) else np.asarray(C0, dtype=complex)
    if h_single.shape != C.shape:
        raise ContractViolation(f"h {h_single.shape} and C0 {C.shape} dimensions differ")
    if not np.allclose(h_single, h_single.conj().T, atol=1e-12):
        raise ContractViolation("single-particle Hamiltonian is not Hermitian")

    evals, evecs = eigh(h_single.T)
    U = evecs @ np.diag(np.exp(1j * evals * t)) @ evecs.conj().T
    Ct = U @ C @ U.conj().T
    return CorrelationMatrix(0.5 * (Ct + Ct.conj().T), validate=False)


def free_fermion_series(h_single: np.ndarray, C0, times: Sequence[float]) -> List[CorrelationMatrix]:
    return [free_fermion_evolve(h_single, C0, t) for t in times]


def propagator(H_dense: np.ndarray, t: float) -> np.ndarray:
    """e^{-iHt} متراکم برای ماتریس‌های کوچک (آزمون‌ها)"""
    return expm(-1j * t * np.asarray(H_dense))

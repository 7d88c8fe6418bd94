# dynamics/hamiltonian.py
"""
همیلتونی مؤثر هر وصله

H'_I = Σ_{J ∩ I ≠ ∅} V_IJ H_J V_JI   (جمله J = I خود H_I است)

و صورت کلی برای جمله‌های چندوصله‌ای:
H'_I = Σ ½h (V_IJ τ_J V_JI) ... (V_IK τ_K V_KI) + h.c.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from core.error_handler import ContractViolation
from core.gauge_network import QGN

logger = logging.getLogger(__name__)

HAMILTONIAN = "H"


def map_patches(fn: Callable[[int], object], n_patches: int, n_jobs: int = 1) -> list:
    """اجرای fn برای هر وصله؛ با n_jobs > 1 روی thread های joblib"""
    if n_jobs == 1 or n_patches < 2:
        return [fn(p) for p in range(n_patches)]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fn)(p) for p in range(n_patches))


@dataclass
class EffectiveHamiltonianSet:
    """
    H'_I برای هر وصله

    hermitian_residual: بیشینه ‖X - X†‖ پیش از متقارن‌سازی عددی
    """
    matrices: List[np.ndarray]
    hermitian_residual: float = 0.0

    def __getitem__(self, patch: int) -> np.ndarray:
        return self.matrices[patch]

    def __len__(self) -> int:
        return len(self.matrices)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(np.abs(m - m.conj().T).max() <= tol for m in self.matrices if m.size)


def _hermitize(matrix: np.ndarray) -> Tuple[np.ndarray, float]:
    residual = float(np.abs(matrix - matrix.conj().T).max()) if matrix.size else 0.0
    return 0.5 * (matrix + matrix.conj().T), residual


def h_prime_for_patch(qgn: QGN, patch: int) -> Tuple[np.ndarray, float]:
    acc = qgn.operator(patch, HAMILTONIAN).astype(complex, copy=True)
    for other in qgn.graph.overlapping(patch):
        v = qgn.connection(patch, other)
        acc += v @ qgn.operator(other, HAMILTONIAN) @ v.conj().T
    return _hermitize(acc)


def build_h_prime(qgn: QGN, n_jobs: int = 1) -> EffectiveHamiltonianSet:
    results = map_patches(lambda p: h_prime_for_patch(qgn, p), qgn.n_patches, n_jobs)
    return EffectiveHamiltonianSet(
        matrices=[m for m, _ in results],
        hermitian_residual=max((r for _, r in results), default=0.0),
    )


# ==================== جفت‌شدگی کلی ====================

@dataclass(frozen=True)
class CouplingTerm:
    """h · τ^μ_J ... τ^ν_K"""
    patches: Tuple[int, ...]
    names: Tuple[str, ...]
    coefficient: float

    def __post_init__(self):
        object.__setattr__(self, 'patches', tuple(int(p) for p in self.patches))
        object.__setattr__(self, 'names', tuple(self.names))
        if len(self.patches) != len(self.names) or not self.patches:
            raise ContractViolation("a coupling term needs one operator name per patch")
        if isinstance(self.coefficient, complex) or not np.isreal(self.coefficient):
            raise ContractViolation("coupling coefficients must be real")
        object.__setattr__(self, 'coefficient', float(self.coefficient))

    def ordered(self) -> List[Tuple[int, str]]:
        """ترتیب ضرب: وصله با اندیس کمتر اول"""
        return sorted(zip(self.patches, self.names), key=lambda e: e[0])


@dataclass
class GeneralCoupling:
    terms: List[CouplingTerm] = field(default_factory=list)

    def add(self, patches: Sequence[int], names: Sequence[str], coefficient: float) -> "GeneralCoupling":
        self.terms.append(CouplingTerm(tuple(patches), tuple(names), coefficient))
        return self

    @classmethod
    def from_local_hamiltonians(cls, qgn: QGN) -> "GeneralCoupling":
        return cls([CouplingTerm((p,), (HAMILTONIAN,), 1.0) for p in range(qgn.n_patches)])


def _link(qgn: QGN, source: int, target: int) -> np.ndarray:
    """V از target به source؛ اگر ذخیره نشده باشد حاصل‌ضرب در طول مسیر"""
    if source == target:
        return np.eye(qgn.chi(source), dtype=complex)
    if qgn.graph.has_edge(source, target):
        return qgn.connection(source, target)
    return qgn.transport(qgn.graph.path(source, target))


def _conjugated_product(qgn: QGN, patch: int, term: CouplingTerm) -> np.ndarray:
    product = np.eye(qgn.chi(patch), dtype=complex)
    for other, name in term.ordered():
        v = _link(qgn, patch, other)
        product = product @ (v @ qgn.operator(other, name) @ v.conj().T)
    return product


def _touches(qgn: QGN, patch: int, term: CouplingTerm) -> bool:
    sites = set(qgn.graph.patches[patch])
    return any(sites.intersection(qgn.graph.patches[p]) for p in term.patches)


def build_h_prime_general(qgn: QGN, couplings: GeneralCoupling, n_jobs: int = 1) -> EffectiveHamiltonianSet:
    """
    H'_I برای جمله‌هایی که روی یک وصله نیستند

    انرژی با این صورت در حالت کلی دقیقاً پایسته نیست.
    """

    def one(patch: int) -> np.ndarray:
        acc = np.zeros((qgn.chi(patch),) * 2, dtype=complex)
        for term in couplings.terms:
            if _touches(qgn, patch, term):
                product = _conjugated_product(qgn, patch, term)
                acc += 0.5 * term.coefficient * (product + product.conj().T)
        return acc

    return EffectiveHamiltonianSet(matrices=map_patches(one, qgn.n_patches, n_jobs))


# ==================== انرژی ====================

def energy_qgn(qgn: QGN) -> float:
    """Σ_I <ψ_I|H_I|ψ_I>"""
    total = 0j
    for patch in range(qgn.n_patches):
        psi = qgn.psi[patch]
        total += np.vdot(psi, qgn.operator(patch, HAMILTONIAN) @ psi)
    if abs(total.imag) > 1e-10:
        logger.warning(f"⚠️ energy has imaginary part {total.imag:.2e}")
    return float(total.real)


def energy_general(qgn: QGN, couplings: GeneralCoupling) -> float:
    """
    تخمین انرژی برای جفت‌شدگی کلی: هر جمله در وصله با کمترین اندیس ارزیابی می‌شود
    """
    total = 0.0
    for term in couplings.terms:
        anchor = min(term.patches)
        psi = qgn.psi[anchor]
        total += term.coefficient * float(np.vdot(psi, _conjugated_product(qgn, anchor, term) @ psi).real)
    return total

# construction/mps.py
"""
MPS: فرم کانونی هم‌زمان و تبدیل به QGN با وصله‌های تک‌سایتی

شکل تنسور سایت i: (χ_i, d_i, χ_{i+1}) با χ_0 = χ_n = 1
فرم کانونی: C_i = S_i B_i ، L_i = C_i S_{i+1}^{-1} ، R_i = B_i
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from core.error_handler import ConstructionError
from core.gauge_network import QGN, op_key
from core.lattice import LatticeSpec, build_single_site_patch_graph

logger = logging.getLogger(__name__)

_SCHMIDT_CUTOFF = 1e-13

_PAULIS = {
    "sx": np.array([[0, 1], [1, 0]], dtype=complex),
    "sy": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sz": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class MPS:
    """تنسورهای خام MPS"""
    tensors: List[np.ndarray]

    def __post_init__(self):
        self.tensors = [np.asarray(t, dtype=complex) for t in self.tensors]
        if not self.tensors:
            raise ConstructionError("an MPS needs at least one site")
        for i, t in enumerate(self.tensors):
            if t.ndim != 3:
                raise ConstructionError(f"tensor {i} must have 3 legs, got shape {t.shape}")
            if not np.all(np.isfinite(t)):
                raise ConstructionError(f"tensor {i} has non-finite entries")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ConstructionError("boundary bond dimensions must be 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[0]:
                raise ConstructionError(f"bond {i} dimensions disagree")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[0] for t in self.tensors] + [1]

    @property
    def phys_dims(self) -> List[int]:
        return [t.shape[1] for t in self.tensors]


@dataclass
class CanonicalMPS:
    """فرم کانونی هم‌زمان: مراکز، ایزومتری‌های چپ و راست و مقادیر اشمیت هر پیوند"""
    centers: List[np.ndarray]
    left: List[np.ndarray]
    right: List[np.ndarray]
    schmidt: List[np.ndarray]

    @property
    def n_sites(self) -> int:
        return len(self.centers)

    @property
    def bond_dims(self) -> List[int]:
        return [s.size for s in self.schmidt]

    @property
    def phys_dims(self) -> List[int]:
        return [c.shape[1] for c in self.centers]

    def to_mps(self) -> MPS:
        """صورت چپ-کانونی با مرکز در سایت آخر"""
        return MPS(self.left[:-1] + [self.centers[-1]])


def mps_canonicalize(mps) -> CanonicalMPS:
    """
    یک جاروب QR به راست برای نرمال‌سازی، سپس جاروب SVD به چپ برای مقادیر اشمیت

    نتیجه همان دو جاروب SVD است: جاروب اول فقط پیمانه و نرم را ثابت می‌کند و
    عوامل یکانی آن در جاروب دوم جذب می‌شوند. برش مقادیر اشمیت کوچک
    (کمتر از _SCHMIDT_CUTOFF نسبت به بزرگ‌ترین) فقط در جاروب دوم انجام می‌شود.
    """
    mps = mps if isinstance(mps, MPS) else MPS(list(mps))
    tensors = [t.copy() for t in mps.tensors]
    n = len(tensors)

    carry = np.ones((1, 1), dtype=complex)
    for i in range(n):
        t = np.einsum('ab,bsc->asc', carry, tensors[i])
        chi_l, d, chi_r = t.shape
        q, carry = np.linalg.qr(t.reshape(chi_l * d, chi_r))
        tensors[i] = q.reshape(chi_l, d, q.shape[1])
    norm = abs(carry[0, 0])
    if norm < 1e-300:
        raise ConstructionError("MPS encodes the zero state")
    tensors[-1] = tensors[-1] * (carry[0, 0] / norm)

    right: List[Optional[np.ndarray]] = [None] * n
    schmidt: List[Optional[np.ndarray]] = [None] * (n + 1)
    schmidt[n] = np.ones(1)
    for i in range(n - 1, 0, -1):
        chi_l, d, chi_r = tensors[i].shape
        u, s, vh = np.linalg.svd(tensors[i].reshape(chi_l, d * chi_r), full_matrices=False)
        keep = s > _SCHMIDT_CUTOFF * s[0]
        u, s, vh = u[:, keep], s[keep], vh[keep]
        right[i] = vh.reshape(s.size, d, chi_r)
        schmidt[i] = s
        tensors[i - 1] = np.einsum('asb,bc->asc', tensors[i - 1], u * s)
    right[0] = tensors[0]
    schmidt[0] = np.ones(1)

    centers = [np.einsum('a,asb->asb', schmidt[i], right[i]) for i in range(n)]
    left = [np.einsum('asb,b->asb', centers[i], 1.0 / schmidt[i + 1]) for i in range(n)]
    result = CanonicalMPS(centers=centers, left=left, right=right, schmidt=schmidt)
    logger.debug(f"✅ canonical MPS, bonds = {result.bond_dims}")
    return result


def canonical_residual(cmps: CanonicalMPS) -> float:
    """بیشینه انحراف از اتحادهای فرم کانونی هم‌زمان"""
    worst = 0.0
    for i in range(cmps.n_sites):
        L, R, C = cmps.left[i], cmps.right[i], cmps.centers[i]
        eye_l = np.eye(L.shape[2])
        eye_r = np.eye(R.shape[0])
        worst = max(worst,
                    float(np.abs(np.einsum('asb,asc->bc', L.conj(), L) - eye_l).max()),
                    float(np.abs(np.einsum('asb,csb->ac', R, R.conj()) - eye_r).max()),
                    abs(float(np.linalg.norm(C)) - 1.0))
        if i + 1 < cmps.n_sites:
            lhs = np.einsum('asb,btc->astc', L, cmps.centers[i + 1])
            rhs = np.einsum('asb,btc->astc', C, cmps.right[i + 1])
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def mps_to_qgn(cmps: CanonicalMPS, local_ops: Mapping[str, np.ndarray] = None,
               path_style: str = "snake", tol: float = 1e-10) -> QGN:
    """
    QGN با وصله‌های تک‌سایتی: ψ_i = C_i با ترتیب (α, s, β) و V_{i,i+1} = L_i ⊗ R*_{i+1}

    χ_i = χ^MPS_i d_i χ^MPS_{i+1}
    """
    residual = canonical_residual(cmps)
    if residual > tol:
        raise ConstructionError(f"MPS is not in simultaneous canonical form (residual {residual:.2e})")

    n = cmps.n_sites
    graph = build_single_site_patch_graph(LatticeSpec((n,), (False,)), path_style)
    if local_ops is None:
        local_ops = _PAULIS if set(cmps.phys_dims) == {2} else {}

    psi = [c.reshape(-1) for c in cmps.centers]
    connections = {}
    for i in range(n - 1):
        v = np.einsum('ixa,jyb->ixjayb', cmps.left[i], cmps.right[i + 1].conj())
        connections[(i, i + 1)] = v.reshape(psi[i].size, psi[i + 1].size)

    operators = []
    for i, c in enumerate(cmps.centers):
        eye_l, eye_r = np.eye(c.shape[0]), np.eye(c.shape[2])
        operators.append({
            op_key(name, i): np.kron(np.kron(eye_l, np.asarray(m, dtype=complex)), eye_r)
            for name, m in local_ops.items()
        })

    qgn = QGN(graph=graph, psi=psi, connections=connections, operators=operators, kind="spin",
              metadata={'construction': 'mps', 'mps_bonds': cmps.bond_dims})
    logger.info(f"✅ MPS -> QGN: chi = {qgn.chis}")
    return qgn


# ==================== اوراکل و نمونه‌ها ====================

def mps_to_dense(mps) -> np.ndarray:
    """بردار کامل با سایت 0 به عنوان کم‌ارزش‌ترین رقم"""
    tensors = mps.tensors if isinstance(mps, MPS) else list(mps)
    psi = tensors[0]
    for t in tensors[1:]:
        psi = np.tensordot(psi, t, axes=(-1, 0))
    psi = psi.reshape(psi.shape[1:-1])
    return np.transpose(psi, tuple(reversed(range(psi.ndim)))).reshape(-1)


def mps_expectation(mps, ops: Mapping[int, np.ndarray]) -> complex:
    """<Ψ|Π_i o_i|Ψ> / <Ψ|Ψ> با ماتریس‌های انتقال"""
    tensors = mps.tensors if isinstance(mps, MPS) else list(mps)
    env = np.ones((1, 1), dtype=complex)
    norm = np.ones((1, 1), dtype=complex)
    for i, t in enumerate(tensors):
        acted = np.einsum('st,atb->asb', ops[i], t) if i in ops else t
        env = np.einsum('ac,asb,csd->bd', env, t.conj(), acted)
        norm = np.einsum('ac,asb,csd->bd', norm, t.conj(), t)
    return complex(env[0, 0] / norm[0, 0])


def random_mps(n_sites: int, d: int, chi: int, rng: np.random.Generator) -> MPS:
    """MPS تصادفی با پیوندهای min(χ, d^i, d^(n-i))"""
    bonds = [min(chi, d ** i, d ** (n_sites - i)) for i in range(n_sites + 1)]
    tensors = []
    for i in range(n_sites):
        shape = (bonds[i], d, bonds[i + 1])
        tensors.append(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    return MPS(tensors)


def ghz_mps(n_sites: int) -> MPS:
    """(|0...0> + |1...1>)/√2 با χ = 2"""
    if n_sites == 1:
        return MPS([np.ones((1, 2, 1)) / np.sqrt(2)])
    first = np.zeros((1, 2, 2))
    first[0, 0, 0] = first[0, 1, 1] = 1 / np.sqrt(2)
    middle = np.zeros((2, 2, 2))
    middle[0, 0, 0] = middle[1, 1, 1] = 1.0
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = last[1, 1, 0] = 1.0
    return MPS([first] + [middle.copy() for _ in range(n_sites - 2)] + [last])


def product_mps(local_states: Sequence[np.ndarray]) -> MPS:
    return MPS([np.asarray(s, dtype=complex).reshape(1, -1, 1) for s in local_states])


def pauli_tables() -> Dict[str, np.ndarray]:
    return dict(_PAULIS)

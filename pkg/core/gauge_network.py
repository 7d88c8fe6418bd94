# core/gauge_network.py
"""
شبکه پیمانه‌ای کوانتومی (QGN): تابع موج محلی هر وصله، اتصال‌های V_IJ بین وصله‌های مجاور
و جدول عملگرهای بریده‌شده

ψ_I = Q_I Ψ ، V_IJ = Q_I Q_J† ، A_I = Q_I Â Q_I†
"""

import copy
import logging
import string
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

import config
from core.error_handler import (ConstructionError, ContractViolation,
                                IdentityNotApplicableWarning,
                                InvalidImageError, KindMismatchError,
                                MissingConnectionError, MissingOperatorError,
                                NonHermitianDensityWarning, RankError)
from core.fock import FullState, SparseOperator
from core.lattice import Edge, PatchGraph

logger = logging.getLogger(__name__)

IDENTITY = "id"
PAULI_NAMES = ("sx", "sy", "sz")

_PAULI_MATRICES = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def op_key(name: str, site: int) -> str:
    """نام عملگر در جدول وصله، مثلاً n_3 یا sx_0"""
    return f"{name}_{site}"


def _as_vector(state) -> np.ndarray:
    if isinstance(state, FullState):
        return state.amplitudes
    return np.asarray(state, dtype=complex).reshape(-1)


def _as_matrix(op):
    if isinstance(op, SparseOperator):
        return op.matrix
    if sp.issparse(op):
        return op
    return np.asarray(op, dtype=complex)


# ==================== نگاشت‌های برش ====================

@dataclass
class TruncationMapSet:
    """Q_I با ابعاد χ_I × N برای هر وصله"""
    maps: List[np.ndarray]

    @property
    def chis(self) -> List[int]:
        return [q.shape[0] for q in self.maps]

    @property
    def full_dim(self) -> int:
        return self.maps[0].shape[1] if self.maps else 0

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, patch: int) -> np.ndarray:
        return self.maps[patch]


def truncation_maps_from_images(images: Sequence[Sequence], rank_tol: float = None) -> TruncationMapSet:
    """
    Q_I از SVD فشرده بردارهای تصویر: M_I = Q_I† S_I R_I

    مقادیر تکین کوچک‌تر از rank_tol · max کنار گذاشته می‌شوند؛ χ_I رتبه عددی است.
    """
    rank_tol = rank_tol if rank_tol is not None else config.RANK_TOLERANCE
    maps = []
    for patch, vectors in enumerate(images):
        if len(vectors) == 0:
            raise InvalidImageError(f"patch {patch} has an empty image list")
        stacked = np.column_stack([_as_vector(v) for v in vectors])
        U, s, _ = np.linalg.svd(stacked, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            raise RankError(f"patch {patch}: all image vectors are zero")
        rank = int(np.count_nonzero(s > rank_tol * s[0]))
        maps.append(U[:, :rank].conj().T)

    result = TruncationMapSet(maps)
    logger.debug(f"🔢 truncation maps built, chi = {result.chis}")
    return result


def truncation_check(Q: TruncationMapSet, psi, tol: float = None):
    """Q Q† = 1 و Q†QΨ = Ψ برای همه وصله‌ها؛ در غیر این صورت ConstructionError"""
    tol = tol if tol is not None else config.ISOMETRY_TOLERANCE
    vector = _as_vector(psi)
    for patch, q in enumerate(Q.maps):
        if q.shape[1] != vector.size:
            raise ConstructionError(f"patch {patch}: map width {q.shape[1]} != state dim {vector.size}")
        gram = q @ q.conj().T
        if np.abs(gram - np.eye(q.shape[0])).max() > tol:
            raise ConstructionError(f"patch {patch}: Q Q† is not the identity")
        if np.linalg.norm(q.conj().T @ (q @ vector) - vector) > tol * max(np.linalg.norm(vector), 1.0):
            raise ConstructionError(f"patch {patch}: image does not contain the wavefunction")


# ==================== QGN ====================

@dataclass
class QGN:
    """
    داده‌های QGN روی یک گراف وصله

    connections فقط برای یال‌های گراف و با کلید (I, J) با I < J ذخیره می‌شود؛ V_JI = V_IJ†.
    """
    graph: PatchGraph
    psi: List[np.ndarray]
    connections: Dict[Edge, np.ndarray]
    operators: List[Dict[str, np.ndarray]]
    kind: str = "spin"
    time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.psi) != self.graph.n_patches:
            raise ContractViolation(f"{len(self.psi)} local states for {self.graph.n_patches} patches")
        if len(self.operators) != self.graph.n_patches:
            raise ContractViolation("operator tables must be given for every patch")
        for (i, j), v in self.connections.items():
            if i >= j:
                raise ContractViolation(f"connection key {(i, j)} must satisfy I < J")
            if v.shape != (self.psi[i].size, self.psi[j].size):
                raise ContractViolation(f"V_{i}{j} has shape {v.shape}, expected "
                                        f"{(self.psi[i].size, self.psi[j].size)}")

    @property
    def chis(self) -> List[int]:
        return [p.size for p in self.psi]

    def chi(self, patch: int) -> int:
        return self.psi[patch].size

    @property
    def n_patches(self) -> int:
        return self.graph.n_patches

    def connection(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.eye(self.chi(i), dtype=complex)
        if i < j:
            v = self.connections.get((i, j))
            if v is not None:
                return v
        else:
            v = self.connections.get((j, i))
            if v is not None:
                return v.conj().T
        raise MissingConnectionError(f"no stored connection between patches {i} and {j}")

    def transport(self, path: Sequence[int]) -> np.ndarray:
        """V_{p0 p1} V_{p1 p2} ... در طول مسیر"""
        result = np.eye(self.chi(path[0]), dtype=complex)
        for a, b in zip(path, path[1:]):
            result = result @ self.connection(a, b)
        return result

    def apply_transport(self, path: Sequence[int], vector: np.ndarray) -> np.ndarray:
        """V^path · vector بدون ساختن حاصل‌ضرب ماتریسی"""
        for a, b in reversed(list(zip(path, path[1:]))):
            vector = self.connection(a, b) @ vector
        return vector

    def operator(self, patch: int, name: str) -> np.ndarray:
        if name == IDENTITY:
            return np.eye(self.chi(patch), dtype=complex)
        table = self.operators[patch]
        if name not in table:
            raise MissingOperatorError(f"operator '{name}' is not stored on patch {patch}")
        return table[name]

    def has_operator(self, patch: int, name: str) -> bool:
        return name == IDENTITY or name in self.operators[patch]

    def copy(self) -> "QGN":
        return QGN(
            graph=self.graph,
            psi=[p.copy() for p in self.psi],
            connections={k: v.copy() for k, v in self.connections.items()},
            operators=[{k: v.copy() for k, v in table.items()} for table in self.operators],
            kind=self.kind,
            time=self.time,
            metadata=copy.deepcopy(self.metadata),
        )

    def evolved(self, psi: List[np.ndarray], connections: Dict[Edge, np.ndarray], time: float) -> "QGN":
        """QGN جدید با ψ و V تازه؛ جدول عملگرها مشترک می‌ماند"""
        return QGN(self.graph, psi, connections, self.operators, self.kind, time, self.metadata)

    def __repr__(self) -> str:
        return (f"QGN(kind={self.kind}, patches={self.n_patches}, chi={self.chis}, "
                f"edges={len(self.connections)}, t={self.time:.4g})")


def qgn_from_truncation(psi, Q: TruncationMapSet, graph: PatchGraph,
                        requested_ops: Sequence[Mapping[str, object]] = None,
                        kind: str = None, validate: bool = True) -> QGN:
    """
    ساخت QGN از Ψ و نگاشت‌های برش

    requested_ops: برای هر وصله نگاشتی از نام به عملگر فضای کامل
    """
    vector = _as_vector(psi)
    if kind is None:
        kind = psi.basis.kind if isinstance(psi, FullState) else "spin"
    if len(Q) != graph.n_patches:
        raise ConstructionError(f"{len(Q)} truncation maps for {graph.n_patches} patches")
    if validate:
        truncation_check(Q, vector)

    local = [q @ vector for q in Q.maps]
    connections = {(i, j): Q[i] @ Q[j].conj().T for i, j in sorted(graph.edges)}

    operators: List[Dict[str, np.ndarray]] = []
    requested_ops = requested_ops or [{} for _ in range(graph.n_patches)]
    for patch, table in enumerate(requested_ops):
        q = Q[patch]
        q_dag = q.conj().T
        truncated = {}
        for name, op in table.items():
            truncated[name] = q @ np.asarray(_as_matrix(op) @ q_dag)
        operators.append(truncated)

    qgn = QGN(graph=graph, psi=local, connections=connections, operators=operators, kind=kind)
    logger.debug(f"✅ {qgn}")
    return qgn


# ==================== رشته عملگرها ====================

@dataclass(frozen=True)
class OperatorString:
    """
    رشته (وصله، نام عملگر)؛ paths[m] در صورت وجود، مسیر کامل وصله‌ها از درایه m تا m+1 است
    """
    entries: Tuple[Tuple[int, str], ...]
    paths: Optional[Tuple[Optional[Tuple[int, ...]], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple((int(p), str(n)) for p, n in self.entries))
        if not self.entries:
            raise ContractViolation("operator string must have at least one entry")
        if self.paths is not None:
            paths = tuple(tuple(p) if p is not None else None for p in self.paths)
            if len(paths) != len(self.entries) - 1:
                raise ContractViolation("paths must have one entry per consecutive pair")
            for m, path in enumerate(paths):
                if path is None:
                    continue
                if path[0] != self.entries[m][0] or path[-1] != self.entries[m + 1][0]:
                    raise ContractViolation(f"path {path} does not join entries {m} and {m + 1}")
            object.__setattr__(self, 'paths', paths)

    def __len__(self) -> int:
        return len(self.entries)

    def path_between(self, graph: PatchGraph, m: int) -> Tuple[int, ...]:
        if self.paths is not None and self.paths[m] is not None:
            return self.paths[m]
        return graph.path(self.entries[m][0], self.entries[m + 1][0])

    @classmethod
    def along(cls, route: Sequence[int], names: Mapping[int, str]) -> "OperatorString":
        """
        رشته روی یک مسیر: وصله‌های موجود در names عملگر می‌گیرند و بقیه با اتصال عبور می‌کنند
        """
        entries, paths, segment = [], [], []
        for patch in route:
            segment.append(patch)
            if patch in names and not any(p == patch for p, _ in entries):
                if entries:
                    paths.append(tuple(segment))
                entries.append((patch, names[patch]))
                segment = [patch]
        return cls(tuple(entries), tuple(paths) if entries else None)


def expectation_string(qgn: QGN, s: OperatorString) -> complex:
    """<ψ_{I1}| A_{I1} V^path A_{I2} V^path ... A_{IM} |ψ_{IM}>"""
    entries = s.entries
    last_patch, last_name = entries[-1]
    vector = qgn.operator(last_patch, last_name) @ qgn.psi[last_patch]
    for m in range(len(entries) - 2, -1, -1):
        patch, name = entries[m]
        vector = qgn.apply_transport(s.path_between(qgn.graph, m), vector)
        vector = qgn.operator(patch, name) @ vector
    return complex(np.vdot(qgn.psi[entries[0][0]], vector))


def local_expectation(qgn: QGN, patch: int, name: str) -> complex:
    return complex(np.vdot(qgn.psi[patch], qgn.operator(patch, name) @ qgn.psi[patch]))


def vpsi_residual_along(qgn: QGN, path: Sequence[int]) -> float:
    residual = 0.0
    for a, b in zip(path, path[1:]):
        residual = max(residual, float(np.linalg.norm(qgn.connection(a, b) @ qgn.psi[b] - qgn.psi[a])))
    return residual


def connected_two_point(qgn: QGN, a_patch: int, a_name: str, b_patch: int, b_name: str,
                        path: Sequence[int] = None) -> complex:
    """
    <ψ_I|A V B|ψ_J> - <A><B>

    وقتی Vψ = ψ در طول مسیر برقرار است از صورت <(A-<A>) V (B-<B>)> استفاده می‌شود؛
    در غیر این صورت هشدار و مقدار تفاضل مستقیم.
    """
    path = tuple(path) if path is not None else qgn.graph.path(a_patch, b_patch)
    a_mean = local_expectation(qgn, a_patch, a_name)
    b_mean = local_expectation(qgn, b_patch, b_name)

    residual = vpsi_residual_along(qgn, path)
    if residual > config.VPSI_IDENTITY_TOLERANCE:
        warnings.warn(
            f"V·psi residual {residual:.2e} along {path}; returning the directly subtracted value",
            IdentityNotApplicableWarning,
        )
        direct = expectation_string(qgn, OperatorString(((a_patch, a_name), (b_patch, b_name)), (path,)))
        return direct - a_mean * b_mean

    shifted_a = qgn.operator(a_patch, a_name) - a_mean * np.eye(qgn.chi(a_patch))
    shifted_b = qgn.operator(b_patch, b_name) - b_mean * np.eye(qgn.chi(b_patch))
    vector = qgn.apply_transport(path, shifted_b @ qgn.psi[b_patch])
    return complex(np.vdot(qgn.psi[a_patch], shifted_a @ vector))


# ==================== ماتریس چگالی ====================

def density_matrix_from_qgn(qgn: QGN, path: Sequence[int] = None) -> np.ndarray:
    """
    ρ = 2^{-n} Σ_μ c_μ σ^{μ_0} ⊗ ... ⊗ σ^{μ_{n-1}}

    c_μ در یک جاروب راست به چپ روی مسیر محاسبه می‌شود؛ عملگر پائولی هر سایت در اولین عبور درج
    و در عبورهای بعدی فقط اتصال اعمال می‌شود. اندیس ماتریس: سایت 0 کم‌ارزش‌ترین بیت.
    """
    if qgn.kind != "spin":
        raise KindMismatchError("density matrices are extracted from spin QGNs only")
    if qgn.graph.kind != "site":
        raise ContractViolation("density extraction needs single-site patches")
    n = qgn.graph.n_sites
    if n > config.DENSITY_MATRIX_MAX_SITES:
        raise ContractViolation(f"density extraction is limited to {config.DENSITY_MATRIX_MAX_SITES} sites")

    route = tuple(path) if path is not None else qgn.graph.covering_path
    if route is None or set(route) != set(range(n)):
        raise ContractViolation("path must visit every single-site patch")

    first_visit = {}
    for position, patch in enumerate(route):
        first_visit.setdefault(patch, position)
    visit_order = sorted(first_visit, key=first_visit.get)

    tensor = None
    for position in range(len(route) - 1, -1, -1):
        patch = route[position]
        if tensor is None:
            tensor = qgn.psi[patch].astype(complex)
        if first_visit[patch] == position:
            site = qgn.graph.patches[patch][0]
            names = (IDENTITY,) + tuple(op_key(name, site) for name in PAULI_NAMES)
            stack = np.stack([qgn.operator(patch, name) for name in names])
            tensor = np.einsum('mab,...b->m...a', stack, tensor)
        if position > 0:
            link = qgn.connection(route[position - 1], patch)
            tensor = np.einsum('ab,...b->...a', link, tensor)

    coefficients = np.einsum('...a,a->...', tensor, qgn.psi[route[0]].conj())
    coefficients = np.transpose(coefficients, np.argsort(visit_order))

    mu = string.ascii_lowercase[:n]
    rows = string.ascii_lowercase[8:8 + n]
    cols = string.ascii_lowercase[16:16 + n]
    operands = [coefficients]
    subscripts = [mu]
    for s in range(n):
        operands.append(_PAULI_MATRICES)
        subscripts.append(mu[s] + rows[s] + cols[s])
    output = rows[::-1] + cols[::-1]
    rho = np.einsum(','.join(subscripts) + '->' + output, *operands).reshape(2 ** n, 2 ** n) / 2 ** n

    if np.abs(rho - rho.conj().T).max() > config.DENSITY_HERMITIAN_TOLERANCE:
        warnings.warn("extracted density matrix is not Hermitian", NonHermitianDensityWarning)
    return rho


# ==================== پیمانه و سازگاری ====================

def gauge_transform(qgn: QGN, gauges: Sequence[Optional[np.ndarray]]) -> QGN:
    """ψ → Λψ ، V_IJ → Λ_I V_IJ Λ_J† ، A → Λ A Λ†"""
    if len(gauges) != qgn.n_patches:
        raise ContractViolation("one gauge (or None) per patch is required")

    full = []
    for patch, lam in enumerate(gauges):
        if lam is None:
            full.append(None)
            continue
        lam = np.asarray(lam, dtype=complex)
        if lam.shape != (qgn.chi(patch),) * 2:
            raise ContractViolation(f"gauge on patch {patch} has shape {lam.shape}")
        if np.abs(lam.conj().T @ lam - np.eye(lam.shape[0])).max() > config.UNITARY_TOLERANCE:
            raise ContractViolation(f"gauge on patch {patch} is not unitary")
        full.append(lam)

    def left(patch, m):
        return m if full[patch] is None else full[patch] @ m

    def right(patch, m):
        return m if full[patch] is None else m @ full[patch].conj().T

    psi = [left(p, v) for p, v in enumerate(qgn.psi)]
    connections = {(i, j): right(j, left(i, v)) for (i, j), v in qgn.connections.items()}
    operators = [{name: right(p, left(p, a)) for name, a in table.items()}
                 for p, table in enumerate(qgn.operators)]
    return QGN(qgn.graph, psi, connections, operators, qgn.kind, qgn.time, copy.deepcopy(qgn.metadata))


@dataclass(frozen=True)
class ConsistencyResiduals:
    vpsi: float
    triangle: float
    singular_excess: float

    def as_dict(self) -> dict:
        return {'vpsi_residual': self.vpsi, 'triangle_residual': self.triangle,
                'singular_excess': self.singular_excess}


def consistency_residuals(qgn: QGN) -> ConsistencyResiduals:
    vpsi = 0.0
    excess = 0.0
    for (i, j), v in qgn.connections.items():
        vpsi = max(vpsi,
                   float(np.linalg.norm(v @ qgn.psi[j] - qgn.psi[i])),
                   float(np.linalg.norm(v.conj().T @ qgn.psi[i] - qgn.psi[j])))
        if v.size:
            excess = max(excess, float(np.linalg.norm(v, 2)) - 1.0)

    triangle = 0.0
    edges = qgn.connections
    for (i, j) in edges:
        for k in qgn.graph.neighbors(j):
            if k > j and (j, k) in edges and (i, k) in edges:
                diff = edges[(i, j)] @ edges[(j, k)] - edges[(i, k)]
                triangle = max(triangle, float(np.linalg.norm(diff)))

    return ConsistencyResiduals(vpsi=vpsi, triangle=triangle, singular_excess=max(excess, 0.0))


# ==================== مشاهده‌پذیرها ====================

def mean_local_expectation(qgn: QGN, site: int, name: str) -> float:
    """میانگین <ψ_I|A_i|ψ_I> روی همه وصله‌های شامل سایت"""
    patches = qgn.graph.patches_containing(site)
    if not patches:
        raise ContractViolation(f"site {site} belongs to no patch")
    key = op_key(name, site)
    values = [local_expectation(qgn, p, key) for p in patches]
    mean = sum(values) / len(values)
    if abs(mean.imag) > 1e-9:
        logger.warning(f"⚠️ <{key}> has imaginary part {mean.imag:.2e}")
    return float(mean.real)


def qgn_total_number(qgn: QGN) -> float:
    if qgn.kind != "fermion":
        raise KindMismatchError("total number is defined for fermion QGNs")
    return float(sum(mean_local_expectation(qgn, site, "n") for site in range(qgn.graph.n_sites)))

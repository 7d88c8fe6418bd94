# construction/images.py
"""
انتخاب تصویر نگاشت‌های برش برای رشته‌های عملگری دلخواه

برای رشته A^(1)_{I1} ... A^(M)_{IM} و نقطه میانی m0:
    Ψ^L_0 = Ψ ، Ψ^L_m = A^(m)† Ψ^L_{m-1}
    Ψ^R_{M+1} = Ψ ، Ψ^R_m = A^(m) Ψ^R_{m+1}
    m < m0 : {Ψ, Ψ^L_{m-1}, Ψ^L_m}
    m = m0 : {Ψ, Ψ^L_{m-1}, Ψ^R_{m+1}}
    m > m0 : {Ψ, Ψ^R_m, Ψ^R_{m+1}}
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.error_handler import ContractViolation, UnsupportedPathError
from core.fock import FullState, SparseOperator
from core.lattice import PatchGraph

logger = logging.getLogger(__name__)

StringEntry = Tuple[int, object]


def _matrix(op):
    if op is None:
        return None
    return op.matrix if isinstance(op, SparseOperator) else op


def _vector(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, FullState) else np.asarray(state, dtype=complex)


def default_midpoint(length: int) -> float:
    return float(math.ceil((length + 1) / 2))


@dataclass
class ImageRequest:
    """
    رشته‌هایی که باید دقیق کد شوند

    strings: هر رشته فهرستی از (وصله، عملگر فضای کامل)
    midpoints: m0 هر رشته (None = پیش‌فرض ⌈(M+1)/2⌉)؛ نیم‌صحیح مجاز است
    """
    strings: List[List[StringEntry]]
    midpoints: List[Optional[float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.midpoints:
            self.midpoints = [None] * len(self.strings)
        if len(self.midpoints) != len(self.strings):
            raise ContractViolation("one midpoint (or None) per string is required")
        for entries, m0 in zip(self.strings, self.midpoints):
            if not entries:
                raise ContractViolation("operator strings must be nonempty")
            if m0 is not None:
                if not 1 <= m0 <= len(entries) or (2 * m0) != int(2 * m0):
                    raise ContractViolation(f"midpoint {m0} is not a half-integer in [1, {len(entries)}]")

    def expanded(self, graph: PatchGraph) -> List[Tuple[List[StringEntry], float]]:
        """رشته‌ها با درج عملگر همانی روی وصله‌های میانی مسیر؛ m0 به اندیس جدید منتقل می‌شود"""
        result = []
        for entries, m0 in zip(self.strings, self.midpoints):
            expanded: List[StringEntry] = [entries[0]]
            positions = [1]
            for (a, _), (b, op) in zip(entries, entries[1:]):
                if a == b:
                    raise UnsupportedPathError(f"consecutive entries on the same patch {a}")
                if not graph.has_edge(a, b):
                    expanded.extend((p, None) for p in graph.path(a, b)[1:-1])
                expanded.append((b, op))
                positions.append(len(expanded))

            m0 = m0 if m0 is not None else default_midpoint(len(entries))
            k = int(math.floor(m0))
            if m0 == k:
                mapped = float(positions[k - 1])
            else:
                mapped = positions[k - 1] + 0.5
            result.append((expanded, mapped))
        return result

    def visit_counts(self, graph: PatchGraph) -> List[int]:
        """p_I: تعداد دفعات عبور رشته‌ها از هر وصله (پس از پل‌زدن)"""
        counts = [0] * graph.n_patches
        for expanded, _ in self.expanded(graph):
            for patch, _ in expanded:
                counts[patch] += 1
        return counts


def _string_images(psi: np.ndarray, entries: Sequence[StringEntry], m0: float):
    M = len(entries)
    ops = [_matrix(op) for _, op in entries]

    left = [psi]
    for m in range(1, M + 1):
        op = ops[m - 1]
        left.append(left[-1] if op is None else op.conj().T @ left[-1])

    right = [None] * (M + 2)
    right[M + 1] = psi
    for m in range(M, 0, -1):
        op = ops[m - 1]
        right[m] = right[m + 1] if op is None else op @ right[m + 1]

    for m in range(1, M + 1):
        patch = entries[m - 1][0]
        if m < m0:
            yield patch, (left[m - 1], left[m])
        elif m == m0:
            yield patch, (left[m - 1], right[m + 1])
        else:
            yield patch, (right[m], right[m + 1])


def images_for_strings(psi, request: ImageRequest, graph: PatchGraph) -> List[List[np.ndarray]]:
    """تصویر هر وصله: Ψ به علاوه اجتماع بردارهای چپ/راست همه رشته‌ها"""
    vector = _vector(psi)
    images: List[List[np.ndarray]] = [[vector] for _ in range(graph.n_patches)]
    for entries, m0 in request.expanded(graph):
        for patch, vectors in _string_images(vector, entries, m0):
            images[patch].extend(vectors)
    logger.debug(f"🖼 string images: {[len(v) for v in images]} vectors per patch")
    return images


def images_for_k_point(psi, operators: Sequence, k: int, graph: PatchGraph) -> List[List[np.ndarray]]:
    """
    span{Ψ, A_a Ψ, A_a A_b Ψ, ...} تا حاصل‌ضرب k عملگر؛ برای همه وصله‌ها یکسان
    """
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    if not operators:
        raise ContractViolation("operator list must be nonempty")

    matrices = [_matrix(op) for op in operators]
    level = [_vector(psi)]
    vectors = list(level)
    for _ in range(k):
        level = [op @ v for op in matrices for v in level]
        vectors.extend(level)
    logger.debug(f"🖼 {k}-point images: {len(vectors)} vectors")
    return [vectors for _ in range(graph.n_patches)]

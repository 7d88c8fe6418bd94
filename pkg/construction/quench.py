# construction/quench.py
"""
انتخاب تصویر برای کوئنچ از یک حالت ضرب‌شده در پایه اشغال

حلقه:
  1) شروع از {حالت اولیه} برای هر وصله
  2) بستن مجموعه هر وصله زیر عمل درون‌وصله‌ای (جابه‌جایی فرمیون یا پائولی‌های اسپین)
  3) توقف وقتی همه وصله‌ها حداقل min_chi حالت دارند (یا مجموعه‌ها دیگر تغییر نمی‌کنند)
  4) افزودن هم‌زمان حالت‌های وصله‌های هم‌پوشان (از روی یک عکس‌فوری)
  5) تکرار

هر تکرار حالت‌ها را یک وصله جلوتر می‌برد؛ روی زنجیره شطرنجی χ = 2, 4, 8, 16, 30, ...
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.error_handler import ContractViolation, InvalidImageError
from core.fock import (FERMION, SPIN, FermiModel, IsingModel, LocalOperator,
                       Model, local_terms, observable_names, site_observable)
from core.gauge_network import QGN, op_key
from core.lattice import PatchGraph

logger = logging.getLogger(__name__)

StateSets = List[FrozenSet[int]]


@dataclass
class QuenchImages:
    """مجموعه حالت‌های هر وصله همراه با χ هر وصله در هر نقطه توقف مرحله ۳"""
    states: List[np.ndarray]
    checkpoints: List[List[int]] = field(default_factory=list)
    saturated: bool = False

    @property
    def chis(self) -> List[int]:
        return [s.size for s in self.states]


def _swap_closure(states: FrozenSet[int], i: int, j: int) -> FrozenSet[int]:
    mask = (1 << i) | (1 << j)
    out = set(states)
    for s in states:
        if ((s >> i) & 1) != ((s >> j) & 1):
            out.add(s ^ mask)
    return frozenset(out)


def _flip_closure(states: FrozenSet[int], sites: Sequence[int]) -> FrozenSet[int]:
    out = set(states)
    for site in sites:
        out |= {s ^ (1 << site) for s in out}
    return frozenset(out)


def _image_loop(graph: PatchGraph, initial: int, min_chi: int,
                closure: Callable[[FrozenSet[int], Tuple[int, ...]], FrozenSet[int]],
                max_iterations: Optional[int]) -> QuenchImages:
    if graph.kind != "pair":
        raise ContractViolation("quench images need a nearest-neighbour pair patch graph")
    if min_chi < 1:
        raise ContractViolation(f"min_chi must be >= 1, got {min_chi}")

    overlaps = [graph.overlapping(p) for p in range(graph.n_patches)]

    def merged(snapshot: StateSets) -> StateSets:
        return [
            frozenset().union(snapshot[p], *(snapshot[q] for q in overlaps[p]))
            for p in range(graph.n_patches)
        ]

    sets: StateSets = [frozenset({initial}) for _ in range(graph.n_patches)]
    checkpoints: List[List[int]] = []
    previous: Optional[StateSets] = None
    saturated = False
    iteration = 0

    while True:
        iteration += 1
        sets = [closure(s, graph.patches[p]) for p, s in enumerate(sets)]

        counts = [len(s) for s in sets]
        checkpoints.append(counts)
        logger.debug(f"🔄 image iteration {iteration}: chi in [{min(counts)}, {max(counts)}]")
        if min(counts) >= min_chi:
            grown = [closure(s, graph.patches[p]) for p, s in enumerate(merged(sets))]
            saturated = grown == sets
            break
        if previous is not None and sets == previous:
            saturated = True
            logger.info(f"⚠️ images saturated at chi={max(counts)} before reaching min_chi={min_chi}")
            break
        if max_iterations is not None and iteration >= max_iterations:
            break
        previous = sets
        sets = merged(sets)

    states = [np.array(sorted(s), dtype=np.uint64) for s in sets]
    return QuenchImages(states=states, checkpoints=checkpoints, saturated=saturated)


def fermion_quench_images(graph: PatchGraph, initial_bits: int, min_chi: int,
                          max_iterations: int = None) -> QuenchImages:
    """
    تصاویر کوئنچ فرمیونی: عمل درون‌وصله‌ای جابه‌جایی اشغال دو سایت وصله است،
    پس هیچ حالتی از بخش تعداد ذره اولیه خارج نمی‌شود.
    """

    def closure(states, patch):
        i, j = patch
        return _swap_closure(states, i, j)

    result = _image_loop(graph, initial_bits, min_chi, closure, max_iterations)
    logger.info(f"✅ fermion quench images: chi = {sorted(set(result.chis))}")
    return result


def ising_quench_images(graph: PatchGraph, min_chi: int, initial_bits: int = 0,
                        max_iterations: int = None) -> QuenchImages:
    """
    تصاویر کوئنچ آیزینگ در پایه ویژه σ^x (بیت 0 = |→>)

    عمل پائولی‌های درون وصله در این پایه تا فاز، وارونه کردن بیت‌های وصله است.
    """
    result = _image_loop(graph, initial_bits, min_chi, _flip_closure, max_iterations)
    logger.info(f"✅ ising quench images: chi = {sorted(set(result.chis))}")
    return result


def quench_chi_sequence(graph: PatchGraph, initial_bits: int, kind: str,
                        max_iterations: int = 50) -> List[int]:
    """χ قابل دستیابی (کمینه روی وصله‌ها) در هر نقطه توقف تا اشباع"""
    if kind == FERMION:
        result = fermion_quench_images(graph, initial_bits, min_chi=1 << 62, max_iterations=max_iterations)
    else:
        result = ising_quench_images(graph, min_chi=1 << 62, initial_bits=initial_bits,
                                     max_iterations=max_iterations)
    sequence = []
    for counts in result.checkpoints:
        chi = min(counts)
        if not sequence or chi != sequence[-1]:
            sequence.append(chi)
    return sequence


# ==================== ساخت QGN ====================

def patch_operator_tables(model: Model, graph: PatchGraph) -> List[Dict[str, LocalOperator]]:
    """
    جدول عملگرهای هر وصله: H و مشاهده‌پذیرهای محلی سایت‌های وصله (n_i یا sx_i, sy_i, sz_i)
    """
    kind = model.basis_kind
    names = observable_names(kind)
    tables = []
    for patch, term in zip(graph.patches, local_terms(model, graph)):
        table = {"H": term}
        for site in patch:
            for name in names:
                table[op_key(name, site)] = site_observable(kind, name, site)
        tables.append(table)
    return tables


def qgn_from_basis_images(initial_bits: int, images: Sequence[np.ndarray], graph: PatchGraph,
                          operators: Sequence[Mapping[str, LocalOperator]], kind: str,
                          frame: str = "z") -> QGN:
    """
    QGN برای تصاویری که خود حالت‌های پایه‌اند (بدون ساخت پایه کامل)

    ψ_I = e_init ، V_IJ[a, b] = <s_a|t_b> ، A_I[a, b] = <s_a|Â|s_b>
    """
    if len(images) != graph.n_patches:
        raise ContractViolation(f"{len(images)} image sets for {graph.n_patches} patches")

    states = [np.unique(np.asarray(s, dtype=np.uint64)) for s in images]
    target = np.uint64(initial_bits)

    psi = []
    for patch, s in enumerate(states):
        pos = int(np.searchsorted(s, target))
        if pos >= s.size or s[pos] != target:
            raise InvalidImageError(f"patch {patch} image does not contain the initial state")
        vec = np.zeros(s.size, dtype=complex)
        vec[pos] = 1.0
        psi.append(vec)

    connections = {}
    for i, j in sorted(graph.edges):
        _, ia, jb = np.intersect1d(states[i], states[j], assume_unique=True, return_indices=True)
        v = np.zeros((states[i].size, states[j].size), dtype=complex)
        v[ia, jb] = 1.0
        connections[(i, j)] = v

    tables = []
    for patch, table in enumerate(operators):
        tables.append({name: op.matrix_on_states(states[patch], frame) for name, op in table.items()})

    qgn = QGN(graph=graph, psi=psi, connections=connections, operators=tables, kind=kind,
              metadata={'initial_bits': int(initial_bits), 'frame': frame})
    logger.debug(f"✅ basis-image {qgn}")
    return qgn


def build_quench_qgn(model: Model, graph: PatchGraph, initial_bits: int,
                     min_chi: int) -> Tuple[QGN, QuenchImages]:
    """QGN اولیه کوئنچ: فرمیون در پایه z، آیزینگ در پایه x"""
    tables = patch_operator_tables(model, graph)
    if isinstance(model, FermiModel):
        images = fermion_quench_images(graph, initial_bits, min_chi)
        qgn = qgn_from_basis_images(initial_bits, images.states, graph, tables, FERMION, "z")
    elif isinstance(model, IsingModel):
        images = ising_quench_images(graph, min_chi, initial_bits=initial_bits)
        qgn = qgn_from_basis_images(initial_bits, images.states, graph, tables, SPIN, "x")
    else:
        raise ContractViolation(f"unknown model {model!r}")
    qgn.metadata['chi_checkpoints'] = [min(c) for c in images.checkpoints]
    return qgn, images

# construction/analytic.py
"""
سازنده‌های تحلیلی QGN و حالت‌های مرجع

- حالت همدوس بوزونی (χ = 1)
- دترمینان اسلیتر (χ = 1 + n_f)
- حالت ضرب‌شده
- حالت مخلوط از راه خالص‌سازی
- حالت گربه‌ای روی یک مسیر و حالت رنگین‌کمان
"""

import logging
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from construction.images import ImageRequest, images_for_strings
from core.error_handler import ContractViolation
from core.fock import SPIN, FERMION, FullState, build_basis, pauli_op
from core.gauge_network import (QGN, OperatorString, op_key, qgn_from_truncation,
                                truncation_maps_from_images)
from core.lattice import (LatticeSpec, PatchGraph, build_single_site_patch_graph,
                          covering_path)

logger = logging.getLogger(__name__)

BOSON = "boson"

_LOCAL_PAULIS = {
    "sx": np.array([[0, 1], [1, 0]], dtype=complex),
    "sy": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sz": np.array([[1, 0], [0, -1]], dtype=complex),
}


def chain_graph(n_sites: int) -> PatchGraph:
    """گراف تک‌سایتی روی زنجیره باز"""
    return build_single_site_patch_graph(LatticeSpec((n_sites,), (False,)))


def _trivial_connections(graph: PatchGraph, chi: int) -> Dict:
    return {edge: np.eye(chi, dtype=complex) for edge in sorted(graph.edges)}


# ==================== همدوس ====================

def coherent_qgn(theta: Sequence[complex], graph: Optional[PatchGraph] = None) -> QGN:
    """
    حالت همدوس: ψ_I = 1 ، V_IJ = 1 ، b_i = Θ_i

    همه همبستگی‌های مرتب‌شده نرمال دقیق‌اند؛ ترتیب ضدنرمال |Θ|² می‌دهد نه 1 + |Θ|².
    """
    theta = np.asarray(theta, dtype=complex)
    graph = graph or chain_graph(theta.size)
    if graph.n_sites != theta.size:
        raise ContractViolation(f"{theta.size} amplitudes for {graph.n_sites} sites")

    operators = []
    for patch in graph.patches:
        table = {}
        for site in patch:
            table[op_key("b", site)] = np.array([[theta[site]]])
            table[op_key("bdag", site)] = np.array([[np.conj(theta[site])]])
            table[op_key("n", site)] = np.array([[abs(theta[site]) ** 2]], dtype=complex)
        operators.append(table)

    psi = [np.ones(1, dtype=complex) for _ in graph.patches]
    return QGN(graph=graph, psi=psi, connections=_trivial_connections(graph, 1),
               operators=operators, kind=BOSON)


# ==================== اسلیتر ====================

def check_orbitals(phi: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    if phi.ndim != 2:
        raise ContractViolation(f"orbital matrix must be n_f x n, got shape {phi.shape}")
    if phi.shape[0] and np.abs(phi @ phi.conj().T - np.eye(phi.shape[0])).max() > tol:
        raise ContractViolation("orbitals are not orthonormal")
    return phi


def slater_qgn(phi: np.ndarray, graph: Optional[PatchGraph] = None) -> QGN:
    """
    دترمینان اسلیتر با χ = 1 + n_f

    اندیس 0 حالت |φ> و اندیس a حالت |φ^-_a> (اوربیتال a-ام خالی) است:
    c_i[a, 0] = (-1)^(a-1) Φ_{a-1, i}
    """
    phi = check_orbitals(phi)
    n_f, n = phi.shape
    graph = graph or chain_graph(n)
    if graph.n_sites != n:
        raise ContractViolation(f"{n} orbital columns for {graph.n_sites} sites")

    chi = 1 + n_f
    signs = (-1.0) ** np.arange(n_f)
    operators = []
    for patch in graph.patches:
        table = {}
        for site in patch:
            c = np.zeros((chi, chi), dtype=complex)
            c[1:, 0] = signs * phi[:, site]
            table[op_key("c", site)] = c
            table[op_key("cdag", site)] = c.conj().T
            table[op_key("n", site)] = c.conj().T @ c
        operators.append(table)

    psi = []
    for _ in graph.patches:
        vec = np.zeros(chi, dtype=complex)
        vec[0] = 1.0
        psi.append(vec)
    logger.debug(f"✅ Slater QGN: n_f={n_f}, chi={chi}")
    return QGN(graph=graph, psi=psi, connections=_trivial_connections(graph, chi),
               operators=operators, kind=FERMION)


def slater_full_state(phi: np.ndarray) -> FullState:
    """
    Π_α d†_α |0> با d†_α = Σ_i Φ_{αi} c†_i روی پایه با تعداد ثابت n_f

    دامنه هر پیکربندی دترمینان زیرماتریس Φ روی سایت‌های پر است، پس <c†_i c_j> = (Φ†Φ)_ij.
    """
    phi = check_orbitals(phi)
    n_f, n = phi.shape
    basis = build_basis(FERMION, n, n_f)
    if n_f == 0:
        return FullState(np.ones(1, dtype=complex), basis)

    occupied = np.array([
        [site for site in range(n) if (int(s) >> site) & 1] for s in basis.states
    ])
    sub = phi[:, occupied]                       # (n_f, dim, n_f)
    amplitudes = np.linalg.det(np.transpose(sub, (1, 0, 2)))
    return FullState(amplitudes, basis)


def slater_correlation(phi: np.ndarray) -> np.ndarray:
    phi = check_orbitals(phi)
    return phi.conj().T @ phi


def random_orbitals(n_sites: int, n_f: int, rng: np.random.Generator) -> np.ndarray:
    raw = rng.normal(size=(n_sites, n_f)) + 1j * rng.normal(size=(n_sites, n_f))
    q, _ = np.linalg.qr(raw)
    return q.T.conj()


# ==================== حالت ضرب‌شده ====================

def product_state_qgn(local_states: Sequence[np.ndarray], graph: Optional[PatchGraph] = None,
                      local_ops: Optional[Mapping[str, np.ndarray]] = None) -> QGN:
    """
    حالت ضرب‌شده: χ_I = d ، ψ_I حالت محلی ، V_IJ = |ψ_I><ψ_J| ، عملگرهای محلی دقیق
    """
    states = [np.asarray(s, dtype=complex) / np.linalg.norm(s) for s in local_states]
    graph = graph or chain_graph(len(states))
    if graph.n_sites != len(states):
        raise ContractViolation(f"{len(states)} local states for {graph.n_sites} sites")
    if graph.kind != "site":
        raise ContractViolation("product-state QGNs use single-site patches")

    d = states[0].size
    local_ops = local_ops if local_ops is not None else (_LOCAL_PAULIS if d == 2 else {})
    operators = [{op_key(name, site): np.asarray(m, dtype=complex) for name, m in local_ops.items()}
                 for (site,) in graph.patches]
    connections = {(i, j): np.outer(states[i], states[j].conj()) for i, j in sorted(graph.edges)}
    return QGN(graph=graph, psi=states, connections=connections, operators=operators, kind=SPIN)


# ==================== حالت‌های مرجع ====================

def cat_state(n_sites: int) -> FullState:
    """(|↑...↑> + |↓...↓>)/√2"""
    basis = build_basis(SPIN, n_sites)
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[0] = amplitudes[-1] = 1 / np.sqrt(2)
    return FullState(amplitudes, basis)


def rainbow_state(n_sites: int) -> FullState:
    """تکتایی روی جفت‌های (i, n-1-i)"""
    if n_sites % 2:
        raise ContractViolation("the rainbow state needs an even number of sites")
    basis = build_basis(SPIN, n_sites)
    states = basis.states
    amplitudes = np.ones(basis.dim, dtype=complex) / np.sqrt(2) ** (n_sites // 2)
    for i in range(n_sites // 2):
        j = n_sites - 1 - i
        bit_i = (states >> np.uint64(i)) & np.uint64(1)
        bit_j = (states >> np.uint64(j)) & np.uint64(1)
        amplitudes = np.where(bit_i == bit_j, 0.0, amplitudes)
        amplitudes = np.where(bit_i == 1, -amplitudes, amplitudes)
    return FullState(amplitudes, basis)


def mixed_state_qgn(n_sites: int, kronecker: bool = False,
                    graph: Optional[PatchGraph] = None) -> QGN:
    """
    حالت مخلوط ½(|↑...↑><↑...↑| + |↓...↓><↓...↓|) از راه خالص‌سازی روی n+1 کیوبیت

    کیوبیت کمکی سایت n است. تصاویر: {Ψ, σ^z_I Ψ} یا برای نسخه ضرب کرونکر {Ψ, σ^μ_I Ψ}.
    """
    graph = graph or chain_graph(n_sites)
    if graph.n_sites != n_sites or graph.kind != "site":
        raise ContractViolation("mixed-state QGN needs a single-site graph over the system qubits")

    purified = cat_state(n_sites + 1)
    basis = purified.basis
    axes = ("x", "y", "z") if kronecker else ("z",)

    images, requested = [], []
    for (site,) in graph.patches:
        paulis = {axis: pauli_op(basis, site, axis) for axis in ("x", "y", "z")}
        images.append([purified] + [paulis[a].apply(purified.amplitudes) for a in axes])
        requested.append({op_key(f"s{a}", site): paulis[a] for a in ("x", "y", "z")})

    Q = truncation_maps_from_images(images)
    qgn = qgn_from_truncation(purified, Q, graph, requested, kind=SPIN)
    qgn.metadata['construction'] = "mixed-kronecker" if kronecker else "mixed"
    return qgn


def cat_path_qgn(lattice: LatticeSpec, path_style: str = "snake") -> QGN:
    """
    QGN حالت گربه‌ای که فقط رشته Πσ^x در طول مسیر داده‌شده را دقیق کد می‌کند
    """
    graph = build_single_site_patch_graph(lattice, path_style)
    psi = cat_state(lattice.n_sites)
    basis = psi.basis
    route = covering_path(lattice, path_style)

    sx = {site: pauli_op(basis, site, "x") for site in range(lattice.n_sites)}
    seen, entries = set(), []
    for site in route:
        if site not in seen:
            seen.add(site)
            entries.append((site, sx[site]))
    images = images_for_strings(psi, ImageRequest([entries]), graph)

    requested = [{op_key("sx", site): sx[site]} for (site,) in graph.patches]
    Q = truncation_maps_from_images(images)
    qgn = qgn_from_truncation(psi, Q, graph, requested, kind=SPIN)
    qgn.metadata['construction'] = f"cat-{path_style}"
    return qgn


def pauli_string_along(route: Sequence[int], name: str = "sx") -> OperatorString:
    """رشته σ روی همه سایت‌ها به ترتیب اولین عبور مسیر"""
    return OperatorString.along(route, {site: op_key(name, site) for site in set(route)})


def dense_pauli_expectation(state: FullState, factors: Mapping[int, str]) -> complex:
    """<Ψ|Π σ^{axis}_site|Ψ> روی فضای کامل (اوراکل آزمون‌ها)"""
    vector = state.amplitudes
    for site, axis in sorted(factors.items()):
        vector = pauli_op(state.basis, site, axis).apply(vector)
    return complex(np.vdot(state.amplitudes, vector))

# core/fock.py
"""
فضای هیلبرت کامل: پایه‌ها (اسپین و فرمیون با تعداد ثابت)، عملگرهای محلی با علامت Jordan-Wigner،
همیلتونی‌های وصله‌ای و همیلتونی کامل به صورت sparse

قرارداد: سایت i معادل بیت i (مقدار 1<<i) است.
فرمیون: |n_0 n_1 ...> = (c†_0)^{n_0} (c†_1)^{n_1} ... |0>  ⇒ علامت (-1)^{تعداد سایت‌های پر با اندیس کمتر}
اسپین: بیت 0 = ↑ ، σ^z = 1 - 2b ؛ در قاب x بیت b ویژه‌حالت σ^x است.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

import config
from core.error_handler import (ContractViolation, InvalidSectorError,
                                KindMismatchError)
from core.lattice import PatchGraph

logger = logging.getLogger(__name__)

SPIN = "spin"
FERMION = "fermion"
FRAMES = ("z", "x")

_ONE = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def popcount(x: np.ndarray) -> np.ndarray:
    """شمارش بیت‌های یک آرایه uint64 (روش SWAR)"""
    x = np.asarray(x, dtype=np.uint64)
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return ((x * _H01) >> np.uint64(56)).astype(np.int64)


# ==================== Basis ====================

@dataclass(frozen=True, eq=False)
class Basis:
    """
    پایه مرتب از رشته‌های بیتی

    states همیشه صعودی است؛ index() جست‌وجوی دودویی می‌کند و برای حالت‌های غایب -1 برمی‌گرداند.
    """
    kind: str
    n_sites: int
    sector: Optional[int]
    states: np.ndarray
    frame: str = "z"

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def index(self, states: Union[int, np.ndarray]) -> np.ndarray:
        query = np.atleast_1d(np.asarray(states, dtype=np.uint64))
        if self.dim == 0:
            return np.full(query.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.states, query)
        pos_clipped = np.minimum(pos, self.dim - 1)
        found = self.states[pos_clipped] == query
        return np.where(found, pos_clipped, -1).astype(np.int64)

    def __contains__(self, state: int) -> bool:
        return bool(self.index(state)[0] >= 0)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        sector = f", N={self.sector}" if self.sector is not None else ""
        return f"Basis({self.kind}, n={self.n_sites}{sector}, dim={self.dim}, frame={self.frame})"


def _sector_states(n_sites: int, sector: int) -> np.ndarray:
    if n_sites <= 24:
        everything = np.arange(1 << n_sites, dtype=np.uint64)
        return everything[popcount(everything) == sector]
    count = comb(n_sites, sector)
    generator = (sum(1 << s for s in combo) for combo in combinations(range(n_sites), sector))
    return np.sort(np.fromiter(generator, dtype=np.uint64, count=count))


def build_basis(kind: str, n_sites: int, sector: Optional[int] = None, frame: str = "z") -> Basis:
    """
    ساخت پایه قطعی و مرتب

    Args:
        kind: "spin" یا "fermion"
        n_sites: تعداد سایت‌ها (۱ تا MAX_SITES)
        sector: تعداد ذره ثابت (فقط فرمیون)
        frame: "z" یا "x" (فقط اسپین)
    """
    if kind not in (SPIN, FERMION):
        raise KindMismatchError(f"unknown basis kind '{kind}'")
    if not 1 <= n_sites <= config.MAX_SITES:
        raise ContractViolation(f"n_sites must be in [1, {config.MAX_SITES}], got {n_sites}")
    if frame not in FRAMES:
        raise ContractViolation(f"unknown frame '{frame}'")
    if kind == FERMION and frame != "z":
        raise KindMismatchError("the x frame is defined for spin bases only")

    if sector is not None:
        if kind == SPIN:
            raise InvalidSectorError("particle-number sectors apply to fermion bases only")
        if not 0 <= sector <= n_sites:
            raise InvalidSectorError(f"sector must be in [0, {n_sites}], got {sector}")
        states = _sector_states(n_sites, sector)
    else:
        states = np.arange(1 << n_sites, dtype=np.uint64)

    basis = Basis(kind=kind, n_sites=n_sites, sector=sector, states=states, frame=frame)
    logger.debug(f"🔢 {basis}")
    return basis


def _empty_basis(kind: str, n_sites: int, sector: int) -> Basis:
    return Basis(kind=kind, n_sites=n_sites, sector=sector, states=np.empty(0, dtype=np.uint64))


# ==================== LocalOperator ====================

Factor = Tuple[str, int]
Term = Tuple[complex, Tuple[Factor, ...]]

_FERMION_ACTIONS = ("c", "cdag", "n")
_SPIN_ACTIONS = ("x", "y", "z")
_ADJOINT = {"c": "cdag", "cdag": "c", "n": "n", "x": "x", "y": "y", "z": "z"}


def _act(action: str, site: int, states: np.ndarray, frame: str):
    """
    اثر یک عملگر عنصری روی آرایه حالت‌ها

    Returns:
        (حالت‌های جدید، ضریب، ماسک معتبر)
    """
    bit = _ONE << np.uint64(site)
    occupied = (states & bit) != 0

    if action in ("c", "cdag"):
        parity = popcount(states & (bit - _ONE)) & 1
        sign = np.where(parity == 1, -1.0, 1.0).astype(complex)
        valid = occupied if action == "c" else ~occupied
        return states ^ bit, sign, valid
    if action == "n":
        return states, np.ones(states.shape, dtype=complex), occupied

    all_valid = np.ones(states.shape, dtype=bool)
    if frame == "x":
        # پایه هادامارد: σx قطری، σz وارونه‌ساز، σy ← -σy
        if action == "x":
            return states, np.where(occupied, -1.0, 1.0).astype(complex), all_valid
        if action == "z":
            return states ^ bit, np.ones(states.shape, dtype=complex), all_valid
        return states ^ bit, np.where(occupied, 1j, -1j), all_valid

    if action == "x":
        return states ^ bit, np.ones(states.shape, dtype=complex), all_valid
    if action == "y":
        return states ^ bit, np.where(occupied, -1j, 1j), all_valid
    return states, np.where(occupied, -1.0, 1.0).astype(complex), all_valid


class LocalOperator:
    """
    عملگر به صورت مجموع ضرب‌های عنصری روی رشته‌های بیتی

    هر جمله (ضریب، (عامل۱، عامل۲، ...)) یعنی ضریب·عامل۱·عامل۲·...؛ عامل آخر اول روی ket اثر می‌کند.
    """

    def __init__(self, terms: Iterable[Term], kind: str):
        self.terms: List[Term] = [(complex(c), tuple(f)) for c, f in terms]
        self.kind = kind
        allowed = _FERMION_ACTIONS if kind == FERMION else _SPIN_ACTIONS
        for _, factors in self.terms:
            for action, _site in factors:
                if action not in allowed:
                    raise KindMismatchError(f"action '{action}' is not a {kind} operator")

    # ---------- سازنده‌ها ----------
    @classmethod
    def identity(cls, kind: str) -> "LocalOperator":
        return cls([(1.0, ())], kind)

    @classmethod
    def create(cls, site: int) -> "LocalOperator":
        return cls([(1.0, (("cdag", site),))], FERMION)

    @classmethod
    def annihilate(cls, site: int) -> "LocalOperator":
        return cls([(1.0, (("c", site),))], FERMION)

    @classmethod
    def number(cls, site: int) -> "LocalOperator":
        return cls([(1.0, (("n", site),))], FERMION)

    @classmethod
    def pauli(cls, site: int, axis: str) -> "LocalOperator":
        if axis not in _SPIN_ACTIONS:
            raise ContractViolation(f"unknown Pauli axis '{axis}'")
        return cls([(1.0, ((axis, site),))], SPIN)

    # ---------- جبر ----------
    def _check_kind(self, other: "LocalOperator"):
        if other.kind != self.kind:
            raise KindMismatchError(f"cannot combine {self.kind} and {other.kind} operators")

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        self._check_kind(other)
        return LocalOperator(self.terms + other.terms, self.kind)

    def __neg__(self) -> "LocalOperator":
        return LocalOperator([(-c, f) for c, f in self.terms], self.kind)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        return self + (-other)

    def __mul__(self, other) -> "LocalOperator":
        if isinstance(other, LocalOperator):
            self._check_kind(other)
            terms = [(a * b, fa + fb) for a, fa in self.terms for b, fb in other.terms]
            return LocalOperator(terms, self.kind)
        return LocalOperator([(c * other, f) for c, f in self.terms], self.kind)

    def __rmul__(self, scalar) -> "LocalOperator":
        return LocalOperator([(c * scalar, f) for c, f in self.terms], self.kind)

    def dagger(self) -> "LocalOperator":
        terms = []
        for c, factors in self.terms:
            terms.append((np.conj(c), tuple((_ADJOINT[a], s) for a, s in reversed(factors))))
        return LocalOperator(terms, self.kind)

    @property
    def sites(self) -> List[int]:
        return sorted({s for _, f in self.terms for _, s in f})

    def __repr__(self) -> str:
        return f"LocalOperator({self.kind}, {len(self.terms)} terms, sites={self.sites})"

    # ---------- اعمال ----------
    def apply(self, states: np.ndarray, frame: str = "z"):
        """
        اعمال روی آرایه حالت‌ها

        Yields:
            (حالت‌های ورودی معتبر به صورت اندیس، حالت‌های خروجی، دامنه‌ها) برای هر جمله
        """
        states = np.asarray(states, dtype=np.uint64)
        columns = np.arange(states.size)
        for coef, factors in self.terms:
            current = states.copy()
            amps = np.full(states.shape, coef, dtype=complex)
            valid = np.ones(states.shape, dtype=bool)
            for action, site in reversed(factors):
                current, factor, ok = _act(action, site, current, frame)
                amps = amps * factor
                valid &= ok
            yield columns[valid], current[valid], amps[valid]

    def to_sparse(self, basis_in: Basis, basis_out: Optional[Basis] = None,
                  hermitian: bool = False, name: str = "") -> "SparseOperator":
        """ماتریس sparse از basis_in به basis_out (پیش‌فرض همان basis_in)"""
        basis_out = basis_out if basis_out is not None else basis_in
        if basis_in.kind != self.kind:
            raise KindMismatchError(f"{self.kind} operator on a {basis_in.kind} basis")

        rows, cols, data = [], [], []
        for col, out, amps in self.apply(basis_in.states, basis_in.frame):
            idx = basis_out.index(out)
            keep = idx >= 0
            rows.append(idx[keep])
            cols.append(col[keep])
            data.append(amps[keep])

        if rows:
            rows_arr = np.concatenate(rows)
            cols_arr = np.concatenate(cols)
            data_arr = np.concatenate(data)
        else:
            rows_arr = cols_arr = np.empty(0, dtype=np.int64)
            data_arr = np.empty(0, dtype=complex)

        matrix = sp.csr_matrix((data_arr, (rows_arr, cols_arr)), shape=(basis_out.dim, basis_in.dim))
        matrix.eliminate_zeros()
        return SparseOperator(matrix=matrix, basis_in=basis_in, basis_out=basis_out,
                              hermitian=hermitian, name=name)

    def matrix_on_states(self, states: np.ndarray, frame: str = "z") -> np.ndarray:
        """
        ماتریس متراکم <s_a|A|s_b> روی مجموعه‌ای از حالت‌های پایه (بدون ساخت پایه کامل)
        """
        states = np.asarray(states, dtype=np.uint64)
        order = np.argsort(states)
        sorted_states = states[order]
        k = states.size
        result = np.zeros((k, k), dtype=complex)
        for col, out, amps in self.apply(states, frame):
            pos = np.searchsorted(sorted_states, out)
            pos = np.minimum(pos, k - 1)
            hit = sorted_states[pos] == out
            np.add.at(result, (order[pos[hit]], col[hit]), amps[hit])
        return result


# ==================== SparseOperator / FullState ====================

@dataclass(eq=False)
class SparseOperator:
    """ماتریس sparse همراه با پایه‌های ورودی و خروجی"""
    matrix: sp.csr_matrix
    basis_in: Optional[Basis] = None
    basis_out: Optional[Basis] = None
    hermitian: bool = False
    name: str = ""

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        if self.basis_in is not None and self.matrix.shape[1] != self.basis_in.dim:
            raise ContractViolation("operator columns do not match its input basis")
        if self.basis_out is not None and self.matrix.shape[0] != self.basis_out.dim:
            raise ContractViolation("operator rows do not match its output basis")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix, other.basis_in, self.basis_out)
        return self.matrix @ other

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.matrix + other.matrix, self.basis_in, self.basis_out,
                              hermitian=self.hermitian and other.hermitian)

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr(), self.basis_out, self.basis_in,
                              hermitian=self.hermitian, name=f"{self.name}†" if self.name else "")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def spot_check_hermitian(self, tol: float = 1e-10, samples: int = 3, seed: int = 0) -> bool:
        """بررسی A = A† با چند بردار تصادفی: <u|Av> = <Au|v>"""
        n, m = self.shape
        if n != m:
            return False
        if n == 0:
            return True
        rng = np.random.default_rng(seed)
        scale = max(abs(self.matrix).max(), 1.0)
        for _ in range(samples):
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            lhs = np.vdot(u, self.matrix @ v)
            rhs = np.vdot(self.matrix @ u, v)
            if abs(lhs - rhs) > tol * scale * np.linalg.norm(u) * np.linalg.norm(v):
                return False
        return True

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.shape[0] != self.shape[1]:
            return False
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or abs(diff).max() <= tol


@dataclass(eq=False)
class FullState:
    """بردار دامنه روی یک پایه کامل"""
    amplitudes: np.ndarray
    basis: Basis
    normalized: bool = True

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ContractViolation(f"state length {self.amplitudes.shape} does not match basis dim {self.basis.dim}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ContractViolation("state has non-finite amplitudes")
        if self.normalized and abs(self.norm() - 1.0) > 1e-12:
            raise ContractViolation(f"state flagged normalized has norm {self.norm():.15f}")

    @classmethod
    def from_bits(cls, basis: Basis, bits: int) -> "FullState":
        idx = basis.index(bits)[0]
        if idx < 0:
            raise ContractViolation(f"state {bits:#b} is not in {basis}")
        amplitudes = np.zeros(basis.dim, dtype=complex)
        amplitudes[idx] = 1.0
        return cls(amplitudes, basis)

    @classmethod
    def from_vector(cls, basis: Basis, vector: np.ndarray, normalize: bool = True) -> "FullState":
        vector = np.asarray(vector, dtype=complex)
        if normalize:
            vector = vector / np.linalg.norm(vector)
        return cls(vector, basis, normalized=normalize)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def expectation(self, op: Union[SparseOperator, sp.spmatrix, np.ndarray]) -> complex:
        matrix = op.matrix if isinstance(op, SparseOperator) else op
        return complex(np.vdot(self.amplitudes, matrix @ self.amplitudes))

    def occupations(self) -> np.ndarray:
        """<n_i> (یا احتمال بیت ۱) برای هر سایت"""
        probs = np.abs(self.amplitudes) ** 2
        out = np.empty(self.basis.n_sites)
        for site in range(self.basis.n_sites):
            mask = (self.basis.states >> np.uint64(site)) & _ONE
            out[site] = float(probs[mask == 1].sum())
        return out

    def copy(self) -> "FullState":
        return FullState(self.amplitudes.copy(), self.basis, self.normalized)


# ==================== عملگرهای پایه ====================

def fermion_op(basis: Basis, site: int, mode: str) -> SparseOperator:
    """
    c یا c† با علامت Jordan-Wigner

    روی پایه با تعداد ثابت N، خروجی روی بخش N±1 است (ماتریس مستطیلی).
    """
    if basis.kind != FERMION:
        raise KindMismatchError("fermion_op needs a fermion basis")
    if not 0 <= site < basis.n_sites:
        raise ContractViolation(f"site {site} outside 0..{basis.n_sites - 1}")
    if mode not in ("create", "annihilate"):
        raise ContractViolation(f"unknown mode '{mode}'")

    op = LocalOperator.create(site) if mode == "create" else LocalOperator.annihilate(site)
    basis_out = basis
    if basis.sector is not None:
        target = basis.sector + (1 if mode == "create" else -1)
        if 0 <= target <= basis.n_sites:
            basis_out = build_basis(FERMION, basis.n_sites, target)
        else:
            basis_out = _empty_basis(FERMION, basis.n_sites, target)
    return op.to_sparse(basis, basis_out, name=f"{'cdag' if mode == 'create' else 'c'}_{site}")


def pauli_op(basis: Basis, site: int, axis: str) -> SparseOperator:
    if basis.kind != SPIN:
        raise KindMismatchError("pauli_op needs a spin basis")
    if not 0 <= site < basis.n_sites:
        raise ContractViolation(f"site {site} outside 0..{basis.n_sites - 1}")
    return LocalOperator.pauli(site, axis).to_sparse(basis, hermitian=True, name=f"s{axis}_{site}")


def number_op(basis: Basis, site: int) -> SparseOperator:
    if basis.kind != FERMION:
        raise KindMismatchError("number_op needs a fermion basis")
    return LocalOperator.number(site).to_sparse(basis, hermitian=True, name=f"n_{site}")


# ==================== مدل‌ها ====================

@dataclass(frozen=True)
class FermiModel:
    """-c†_i c_j - c†_j c_i + V n_i n_j روی هر پیوند"""
    V: float = 1.0
    hopping: float = 1.0
    name: str = field(default="fermi", init=False)
    basis_kind: str = field(default=FERMION, init=False)


@dataclass(frozen=True)
class IsingModel:
    """-σz_i σz_j - h (σx_i / z_i + σx_j / z_j) روی هر پیوند"""
    h: float = 3.0
    name: str = field(default="ising", init=False)
    basis_kind: str = field(default=SPIN, init=False)


Model = Union[FermiModel, IsingModel]


def local_terms(model: Model, patch_graph: PatchGraph) -> List[LocalOperator]:
    """
    جمله همیلتونی هر وصله پیوندی

    سهم میدان عرضی هر سایت بر تعداد پیوندهایش تقسیم می‌شود تا Σ_I H_I همان همیلتونی کامل باشد
    (روی شبکه تناوبی برابر 1/(2·dim)).
    """
    if patch_graph.kind != "pair":
        raise ContractViolation("local Hamiltonians need a nearest-neighbour pair patch graph")

    terms = []
    if isinstance(model, FermiModel):
        for i, j in patch_graph.patches:
            hop = LocalOperator.create(i) * LocalOperator.annihilate(j)
            term = -model.hopping * (hop + hop.dagger())
            if model.V:
                term = term + model.V * (LocalOperator.number(i) * LocalOperator.number(j))
            terms.append(term)
    elif isinstance(model, IsingModel):
        z = patch_graph.lattice.coordination()
        for i, j in patch_graph.patches:
            term = -(LocalOperator.pauli(i, "z") * LocalOperator.pauli(j, "z"))
            if model.h:
                term = term - (model.h / z[i]) * LocalOperator.pauli(i, "x")
                term = term - (model.h / z[j]) * LocalOperator.pauli(j, "x")
            terms.append(term)
    else:
        raise KindMismatchError(f"unknown model {model!r}")
    return terms


def build_local_hamiltonians(model: Model, patch_graph: PatchGraph,
                             basis: Basis) -> List[Tuple[int, SparseOperator]]:
    """(اندیس وصله، Ĥ_I) برای همه وصله‌ها"""
    if basis.kind != model.basis_kind:
        raise KindMismatchError(f"{model.name} model needs a {model.basis_kind} basis, got {basis.kind}")
    if basis.n_sites != patch_graph.n_sites:
        raise ContractViolation("basis and lattice disagree on the number of sites")
    return [
        (idx, term.to_sparse(basis, hermitian=True, name=f"H_{idx}"))
        for idx, term in enumerate(local_terms(model, patch_graph))
    ]


def full_hamiltonian(model: Model, patch_graph: PatchGraph, basis: Basis) -> SparseOperator:
    pieces = build_local_hamiltonians(model, patch_graph, basis)
    matrix = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for _, op in pieces:
        matrix = matrix + op.matrix
    return SparseOperator(matrix, basis, basis, hermitian=True, name="H")


def site_observable(kind: str, name: str, site: int) -> LocalOperator:
    """عملگر مشاهده‌پذیر محلی از روی نام: n, sx, sy, sz"""
    if kind == FERMION and name == "n":
        return LocalOperator.number(site)
    if kind == SPIN and name in ("sx", "sy", "sz"):
        return LocalOperator.pauli(site, name[1])
    raise KindMismatchError(f"observable '{name}' is not defined for {kind} systems")


def observable_names(kind: str) -> List[str]:
    return ["n"] if kind == FERMION else ["sx", "sy", "sz"]

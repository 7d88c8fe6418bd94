# core/lattice.py
"""
شبکه‌های زنجیره، مربعی و مکعبی؛ پوشش وصله‌ای (پیوند همسایه یا تک‌سایت) و مسیر بین وصله‌ها
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from core.error_handler import InvalidLatticeError, MissingConnectionError, UnsupportedPathError

logger = logging.getLogger(__name__)

Patch = Tuple[int, ...]
Edge = Tuple[int, int]


@dataclass(frozen=True)
class LatticeSpec:
    """
    شبکه ابرمکعبی با اندیس row-major (مختصه آخر سریع‌ترین)

    Args:
        dims: طول هر بعد (۱ تا ۳ بعد)
        periodic: شرط مرزی تناوبی برای هر بعد
    """
    dims: Tuple[int, ...]
    periodic: Tuple[bool, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        periodic = self.periodic
        if isinstance(periodic, bool):
            periodic = (periodic,) * len(dims)
        periodic = tuple(bool(p) for p in periodic)
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'periodic', periodic)

        if not 1 <= len(dims) <= 3:
            raise InvalidLatticeError(f"lattice must have 1-3 dimensions, got {len(dims)}")
        if len(periodic) != len(dims):
            raise InvalidLatticeError("periodic flags must match the number of dimensions")
        if any(d < 1 for d in dims):
            raise InvalidLatticeError(f"extents must be positive, got {dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    def coords(self, index: int) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, self.dims))

    def index(self, coords: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(coords), self.dims))

    def bonds(self) -> List[Edge]:
        """پیوندهای همسایه نزدیک، مرتب بر اساس (min, max)"""
        bonds = set()
        for site in range(self.n_sites):
            c = list(self.coords(site))
            for axis, extent in enumerate(self.dims):
                if extent < 2:
                    continue
                nxt = c[axis] + 1
                if nxt == extent:
                    if not self.periodic[axis]:
                        continue
                    nxt = 0
                other = c.copy()
                other[axis] = nxt
                j = self.index(other)
                if j != site:
                    bonds.add((min(site, j), max(site, j)))
        return sorted(bonds)

    def neighbors(self, site: int) -> List[int]:
        out = []
        for i, j in self.bonds():
            if i == site:
                out.append(j)
            elif j == site:
                out.append(i)
        return sorted(out)

    def coordination(self) -> List[int]:
        """تعداد پیوندهای هر سایت (برای تقسیم میدان عرضی بین وصله‌ها)"""
        z = [0] * self.n_sites
        for i, j in self.bonds():
            z[i] += 1
            z[j] += 1
        return z


@dataclass(frozen=True)
class PatchGraph:
    """
    پوشش شبکه با وصله‌ها

    edges: جفت‌های (I, J) با I < J؛ برای وصله‌های پیوندی یعنی اشتراک سایت،
    برای وصله‌های تک‌سایتی یعنی همسایگی در شبکه.
    """
    lattice: LatticeSpec
    patches: Tuple[Patch, ...]
    edges: FrozenSet[Edge]
    kind: str  # "pair" | "site"
    covering_path: Optional[Tuple[int, ...]] = None
    path_style: Optional[str] = None
    _adjacency: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False, compare=False)
    _path_cache: Dict[Edge, Tuple[int, ...]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        adjacency = [[] for _ in self.patches]
        for i, j in self.edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        object.__setattr__(self, '_adjacency', tuple(tuple(sorted(a)) for a in adjacency))

    @property
    def n_patches(self) -> int:
        return len(self.patches)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def neighbors(self, patch: int) -> Tuple[int, ...]:
        return self._adjacency[patch]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def overlapping(self, patch: int) -> List[int]:
        """وصله‌هایی (غیر از خودش) که حداقل یک سایت مشترک دارند"""
        sites = set(self.patches[patch])
        return [j for j, p in enumerate(self.patches) if j != patch and sites.intersection(p)]

    def patches_containing(self, site: int) -> List[int]:
        return [i for i, p in enumerate(self.patches) if site in p]

    def path(self, start: int, end: int) -> Tuple[int, ...]:
        """
        مسیر BFS بین دو وصله؛ در تساوی، همسایه با اندیس کمتر اول

        Returns:
            رشته وصله‌ها از start تا end (شامل هر دو)
        """
        if start == end:
            return (start,)
        key = (start, end)
        cached = self._path_cache.get(key)
        if cached is not None:
            return cached

        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == end:
                break
            for nxt in self._adjacency[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)

        if end not in parent:
            raise MissingConnectionError(f"no path between patches {start} and {end}")

        route = [end]
        while route[-1] != start:
            route.append(parent[route[-1]])
        result = tuple(reversed(route))
        self._path_cache[key] = result
        return result

    def site_patch(self, site: int) -> int:
        """اندیس وصله تک‌سایتی یک سایت"""
        if self.kind != "site":
            raise UnsupportedPathError("site_patch is defined for single-site patch graphs only")
        return site

    def to_dict(self) -> dict:
        return {
            'dims': list(self.lattice.dims),
            'periodic': list(self.lattice.periodic),
            'kind': self.kind,
            'path_style': self.path_style,
            'patches': [list(p) for p in self.patches],
            'edges': sorted([list(e) for e in self.edges]),
            'covering_path': list(self.covering_path) if self.covering_path is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatchGraph":
        lattice = LatticeSpec(tuple(data['dims']), tuple(data['periodic']))
        covering = data.get('covering_path')
        return cls(
            lattice=lattice,
            patches=tuple(tuple(p) for p in data['patches']),
            edges=frozenset(tuple(e) for e in data['edges']),
            kind=data['kind'],
            covering_path=tuple(covering) if covering is not None else None,
            path_style=data.get('path_style'),
        )


# ==================== سازنده‌ها ====================

def build_nn_patch_graph(lattice: LatticeSpec) -> PatchGraph:
    """یک وصله برای هر پیوند همسایه نزدیک"""

    for extent, periodic in zip(lattice.dims, lattice.periodic):
        if extent < 2:
            raise InvalidLatticeError(f"bond patches need extents >= 2, got {lattice.dims}")
        if periodic and extent == 2:
            raise InvalidLatticeError("periodic extent 2 would create duplicate bonds")

    patches = tuple(lattice.bonds())
    site_to_patches: Dict[int, List[int]] = {}
    for idx, patch in enumerate(patches):
        for site in patch:
            site_to_patches.setdefault(site, []).append(idx)

    edges = set()
    for members in site_to_patches.values():
        for a, b in itertools.combinations(sorted(members), 2):
            edges.add((a, b))

    graph = PatchGraph(lattice=lattice, patches=patches, edges=frozenset(edges), kind="pair")
    logger.debug(f"🧱 nn patch graph: {len(patches)} patches, {len(edges)} overlaps")
    return graph


def _boustrophedon(dims: Sequence[int], axis_order: Sequence[int]) -> List[Tuple[int, ...]]:
    """
    ترتیب مار-مانند: محور اول axis_order کندترین، هر زیربلوک فرد معکوس می‌شود
    """
    if not axis_order:
        return [()]
    head, rest = axis_order[0], axis_order[1:]
    inner = _boustrophedon(dims, rest)
    order = []
    for value in range(dims[head]):
        block = inner if value % 2 == 0 else list(reversed(inner))
        for partial in block:
            order.append(((head, value),) + partial)
    return order


def _ordered_coords(dims: Sequence[int], axis_order: Sequence[int]) -> List[Tuple[int, ...]]:
    coords = []
    for labelled in _boustrophedon(dims, axis_order):
        c = [0] * len(dims)
        for axis, value in labelled:
            c[axis] = value
        coords.append(tuple(c))
    return coords


def _site_bfs(lattice: LatticeSpec, start: int, end: int) -> List[int]:
    adjacency = {s: lattice.neighbors(s) for s in range(lattice.n_sites)}
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == end:
            break
        for nxt in adjacency[node]:
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)
    route = [end]
    while route[-1] != start:
        route.append(parent[route[-1]])
    return list(reversed(route))


def covering_path(lattice: LatticeSpec, path_style: str) -> Tuple[int, ...]:
    """
    مسیر پوشاننده همه سایت‌ها

    snake: سطرها به صورت رفت‌وبرگشتی؛ comb: ستون‌ها به صورت رفت‌وبرگشتی؛
    diagonal: قطرهای فرعی به صورت رفت‌وبرگشتی، گام‌های غیرهمسایه با کوتاه‌ترین مسیر پر می‌شوند.
    """
    ndim = lattice.ndim
    if path_style == "snake":
        coords = _ordered_coords(lattice.dims, list(range(ndim)))
    elif path_style == "comb":
        coords = _ordered_coords(lattice.dims, list(reversed(range(ndim))))
    elif path_style == "diagonal":
        if ndim < 2:
            raise UnsupportedPathError("diagonal path is undefined in one dimension")
        shells: Dict[int, List[Tuple[int, ...]]] = {}
        for c in itertools.product(*[range(d) for d in lattice.dims]):
            shells.setdefault(sum(c), []).append(c)
        coords = []
        for k, level in enumerate(sorted(shells)):
            members = sorted(shells[level])
            coords.extend(members if k % 2 == 0 else list(reversed(members)))
    else:
        raise UnsupportedPathError(f"unknown path style '{path_style}'")

    order = [lattice.index(c) for c in coords]
    neighbor_sets = {s: set(lattice.neighbors(s)) for s in range(lattice.n_sites)}

    path = [order[0]]
    for site in order[1:]:
        if site in neighbor_sets[path[-1]]:
            path.append(site)
        else:
            path.extend(_site_bfs(lattice, path[-1], site)[1:])
    return tuple(path)


def build_single_site_patch_graph(lattice: LatticeSpec, path_style: str = "snake") -> PatchGraph:
    """یک وصله برای هر سایت؛ مسیر پوشاننده برای استخراج ماتریس چگالی ذخیره می‌شود"""

    path = covering_path(lattice, path_style)
    patches = tuple((s,) for s in range(lattice.n_sites))
    edges = frozenset(lattice.bonds())
    graph = PatchGraph(
        lattice=lattice,
        patches=patches,
        edges=edges,
        kind="site",
        covering_path=path,
        path_style=path_style,
    )
    logger.debug(f"🧱 single-site patch graph ({path_style}): {len(patches)} patches")
    return graph


def checkerboard_occupation(lattice: LatticeSpec) -> int:
    """رشته بیتی حالت شطرنجی: سایت پر است اگر مجموع مختصات زوج باشد"""
    bits = 0
    for site in range(lattice.n_sites):
        if sum(lattice.coords(site)) % 2 == 0:
            bits |= 1 << site
    return bits

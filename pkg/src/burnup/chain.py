from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple, Union
import heapq
import logging

from ..nuclear_data import (
    AVOGADRO, BARN_CM2, DecayMode, NuclideId, NuclideRegistry, as_identity,
)


class ChainError(ValueError):
    """Chain cannot be built: cycle or unresolvable product"""


@dataclass(frozen=True)
class CaptureEdge:
    source: NuclideId
    dest: NuclideId
    sigma_barns: float

    def rate(self, flux: float) -> float:
        return self.sigma_barns * flux * BARN_CM2


@dataclass(frozen=True)
class DecayEdge:
    source: NuclideId
    dest: NuclideId
    decay_constant: float
    branching: float
    mode: DecayMode

    @property
    def rate(self) -> float:
        return self.decay_constant * self.branching


@dataclass(frozen=True)
class ChainSpec:
    """Reaction/decay DAG with nuclides in topological order"""
    nuclides: Tuple[NuclideId, ...]
    captures: Tuple[CaptureEdge, ...] = ()
    decays: Tuple[DecayEdge, ...] = ()
    molar_masses: Tuple[float, ...] = ()
    _index: Dict[NuclideId, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.nuclides)) != len(self.nuclides):
            raise ChainError("Duplicate nuclide in chain")
        object.__setattr__(self, '_index', {nid: i for i, nid in enumerate(self.nuclides)})
        if not self.molar_masses:
            object.__setattr__(self, 'molar_masses', tuple(float(nid.mass_number) for nid in self.nuclides))
        if len(self.molar_masses) != len(self.nuclides):
            raise ChainError("molar_masses must match the nuclide list")
        for edge in self.edges:
            if edge.source not in self._index or edge.dest not in self._index:
                raise ChainError(f"Edge {edge.source} -> {edge.dest} leaves the chain")
            if self._index[edge.source] >= self._index[edge.dest]:
                raise ChainError(f"Edge {edge.source} -> {edge.dest} violates topological order")

    @property
    def edges(self) -> Tuple[Union[CaptureEdge, DecayEdge], ...]:
        return self.captures + self.decays

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(nid.name for nid in self.nuclides)

    def index(self, identity: Union[str, NuclideId]) -> int:
        key = as_identity(identity)
        try:
            return self._index[key]
        except KeyError:
            raise ChainError(f"{key} is not in the chain") from None

    def __contains__(self, identity: object) -> bool:
        try:
            return as_identity(identity) in self._index
        except ValueError:
            return False

    def __len__(self) -> int:
        return len(self.nuclides)

    def molar_mass(self, identity: Union[str, NuclideId]) -> float:
        return self.molar_masses[self.index(identity)]

    def atoms_to_grams(self, identity: Union[str, NuclideId], atoms: float) -> float:
        return atoms * self.molar_mass(identity) / AVOGADRO

    def capture_descendants(self, identity: Union[str, NuclideId]) -> Tuple[NuclideId, ...]:
        """Nuclides reached from `identity` through a path that starts with a capture"""
        start = as_identity(identity)
        frontier = [edge.dest for edge in self.captures if edge.source == start]
        seen = set()
        while frontier:
            current = frontier.pop()
            if current in seen:
                continue
            seen.add(current)
            frontier.extend(edge.dest for edge in self.edges if edge.source == current)
        seen.discard(start)
        return tuple(nid for nid in self.nuclides if nid in seen)


def _topological_order(nodes: Iterable[NuclideId], edges: Iterable[Tuple[NuclideId, NuclideId]],
                       depth: Dict[NuclideId, int]) -> List[NuclideId]:
    nodes = list(nodes)
    indegree = {node: 0 for node in nodes}
    children: Dict[NuclideId, List[NuclideId]] = {node: [] for node in nodes}
    for source, dest in edges:
        children[source].append(dest)
        indegree[dest] += 1
    ready = [(depth[node], node) for node in nodes if indegree[node] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, node = heapq.heappop(ready)
        order.append(node)
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, (depth[child], child))
    if len(order) != len(nodes):
        stuck = sorted(node.name for node in nodes if indegree[node] > 0)
        raise ChainError(f"cycle detected among {', '.join(stuck)} (check isomer records)")
    return order


def build_chain(registry: NuclideRegistry,
                seeds: Iterable[Union[str, NuclideId]],
                depth: int = 2) -> ChainSpec:
    """Transitive closure of capture and decay edges from the seeds.

    Every capture or decay edge adds one level except isomeric transitions,
    which keep the nucleus. Nuclides reached at the depth limit, and terminal
    or stable nuclides without captures, are sinks.
    """
    if depth < 0:
        raise ChainError(f"depth must be >= 0, got {depth}")
    seed_ids = [as_identity(seed) for seed in seeds]
    for seed in seed_ids:
        registry.lookup(seed)

    levels: Dict[NuclideId, int] = {}
    queue: List[Tuple[int, NuclideId]] = []

    def visit(nid: NuclideId, level: int):
        if not registry.resolvable(nid):
            raise ChainError(f"unresolvable product {nid}")
        if nid not in levels or level < levels[nid]:
            levels[nid] = level
            heapq.heappush(queue, (level, nid))

    for seed in seed_ids:
        visit(seed, 0)

    captures: Dict[Tuple[NuclideId, NuclideId], CaptureEdge] = {}
    decays: Dict[Tuple[NuclideId, NuclideId], DecayEdge] = {}
    while queue:
        level, nid = heapq.heappop(queue)
        if level != levels[nid] or level >= depth or nid not in registry:
            continue
        for reaction in registry.captures_from(nid):
            channels = [(reaction.product, reaction.sigma_barns * (1.0 - reaction.ground_fraction))]
            if reaction.ground_fraction > 0:
                channels.append((reaction.product.ground, reaction.sigma_barns * reaction.ground_fraction))
            for product, sigma in channels:
                if sigma <= 0:
                    continue
                visit(product, level + 1)
                key = (nid, product)
                previous = captures.get(key)
                total = sigma + (previous.sigma_barns if previous else 0.0)
                captures[key] = CaptureEdge(nid, product, total)
        nuclide = registry.lookup(nid)
        for branch in nuclide.decays:
            step = 0 if branch.mode is DecayMode.ISOMERIC_TRANSITION else 1
            visit(branch.daughter, level + step)
            decays[(nid, branch.daughter)] = DecayEdge(
                nid, branch.daughter, nuclide.decay_constant, branch.fraction, branch.mode)

    # edges discovered before a node's level improved may come from a node now past the limit
    active = {nid for nid, level in levels.items() if level < depth}
    capture_edges = [edge for key, edge in captures.items() if key[0] in active]
    decay_edges = [edge for key, edge in decays.items() if key[0] in active]

    order = _topological_order(
        levels, [(e.source, e.dest) for e in capture_edges + decay_edges], levels)
    rank = {nid: i for i, nid in enumerate(order)}
    masses = tuple(
        registry.lookup(nid).molar_mass if nid in registry else float(nid.mass_number)
        for nid in order
    )
    chain = ChainSpec(
        nuclides=tuple(order),
        captures=tuple(sorted(capture_edges, key=lambda e: (rank[e.source], rank[e.dest]))),
        decays=tuple(sorted(decay_edges, key=lambda e: (rank[e.source], rank[e.dest]))),
        molar_masses=masses,
    )
    logging.info(f"Built chain from {', '.join(s.name for s in seed_ids)} at depth {depth}: "
                 f"{len(chain.nuclides)} nuclides, {len(chain.edges)} edges")
    return chain

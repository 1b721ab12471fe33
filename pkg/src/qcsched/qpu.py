"""QPU architectures, calibration data, templates, and drift.

QpuState values are immutable snapshots; drift produces new snapshots.
Error arrays are indexed by the coupling map's canonical (sorted) edge
list so calibration rows stay aligned across exports and templates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, TopologyError
from .rng import substream

EPS_MIN_DEFAULT = 1e-5
EPS_MAX_DEFAULT = 0.5

# calibration priors, representative of published superconducting magnitudes
SINGLE_QUBIT_RANGE = (1e-4, 1e-3)
TWO_QUBIT_RANGE = (5e-3, 3e-2)
READOUT_RANGE = (1e-2, 5e-2)


@dataclass(frozen=True, eq=False)
class CouplingMap:
    size: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    edge_index: dict[tuple[int, int], int] = field(repr=False)

    @staticmethod
    def from_edges(size: int, raw_edges: Sequence[Sequence[int]]) -> "CouplingMap":
        canon = set()
        for e in raw_edges:
            a, b = int(e[0]), int(e[1])
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < size and 0 <= b < size):
                raise TopologyError(f"edge ({a},{b}) out of range for size {size}")
            canon.add((min(a, b), max(a, b)))
        edges = tuple(sorted(canon))
        nbr: list[list[int]] = [[] for _ in range(size)]
        for a, b in edges:
            nbr[a].append(b)
            nbr[b].append(a)
        neighbors = tuple(tuple(sorted(ns)) for ns in nbr)
        # connectivity check via BFS from 0
        if size > 1:
            seen = {0}
            frontier = deque([0])
            while frontier:
                u = frontier.popleft()
                for v in neighbors[u]:
                    if v not in seen:
                        seen.add(v)
                        frontier.append(v)
            if len(seen) != size:
                raise TopologyError(f"coupling map disconnected: reached {len(seen)}/{size} qubits")
        edge_index = {e: i for i, e in enumerate(edges)}
        return CouplingMap(size=size, edges=edges, neighbors=neighbors, edge_index=edge_index)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edge_index

    def same_graph(self, other: "CouplingMap") -> bool:
        return self.size == other.size and self.edges == other.edges


def line_map(n: int) -> CouplingMap:
    return CouplingMap.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def grid_map(n: int) -> CouplingMap:
    """Near-square grid: rows = floor(sqrt(n)), last row may be partial."""
    rows = max(1, int(np.sqrt(n)))
    cols = -(-n // rows)
    edges = []
    for i in range(n):
        r, c = divmod(i, cols)
        if c + 1 < cols and i + 1 < n and (i + 1) // cols == r:
            edges.append((i, i + 1))
        if i + cols < n:
            edges.append((i, i + cols))
    return CouplingMap.from_edges(n, edges)


def heavy_hex_map(n: int) -> CouplingMap:
    """Heavy-hex approximation: horizontal rows of degree-2 qubits joined
    by staggered bridge qubits, BFS-truncated to n nodes.

    The BFS prefix keeps every node's parent inside the set, so the
    induced subgraph is connected for any n.
    """
    if n == 1:
        return CouplingMap.from_edges(1, [])
    cols = 7
    rows = max(2, -(-n // cols))
    node_of = {}
    edges = []
    nid = 0
    for r in range(rows):
        for c in range(cols):
            node_of[("row", r, c)] = nid
            nid += 1
    for r in range(rows - 1):
        offset = 0 if r % 2 == 0 else 2
        for c in range(offset, cols, 4):
            node_of[("bridge", r, c)] = nid
            nid += 1
    for r in range(rows):
        for c in range(cols - 1):
            edges.append((node_of[("row", r, c)], node_of[("row", r, c + 1)]))
    for r in range(rows - 1):
        offset = 0 if r % 2 == 0 else 2
        for c in range(offset, cols, 4):
            b = node_of[("bridge", r, c)]
            edges.append((node_of[("row", r, c)], b))
            edges.append((b, node_of[("row", r + 1, c)]))
    adj: dict[int, list[int]] = {i: [] for i in range(nid)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    order = []
    seen = {0}
    frontier = deque([0])
    while frontier and len(order) < n:
        u = frontier.popleft()
        order.append(u)
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    if len(order) < n:
        raise TopologyError(f"heavy-hex lattice too small for {n} qubits")
    relabel = {old: new for new, old in enumerate(order)}
    kept = [
        (relabel[a], relabel[b])
        for a, b in edges
        if a in relabel and b in relabel
    ]
    return CouplingMap.from_edges(n, kept)


TOPOLOGY_BUILDERS = {"line": line_map, "grid": grid_map, "heavy-hex": heavy_hex_map}


def make_coupling(topology: str, size: int, edges: Sequence[Sequence[int]] | None = None) -> CouplingMap:
    if topology == "custom":
        if not edges:
            raise ConfigError("custom topology requires an explicit edge list")
        return CouplingMap.from_edges(size, edges)
    builder = TOPOLOGY_BUILDERS.get(topology)
    if builder is None:
        raise ConfigError(f"unknown topology {topology!r}; expected one of "
                          f"{sorted(TOPOLOGY_BUILDERS)} or 'custom'")
    return builder(size)


@dataclass(frozen=True, eq=False)
class CalibrationData:
    single_qubit_error: np.ndarray
    two_qubit_error: np.ndarray
    readout_error: np.ndarray
    epoch: int

    def validate(self, coupling: CouplingMap) -> None:
        if len(self.single_qubit_error) != coupling.size:
            raise ConfigError("single_qubit_error size mismatch")
        if len(self.readout_error) != coupling.size:
            raise ConfigError("readout_error size mismatch")
        if len(self.two_qubit_error) != len(coupling.edges):
            raise ConfigError("two_qubit_error size mismatch")
        for arr in (self.single_qubit_error, self.two_qubit_error, self.readout_error):
            if len(arr) and (arr.min() < 0.0 or arr.max() >= 1.0):
                raise ConfigError("calibration entries must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class QpuState:
    id: str
    model: str
    coupling: CouplingMap
    calibration: CalibrationData
    queue: tuple[str, ...] = ()
    busy_until: float = 0.0


@dataclass(frozen=True, eq=False)
class TemplateQpu:
    model: str
    coupling: CouplingMap
    calibration: CalibrationData


@dataclass(frozen=True)
class DriftParams:
    sigma: float = 0.15
    eps_min: float = EPS_MIN_DEFAULT
    eps_max: float = EPS_MAX_DEFAULT
    cycle_hours: float = 24.0


def make_template_qpu(members: Sequence[QpuState]) -> TemplateQpu:
    """Model-average template: per-entry arithmetic mean of member
    calibrations."""
    if not members:
        raise ValueError("template needs at least one member QPU")
    first = members[0]
    for m in members[1:]:
        if m.model != first.model:
            raise ConfigError(f"mixed models in template: {m.model!r} vs {first.model!r}")
        if not m.coupling.same_graph(first.coupling):
            raise ConfigError(f"coupling map mismatch between {m.id} and {first.id}")
    cal = CalibrationData(
        single_qubit_error=np.mean([m.calibration.single_qubit_error for m in members], axis=0),
        two_qubit_error=np.mean([m.calibration.two_qubit_error for m in members], axis=0),
        readout_error=np.mean([m.calibration.readout_error for m in members], axis=0),
        epoch=first.calibration.epoch,
    )
    return TemplateQpu(model=first.model, coupling=first.coupling, calibration=cal)


def advance_calibration(qpu: QpuState, rng_seed: int, drift: DriftParams) -> QpuState:
    """One calibration cycle: each entry multiplied by a log-normal
    factor exp(N(0, sigma)), clamped. Deterministic per
    (rng_seed, new epoch, qpu id) regardless of call order."""
    new_epoch = qpu.calibration.epoch + 1
    rng = substream(rng_seed, f"drift:{qpu.id}:{new_epoch}")

    def drifted(arr: np.ndarray) -> np.ndarray:
        if drift.sigma == 0.0:
            return arr.copy()
        factors = np.exp(rng.normal(0.0, drift.sigma, size=len(arr)))
        return np.clip(arr * factors, drift.eps_min, drift.eps_max)

    cal = CalibrationData(
        single_qubit_error=drifted(qpu.calibration.single_qubit_error),
        two_qubit_error=drifted(qpu.calibration.two_qubit_error),
        readout_error=drifted(qpu.calibration.readout_error),
        epoch=new_epoch,
    )
    return replace(qpu, calibration=cal)


@dataclass(frozen=True)
class QpuGroupSpec:
    model: str
    count: int
    size: int
    topology: str
    edges: tuple[tuple[int, int], ...] | None = None
    single_qubit_range: tuple[float, float] = SINGLE_QUBIT_RANGE
    two_qubit_range: tuple[float, float] = TWO_QUBIT_RANGE
    readout_range: tuple[float, float] = READOUT_RANGE


@dataclass(frozen=True)
class ClusterSpec:
    groups: tuple[QpuGroupSpec, ...]


def build_cluster(spec: ClusterSpec, seed: int) -> list[QpuState]:
    """Deterministic cluster; each QPU draws base errors from its own
    substream, so same-model devices differ (spatial variance)."""
    if not spec.groups:
        raise ConfigError("cluster spec lists no QPUs")
    qpus: list[QpuState] = []
    for group in spec.groups:
        if group.count < 1 or group.size < 1:
            raise ConfigError(f"bad count/size in group {group.model!r}")
        coupling = make_coupling(group.topology, group.size, group.edges)
        for i in range(group.count):
            qid = f"{group.model}-{i}"
            rng = substream(seed, f"cluster:{qid}")
            cal = CalibrationData(
                single_qubit_error=rng.uniform(*group.single_qubit_range, size=group.size),
                two_qubit_error=rng.uniform(*group.two_qubit_range, size=len(coupling.edges)),
                readout_error=rng.uniform(*group.readout_range, size=group.size),
                epoch=0,
            )
            cal.validate(coupling)
            qpus.append(QpuState(id=qid, model=group.model, coupling=coupling, calibration=cal))
    return qpus


def calibration_rows(qpu: QpuState) -> list[tuple[str, int, str, int, float]]:
    """CSV export rows: (qpu_id, epoch, entry_kind, index, epsilon)."""
    cal = qpu.calibration
    rows = []
    for i, eps in enumerate(cal.single_qubit_error):
        rows.append((qpu.id, cal.epoch, "single", i, float(eps)))
    for i, eps in enumerate(cal.two_qubit_error):
        rows.append((qpu.id, cal.epoch, "two", i, float(eps)))
    for i, eps in enumerate(cal.readout_error):
        rows.append((qpu.id, cal.epoch, "readout", i, float(eps)))
    return rows

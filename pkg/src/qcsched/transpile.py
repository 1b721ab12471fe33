"""Logical-to-physical mapping: greedy layout plus shortest-path SWAP routing.

Qubit mapping is NP-hard, so this is a deterministic heuristic chosen
for testability, not a production router. A SWAP counts as 3 two-qubit
operations for error accounting.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .circuits import Circuit, GateKind, layered_depth
from .errors import CapacityError, TopologyError
from .qpu import CouplingMap

SWAP_TWO_QUBIT_OPS = 3


@dataclass(frozen=True)
class PhysicalOp:
    kind: GateKind
    phys_qubits: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class TranspiledCircuit:
    target: str
    ops: tuple[PhysicalOp, ...]
    layout: dict[int, int]  # initial layout, logical -> physical
    swap_count: int
    width: int
    shots: int
    depth: int = field(init=False)
    two_qubit_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "depth",
            layered_depth((op.phys_qubits for op in self.ops), _phys_span(self.ops)),
        )
        object.__setattr__(
            self, "two_qubit_count",
            sum(1 for op in self.ops if op.kind is GateKind.TWO_QUBIT),
        )


def _phys_span(ops: Sequence[PhysicalOp]) -> int:
    top = 0
    for op in ops:
        for q in op.phys_qubits:
            if q + 1 > top:
                top = q + 1
    return top


def coupling_shortest_path(cmap: CouplingMap, a: int, b: int) -> list[int]:
    """BFS shortest path from a to b; ties broken by always stepping to
    the smallest-index neighbor that still shortens the distance."""
    if not (0 <= a < cmap.size and 0 <= b < cmap.size):
        raise ValueError(f"endpoints ({a},{b}) out of range for size {cmap.size}")
    if a == b:
        return [a]
    dist = [-1] * cmap.size
    dist[b] = 0
    frontier = deque([b])
    while frontier:
        u = frontier.popleft()
        for v in cmap.neighbors[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                frontier.append(v)
    if dist[a] < 0:
        raise TopologyError(f"qubits {a} and {b} are disconnected")
    path = [a]
    cur = a
    while cur != b:
        cur = min(v for v in cmap.neighbors[cur] if dist[v] == dist[cur] - 1)
        path.append(cur)
    return path


def greedy_layout(circuit: Circuit, cmap: CouplingMap) -> dict[int, int]:
    """Most-active logical qubits onto most-connected physical qubits;
    ties by index on both sides."""
    activity = [0] * circuit.width
    for g in circuit.gates:
        if g.kind is not GateKind.MEASURE:
            for q in g.qubits:
                activity[q] += 1
    logical_rank = sorted(range(circuit.width), key=lambda q: (-activity[q], q))
    phys_rank = sorted(range(cmap.size), key=lambda p: (-len(cmap.neighbors[p]), p))
    return {lq: phys_rank[i] for i, lq in enumerate(logical_rank)}


def transpile(
    circuit: Circuit,
    cmap: CouplingMap,
    target_id: str = "",
    initial_layout: dict[int, int] | None = None,
) -> TranspiledCircuit:
    """Route a logical circuit onto the coupling map.

    Non-adjacent 2q gates are preceded by SWAPs along the shortest path
    (moving the first operand next to the second); every emitted 2q op
    lies on a coupling edge.
    """
    if circuit.width > cmap.size:
        raise CapacityError(
            f"circuit width {circuit.width} exceeds QPU size {cmap.size}"
        )
    if initial_layout is None:
        layout = greedy_layout(circuit, cmap)
    else:
        layout = dict(initial_layout)
        if sorted(layout) != list(range(circuit.width)):
            raise ValueError("initial_layout must map every logical qubit")
        if len(set(layout.values())) != len(layout):
            raise ValueError("initial_layout must be injective")
        for p in layout.values():
            if not (0 <= p < cmap.size):
                raise ValueError(f"physical index {p} out of range")

    phys_of = dict(layout)
    ops: list[PhysicalOp] = []
    swap_count = 0
    for g in circuit.gates:
        if g.kind is GateKind.TWO_QUBIT:
            pu, pv = phys_of[g.qubits[0]], phys_of[g.qubits[1]]
            if not cmap.has_edge(pu, pv):
                path = coupling_shortest_path(cmap, pu, pv)
                # walk the first operand down the path until adjacent
                occupant = {p: lq for lq, p in phys_of.items()}
                for i in range(len(path) - 2):
                    x, y = path[i], path[i + 1]
                    for _ in range(SWAP_TWO_QUBIT_OPS):
                        ops.append(PhysicalOp(GateKind.TWO_QUBIT, (x, y)))
                    swap_count += 1
                    lx, ly = occupant.get(x), occupant.get(y)
                    if lx is not None:
                        phys_of[lx] = y
                    if ly is not None:
                        phys_of[ly] = x
                    occupant[x], occupant[y] = ly, lx
                pu, pv = phys_of[g.qubits[0]], phys_of[g.qubits[1]]
            ops.append(PhysicalOp(GateKind.TWO_QUBIT, (pu, pv)))
        else:
            ops.append(PhysicalOp(g.kind, (phys_of[g.qubits[0]],)))
    return TranspiledCircuit(
        target=target_id,
        ops=tuple(ops),
        layout=layout,
        swap_count=swap_count,
        width=circuit.width,
        shots=circuit.shots,
    )


def transpiled_to_json(tc: TranspiledCircuit) -> str:
    doc = {
        "target": tc.target,
        "width": tc.width,
        "shots": tc.shots,
        "swap_count": tc.swap_count,
        "depth": tc.depth,
        "two_qubit_count": tc.two_qubit_count,
        "layout": {str(k): v for k, v in sorted(tc.layout.items())},
        "ops": [{"kind": op.kind.value, "phys_qubits": list(op.phys_qubits)} for op in tc.ops],
    }
    return json.dumps(doc, indent=2)

"""Logical circuit representation, metrics, workload generation, and cutting.

Circuits are gate lists without unitary semantics: downstream consumers
only need operation kinds, qubit locations, and shot counts.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import CutInfeasibleError, InvalidCircuitError
from .rng import substream


class GateKind(str, Enum):
    ONE_QUBIT = "1q"
    TWO_QUBIT = "2q"
    MEASURE = "measure"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]

    def __post_init__(self):
        n = len(self.qubits)
        if self.kind is GateKind.TWO_QUBIT:
            if n != 2 or self.qubits[0] == self.qubits[1]:
                raise InvalidCircuitError(f"2q gate needs 2 distinct qubits, got {self.qubits}")
        elif n != 1:
            raise InvalidCircuitError(f"{self.kind.value} gate needs exactly 1 qubit, got {self.qubits}")


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...]
    shots: int

    def __post_init__(self):
        if self.width < 1:
            raise InvalidCircuitError(f"width must be >= 1, got {self.width}")
        if self.shots < 1:
            raise InvalidCircuitError(f"shots must be >= 1, got {self.shots}")
        for g in self.gates:
            if any(q < 0 or q >= self.width for q in g.qubits):
                raise InvalidCircuitError(f"gate {g} out of range for width {self.width}")


@dataclass(frozen=True)
class CircuitMetrics:
    width: int
    depth: int
    two_qubit_count: int
    total_gates: int
    shots: int


@dataclass(frozen=True, eq=False)
class CutSolution:
    k_max: int
    achieved_cuts: int
    fragments: tuple[Circuit, ...]
    partition: dict[int, int]


def layered_depth(ops: Iterable[Sequence[int]], width: int) -> int:
    """ASAP layering depth: each op lands one layer past the latest op
    touching any of its qubits."""
    level = [0] * width
    depth = 0
    for qubits in ops:
        layer = 1 + max(level[q] for q in qubits)
        for q in qubits:
            level[q] = layer
        if layer > depth:
            depth = layer
    return depth


def circuit_metrics(circuit: Circuit) -> CircuitMetrics:
    depth = layered_depth((g.qubits for g in circuit.gates), circuit.width)
    two_q = sum(1 for g in circuit.gates if g.kind is GateKind.TWO_QUBIT)
    return CircuitMetrics(
        width=circuit.width,
        depth=depth,
        two_qubit_count=two_q,
        total_gates=len(circuit.gates),
        shots=circuit.shots,
    )


def _random_layer(rng, width: int, two_qubit_fraction: float) -> list[Gate]:
    """One full layer: every qubit gets exactly one gate.

    The number of pairs m is randomized around f*w/(1+f) so that the
    expected share of 2q gates among body gates tracks the requested
    fraction (a layer of m pairs holds m 2q gates out of w-m total).
    """
    f = two_qubit_fraction
    target = f * width / (1.0 + f)
    m = int(target)
    if rng.random() < target - m:
        m += 1
    m = min(m, width // 2)
    order = rng.permutation(width)
    gates = []
    for i in range(m):
        a, b = int(order[2 * i]), int(order[2 * i + 1])
        gates.append(Gate(GateKind.TWO_QUBIT, (a, b)))
    for q in order[2 * m:]:
        gates.append(Gate(GateKind.ONE_QUBIT, (int(q),)))
    return gates


def generate_random_circuit(
    seed: int,
    width: int,
    target_depth: int,
    two_qubit_fraction: float,
    shots: int,
) -> Circuit:
    """Random layered circuit ending in a measure on every qubit.

    Body layers = max(1, target_depth - 1), so the metric depth equals
    target_depth exactly for target_depth >= 2 (the terminal measure
    layer contributes the last level).
    """
    if width < 1 or target_depth < 1:
        raise ValueError(f"width and target_depth must be >= 1, got {width}, {target_depth}")
    if not 0.0 <= two_qubit_fraction <= 1.0:
        raise ValueError(f"two_qubit_fraction must be in [0,1], got {two_qubit_fraction}")
    rng = substream(seed, "circuit-gen")
    gates: list[Gate] = []
    body_layers = max(1, target_depth - 1)
    for _ in range(body_layers):
        gates.extend(_random_layer(rng, width, two_qubit_fraction))
    for q in range(width):
        gates.append(Gate(GateKind.MEASURE, (q,)))
    return Circuit(width=width, gates=tuple(gates), shots=shots)


def generate_clustered_circuit(
    seed: int,
    width: int,
    target_depth: int,
    two_qubit_fraction: float,
    shots: int,
    crossings: int,
) -> Circuit:
    """Two dense halves joined by exactly `crossings` 2q gates.

    The planted bipartition is the unique minimum balanced cut as long
    as the halves stay internally dense, which makes these circuits the
    cuttable share of the workload.
    """
    if width < 2:
        raise ValueError(f"clustered circuit needs width >= 2, got {width}")
    if crossings < 0:
        raise ValueError("crossings must be >= 0")
    rng = substream(seed, "circuit-gen-clustered")
    half_a = (width + 1) // 2
    gates: list[Gate] = []
    body_layers = max(1, target_depth - 1)
    for _ in range(body_layers):
        for lo, hi in ((0, half_a), (half_a, width)):
            w = hi - lo
            layer = _random_layer(rng, w, two_qubit_fraction)
            for g in layer:
                gates.append(Gate(g.kind, tuple(q + lo for q in g.qubits)))
    # cross links, spread over the gate list at random offsets
    for _ in range(crossings):
        a = int(rng.integers(0, half_a))
        b = int(rng.integers(half_a, width))
        pos = int(rng.integers(0, len(gates) + 1))
        gates.insert(pos, Gate(GateKind.TWO_QUBIT, (a, b)))
    for q in range(width):
        gates.append(Gate(GateKind.MEASURE, (q,)))
    return Circuit(width=width, gates=tuple(gates), shots=shots)


def _crossing_count(circuit: Circuit, side: Sequence[int]) -> int:
    return sum(
        1
        for g in circuit.gates
        if g.kind is GateKind.TWO_QUBIT and side[g.qubits[0]] != side[g.qubits[1]]
    )


def _interaction_multigraph(circuit: Circuit) -> list[dict[int, int]]:
    adj: list[dict[int, int]] = [dict() for _ in range(circuit.width)]
    for g in circuit.gates:
        if g.kind is GateKind.TWO_QUBIT:
            a, b = g.qubits
            adj[a][b] = adj[a].get(b, 0) + 1
            adj[b][a] = adj[b].get(a, 0) + 1
    return adj


def _climb(side: list[int], adj: list[dict[int, int]], cross: int) -> int:
    """Best-improvement hill climb on pairwise side swaps.

    Swapping a (side 0) with b (side 1) changes the crossing count by
    gain[a] + gain[b] + 2*mult(a,b), where gain[q] counts q's same-side
    edges minus its crossing edges. O(deg) bookkeeping per accepted swap.
    """
    w = len(side)
    gain = [0] * w
    for q in range(w):
        g = 0
        for x, m in adj[q].items():
            g += m if side[x] == side[q] else -m
        gain[q] = g
    while True:
        best = 0
        best_pair = None
        for a in range(w):
            if side[a] != 0:
                continue
            for b in range(w):
                if side[b] != 1:
                    continue
                delta = gain[a] + gain[b] + 2 * adj[a].get(b, 0)
                if delta < best or (delta == best and best_pair is not None and (a, b) < best_pair):
                    best = delta
                    best_pair = (a, b)
        if best >= 0 or best_pair is None:
            return cross
        a, b = best_pair
        side[a], side[b] = 1, 0
        cross += best
        for q in (a, b):
            g = 0
            for x, m in adj[q].items():
                g += m if side[x] == side[q] else -m
            gain[q] = g
        for q in (a, b):
            for x, m in adj[q].items():
                if x in (a, b):
                    continue
                g = 0
                for y, my in adj[x].items():
                    g += my if side[y] == side[x] else -my
                gain[x] = g


def cut_circuit(circuit: Circuit, k_max: int) -> CutSolution:
    """Balanced bipartition minimizing crossing 2q gates, then wire-cut.

    Hill-climbing over pairwise side swaps from an interleaved start,
    10 fixed restarts; crossing gates are deleted from both fragments.
    """
    if circuit.width < 2:
        raise ValueError(f"cut needs width >= 2, got {circuit.width}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")

    w = circuit.width
    size_a = (w + 1) // 2
    rng = substream(0xC07, "cut-restarts")
    adj = _interaction_multigraph(circuit)

    best_side: list[int] | None = None
    best_cross = None
    for restart in range(10):
        if restart == 0:
            # interleaved start; side 0 gets ceil(w/2) qubits
            side = [q % 2 for q in range(w)]
        else:
            perm = rng.permutation(w)
            side = [0] * w
            for q in perm[size_a:]:
                side[int(q)] = 1
        cross = _climb(side, adj, _crossing_count(circuit, side))
        if best_cross is None or cross < best_cross:
            best_cross = cross
            best_side = list(side)
        if best_cross == 0:
            break

    assert best_side is not None
    if best_cross > k_max:
        raise CutInfeasibleError(
            f"minimum balanced crossing count {best_cross} exceeds k_max={k_max}"
        )

    frag_qubits: list[list[int]] = [[], []]
    for q in range(w):
        frag_qubits[best_side[q]].append(q)
    local = {}
    for fid in (0, 1):
        for i, q in enumerate(frag_qubits[fid]):
            local[q] = i
    frag_gates: list[list[Gate]] = [[], []]
    for g in circuit.gates:
        sides = {best_side[q] for q in g.qubits}
        if len(sides) > 1:
            continue  # crossing gate, deleted by the wire-cut model
        fid = sides.pop()
        frag_gates[fid].append(Gate(g.kind, tuple(local[q] for q in g.qubits)))
    fragments = tuple(
        Circuit(width=len(frag_qubits[fid]), gates=tuple(frag_gates[fid]), shots=circuit.shots)
        for fid in (0, 1)
    )
    partition = {q: best_side[q] for q in range(w)}
    return CutSolution(
        k_max=k_max, achieved_cuts=best_cross, fragments=fragments, partition=partition
    )


def min_balanced_crossings(circuit: Circuit) -> int:
    """Exhaustive minimum over all balanced bipartitions. Exponential;
    meant for small widths (tests and diagnostics)."""
    w = circuit.width
    size_a = (w + 1) // 2
    best = None
    for combo in itertools.combinations(range(w), size_a):
        side = [1] * w
        for q in combo:
            side[q] = 0
        c = _crossing_count(circuit, side)
        if best is None or c < best:
            best = c
    return best if best is not None else 0


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "width": circuit.width,
        "shots": circuit.shots,
        "gates": [{"kind": g.kind.value, "qubits": list(g.qubits)} for g in circuit.gates],
    }


def circuit_from_dict(doc: dict) -> Circuit:
    try:
        gates = tuple(
            Gate(GateKind(g["kind"]), tuple(int(q) for q in g["qubits"])) for g in doc["gates"]
        )
        return Circuit(width=int(doc["width"]), gates=gates, shots=int(doc["shots"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidCircuitError(f"malformed circuit document: {exc}") from exc


def circuit_to_json(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=2)


def circuit_from_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidCircuitError(f"invalid JSON: {exc}") from exc
    return circuit_from_dict(doc)

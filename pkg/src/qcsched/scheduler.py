"""Batch scheduling: job preprocessing with estimate attachment, the
bi-objective (mean JCT, mean error) assignment search via NSGA-II over
integer genomes, pseudo-weight MCDM selection, an FCFS baseline, and
filter-score placement for classical knitting tasks.

Genomes index into each job's feasible-QPU list, so every schedule the
optimizer can express is feasible by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ._kernels import batch_objectives, crowding, nd_ranks
from .circuits import Circuit, CutSolution, cut_circuit
from .errors import (
    CutInfeasibleError,
    InfeasibleJobError,
    NoFeasibleNodeError,
)
from .estimator import (
    AcceleratorKind,
    EstimatorContext,
    estimate_execution_time,
    estimate_fidelity,
    features_from_transpiled,
)
from .qpu import QpuState
from .rng import substream
from .transpile import TranspiledCircuit, transpile

REJECT_CAPACITY = "CapacityExceeded"


@dataclass(frozen=True)
class RawJob:
    """A submitted job before preprocessing; cut_k > 0 asks for cutting."""

    id: str
    circuit: Circuit
    arrival_time: float
    cut_k: int = 0


@dataclass(frozen=True)
class QpuEstimate:
    t: float  # estimated quantum execution seconds on this QPU
    f: float  # estimated fidelity on this QPU


@dataclass(frozen=True, eq=False)
class Job:
    """A preprocessed job: feasibility set plus per-QPU (t, f) estimates.

    For cut jobs, q is the widest fragment, t sums the fragment times
    (fragments run sequentially on one QPU), and f is the minimum
    fragment fidelity.
    """

    id: str
    circuit: Circuit
    q: int
    arrival_time: float
    per_qpu: dict[str, QpuEstimate]
    feasible: tuple[str, ...]
    cut: Optional[CutSolution] = None
    transpiled_by_model: dict[str, tuple[TranspiledCircuit, ...]] = field(
        default_factory=dict, repr=False
    )

    def __post_init__(self):
        missing = [x for x in self.feasible if x not in self.per_qpu]
        if missing:
            raise ValueError(f"feasible QPUs without estimates: {missing}")


@dataclass(frozen=True)
class RejectedJob:
    id: str
    reason: str


@dataclass(frozen=True)
class PreprocessResult:
    accepted: list[Job]
    rejected: list[RejectedJob]


@dataclass(frozen=True)
class Schedule:
    assignment: tuple[str, ...]  # QPU id per job, batch order


@dataclass(frozen=True)
class ObjectivePoint:
    f1: float  # mean job completion time, seconds
    f2: float  # mean error, 1 - mean fidelity

    def __post_init__(self):
        if self.f1 < 0.0 or not (0.0 <= self.f2 <= 1.0):
            raise ValueError(f"objective point out of range: ({self.f1}, {self.f2})")


@dataclass(frozen=True)
class ParetoFront:
    entries: tuple[tuple[Schedule, ObjectivePoint], ...]

    def points(self) -> list[ObjectivePoint]:
        return [p for _, p in self.entries]


@dataclass(frozen=True)
class NsgaParams:
    population: int = 100
    max_generations: int = 1600
    max_evaluations: int = 160000
    window: int = 30
    ftol: float = 1e-7
    crossover_eta: float = 3.0
    crossover_rate: float = 0.9
    # low per-gene exchange keeps boundary individuals intact so the
    # front keeps extending instead of collapsing toward the crowd
    crossover_gene_prob: float = 0.15
    mutation_eta: float = 5.0
    mutation_rate: Optional[float] = None  # None -> 1/N at optimize time
    seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.population % 2 != 0:
            raise ValueError(f"population must be even and >= 4, got {self.population}")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.max_generations < 1 or self.max_evaluations < 1:
            raise ValueError("generation and evaluation budgets must be >= 1")
        if not (0.0 <= self.crossover_rate <= 1.0):
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not (0.0 <= self.crossover_gene_prob <= 1.0):
            raise ValueError("crossover_gene_prob must lie in [0, 1]")


# ---------------------------------------------------------------------------
# preprocessing


def preprocess(
    batch: Sequence[RawJob],
    qpus: Sequence[QpuState],
    ctx: EstimatorContext,
) -> PreprocessResult:
    """Filter infeasible jobs and attach per-QPU (t, f) estimates.

    Jobs with cut_k > 0 are cut when a balanced bipartition fits the
    budget; otherwise they fall back to running whole. Transpilation is
    cached per QPU model; fidelity is estimated per QPU against its
    published calibration.
    """
    if not qpus:
        raise ValueError("qpus must be nonempty")
    couplings = {}
    for qpu in qpus:
        couplings.setdefault(qpu.model, qpu.coupling)

    accepted: list[Job] = []
    rejected: list[RejectedJob] = []
    for raw in batch:
        cut = None
        fragments: tuple[Circuit, ...] = (raw.circuit,)
        if raw.cut_k > 0:
            try:
                cut = cut_circuit(raw.circuit, raw.cut_k)
                fragments = cut.fragments
            except CutInfeasibleError:
                cut = None  # run whole instead
        width_req = max(frag.width for frag in fragments)

        transpiled_by_model = {
            model: tuple(transpile(frag, coupling, model) for frag in fragments)
            for model, coupling in couplings.items()
            if coupling.size >= width_req
        }
        per_qpu: dict[str, QpuEstimate] = {}
        for qpu in qpus:
            tcs = transpiled_by_model.get(qpu.model)
            if tcs is None:
                continue
            fid = min(
                estimate_fidelity(tc, qpu.calibration, qpu.coupling) for tc in tcs
            )
            times = [
                estimate_execution_time(ctx.model, features_from_transpiled(tc))
                for tc in tcs
            ]
            t = sum(times) if ctx.fragment_time_mode == "sum" else max(times)
            per_qpu[qpu.id] = QpuEstimate(t=t, f=fid)
        if not per_qpu:
            rejected.append(RejectedJob(id=raw.id, reason=REJECT_CAPACITY))
            continue
        accepted.append(
            Job(
                id=raw.id,
                circuit=raw.circuit,
                q=width_req,
                arrival_time=raw.arrival_time,
                per_qpu=per_qpu,
                feasible=tuple(sorted(per_qpu)),
                cut=cut,
                transpiled_by_model=transpiled_by_model,
            )
        )
    return PreprocessResult(accepted=accepted, rejected=rejected)


# ---------------------------------------------------------------------------
# objectives


def evaluate_objectives(
    x: Schedule,
    jobs: Sequence[Job],
    queue_wait: Mapping[str, float] | None = None,
) -> ObjectivePoint:
    """Mean completion time and mean error of one assignment.

    Jobs mapped to the same QPU stack in batch order: job i's completion
    is the QPU's queue wait plus every earlier same-QPU job's t plus its
    own.
    """
    if len(x.assignment) != len(jobs):
        raise ValueError("assignment length must match job count")
    wait = queue_wait or {}
    acc: dict[str, float] = {}
    s1 = 0.0
    s2 = 0.0
    for job, qid in zip(jobs, x.assignment):
        if qid not in job.per_qpu:
            raise InfeasibleJobError(f"job {job.id} cannot run on {qid}")
        est = job.per_qpu[qid]
        acc[qid] = acc.get(qid, 0.0) + est.t
        s1 += wait.get(qid, 0.0) + acc[qid]
        s2 += 1.0 - est.f
    n = len(jobs)
    return ObjectivePoint(f1=s1 / n, f2=s2 / n)


@dataclass(frozen=True)
class _Encoding:
    qpu_ids: tuple[str, ...]
    feas_flat: np.ndarray  # slot -> global qpu index
    offsets: np.ndarray  # job -> first slot
    t_flat: np.ndarray
    f_flat: np.ndarray
    wait: np.ndarray
    n_feas: np.ndarray  # job -> feasible count


def _qpu_id_of(qpu) -> str:
    return getattr(qpu, "id", qpu)


def _encode(
    jobs: Sequence[Job],
    qpus: Sequence,
    queue_wait: Mapping[str, float] | None,
) -> _Encoding:
    qpu_ids = tuple(_qpu_id_of(q) for q in qpus)
    index = {qid: i for i, qid in enumerate(qpu_ids)}
    wait_map = queue_wait or {}
    feas_flat: list[int] = []
    t_flat: list[float] = []
    f_flat: list[float] = []
    offsets = np.empty(len(jobs), dtype=np.int64)
    n_feas = np.empty(len(jobs), dtype=np.int64)
    for i, job in enumerate(jobs):
        if not job.feasible:
            raise InfeasibleJobError(
                f"job {job.id} reached the optimizer with no feasible QPU"
            )
        offsets[i] = len(feas_flat)
        n_feas[i] = len(job.feasible)
        for qid in job.feasible:
            if qid not in index:
                raise InfeasibleJobError(f"job {job.id} references unknown QPU {qid}")
            est = job.per_qpu[qid]
            feas_flat.append(index[qid])
            t_flat.append(est.t)
            f_flat.append(est.f)
    wait = np.array([wait_map.get(qid, 0.0) for qid in qpu_ids], dtype=np.float64)
    return _Encoding(
        qpu_ids=qpu_ids,
        feas_flat=np.array(feas_flat, dtype=np.int64),
        offsets=offsets,
        t_flat=np.array(t_flat, dtype=np.float64),
        f_flat=np.array(f_flat, dtype=np.float64),
        wait=wait,
        n_feas=n_feas,
    )


def _objectives(enc: _Encoding, genomes: np.ndarray) -> np.ndarray:
    return batch_objectives(
        genomes,
        enc.feas_flat,
        enc.offsets,
        enc.t_flat,
        enc.f_flat,
        enc.wait,
        len(enc.qpu_ids),
    )


# ---------------------------------------------------------------------------
# NSGA-II internals


def _crowding_by_front(objs: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    out = np.empty(len(objs), dtype=np.float64)
    for r in range(int(ranks.max()) + 1 if len(ranks) else 0):
        idx = np.flatnonzero(ranks == r)
        if len(idx):
            out[idx] = crowding(objs[idx])
    return out


def _tournament(
    rng: np.random.Generator, ranks: np.ndarray, crowd: np.ndarray, n: int
) -> np.ndarray:
    cand = rng.integers(0, len(ranks), size=(n, 2))
    a, b = cand[:, 0], cand[:, 1]
    a_wins = (ranks[a] < ranks[b]) | (
        (ranks[a] == ranks[b])
        & ((crowd[a] > crowd[b]) | ((crowd[a] == crowd[b]) & (a <= b)))
    )
    return np.where(a_wins, a, b)


def _sbx(
    rng: np.random.Generator,
    parents: np.ndarray,
    hi: np.ndarray,
    eta: float,
    rate: float,
    gene_prob: float,
) -> np.ndarray:
    """Simulated binary crossover on real relaxations of the genes,
    rounded and clamped back into each job's feasible index range.

    gene_prob is the per-gene exchange probability; keeping it well
    below 0.5 preserves boundary individuals instead of regressing
    their offspring toward the population mean.
    """
    p1 = parents[0::2].astype(np.float64)
    p2 = parents[1::2].astype(np.float64)
    pairs, n_genes = p1.shape
    do_pair = rng.random((pairs, 1)) < rate
    do_gene = rng.random(p1.shape) < gene_prob
    u = rng.random(p1.shape)
    exp = 1.0 / (eta + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** exp, (0.5 / (1.0 - u)) ** exp)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    apply = do_pair & do_gene
    c1 = np.where(apply, c1, p1)
    c2 = np.where(apply, c2, p2)
    children = np.empty_like(parents, dtype=np.float64)
    children[0::2] = c1
    children[1::2] = c2
    children = np.rint(children).astype(np.int64)
    return np.clip(children, 0, hi[None, :])


def _poly_mutation(
    rng: np.random.Generator,
    genomes: np.ndarray,
    hi: np.ndarray,
    eta: float,
    rate: float,
) -> np.ndarray:
    """Polynomial mutation in a parent's vicinity, integer-rounded."""
    x = genomes.astype(np.float64)
    hi_f = hi.astype(np.float64)[None, :]
    span = np.maximum(hi_f, 1.0)
    do = rng.random(x.shape) < rate
    u = rng.random(x.shape)
    left = u < 0.5
    delta1 = x / span
    delta2 = (hi_f - x) / span
    power = 1.0 / (eta + 1.0)
    xy = np.where(left, 1.0 - delta1, 1.0 - delta2)
    val = np.where(
        left,
        2.0 * u + (1.0 - 2.0 * u) * xy ** (eta + 1.0),
        2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta + 1.0),
    )
    deltaq = np.where(left, val**power - 1.0, 1.0 - val**power)
    mutated = np.rint(x + deltaq * span).astype(np.int64)
    out = np.where(do, mutated, genomes)
    return np.clip(out, 0, hi[None, :])


def _survival(
    genomes: np.ndarray, objs: np.ndarray, pop_size: int
) -> tuple[np.ndarray, np.ndarray]:
    ranks = nd_ranks(objs)
    chosen: list[int] = []
    for r in range(int(ranks.max()) + 1):
        idx = np.flatnonzero(ranks == r)
        if len(chosen) + len(idx) <= pop_size:
            chosen.extend(idx.tolist())
            if len(chosen) == pop_size:
                break
        else:
            cd = crowding(objs[idx])
            keep = np.argsort(-cd, kind="stable")[: pop_size - len(chosen)]
            chosen.extend(idx[np.sort(keep)].tolist())
            break
    sel = np.array(chosen, dtype=np.int64)
    return genomes[sel], objs[sel]


def _front_bbox(objs: np.ndarray) -> np.ndarray:
    first = objs[nd_ranks(objs) == 0]
    return np.array(
        [first[:, 0].min(), first[:, 0].max(), first[:, 1].min(), first[:, 1].max()]
    )


def _window_converged(history: list[np.ndarray], window: int, ftol: float) -> bool:
    if len(history) < window:
        return False
    recent = history[-window:]
    changes = []
    for prev, cur in zip(recent, recent[1:]):
        rel = np.abs(cur - prev) / (np.abs(prev) + 1e-12)
        changes.append(rel.mean())
    return float(np.mean(changes)) < ftol


def nsga2_optimize(
    jobs: Sequence[Job],
    qpus: Sequence,
    params: NsgaParams,
    queue_wait: Mapping[str, float] | None = None,
) -> ParetoFront:
    """Elitist NSGA-II over integer assignment genomes.

    Terminates on the generation budget, the evaluation budget, or when
    the first front's bounding box stops moving: mean relative change
    over the last `window` generations below ftol. Deterministic per
    params.seed. Only qpu ids are consulted from `qpus`.
    """
    if not jobs:
        raise ValueError("jobs must be nonempty")
    enc = _encode(jobs, qpus, queue_wait)
    n_jobs = len(jobs)
    hi = enc.n_feas - 1
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / n_jobs
    rng = substream(params.seed, "nsga")

    pop = np.empty((params.population, n_jobs), dtype=np.int64)
    for i in range(n_jobs):
        pop[:, i] = rng.integers(0, enc.n_feas[i], size=params.population)
    objs = _objectives(enc, pop)
    evaluations = params.population
    history = [_front_bbox(objs)]

    for _ in range(params.max_generations):
        if evaluations + params.population > params.max_evaluations:
            break
        ranks = nd_ranks(objs)
        crowd = _crowding_by_front(objs, ranks)
        parents = pop[_tournament(rng, ranks, crowd, params.population)]
        children = _sbx(
            rng,
            parents,
            hi,
            params.crossover_eta,
            params.crossover_rate,
            params.crossover_gene_prob,
        )
        children = _poly_mutation(rng, children, hi, params.mutation_eta, rate)
        child_objs = _objectives(enc, children)
        evaluations += params.population
        pop, objs = _survival(
            np.vstack([pop, children]), np.vstack([objs, child_objs]), params.population
        )
        history.append(_front_bbox(objs))
        if _window_converged(history, params.window, params.ftol):
            break

    front_idx = np.flatnonzero(nd_ranks(objs) == 0)
    genomes = pop[front_idx]
    points = objs[front_idx]
    _, unique_idx = np.unique(genomes, axis=0, return_index=True)
    entries = []
    for i in np.sort(unique_idx):
        assignment = tuple(
            jobs[j].feasible[genomes[i, j]] for j in range(n_jobs)
        )
        entries.append(
            (
                Schedule(assignment=assignment),
                ObjectivePoint(f1=float(points[i, 0]), f2=float(points[i, 1])),
            )
        )
    entries.sort(key=lambda e: (e[1].f1, e[1].f2, e[0].assignment))
    return ParetoFront(entries=tuple(entries))


# ---------------------------------------------------------------------------
# front utilities


def non_dominated_sort(points: Sequence[ObjectivePoint]) -> list[list[int]]:
    """Indices grouped by non-domination rank, rank 0 first."""
    if not points:
        return []
    arr = np.array([[p.f1, p.f2] for p in points], dtype=np.float64)
    ranks = nd_ranks(arr)
    fronts: list[list[int]] = [[] for _ in range(int(ranks.max()) + 1)]
    for i, r in enumerate(ranks):
        fronts[int(r)].append(i)
    return fronts


def crowding_distance(front: Sequence[ObjectivePoint]) -> list[float]:
    if not front:
        return []
    arr = np.array([[p.f1, p.f2] for p in front], dtype=np.float64)
    return [float(d) for d in crowding(arr)]


def pseudo_weights(front: ParetoFront) -> list[tuple[float, float]]:
    """Per-entry relative distance to the worst point in each objective,
    normalized to sum to 1; degenerate objectives contribute 0."""
    pts = np.array([[p.f1, p.f2] for _, p in front.entries], dtype=np.float64)
    if len(pts) == 0:
        raise ValueError("front must be nonempty")
    fmin = pts.min(axis=0)
    fmax = pts.max(axis=0)
    spans = fmax - fmin
    safe = np.where(spans > 0.0, spans, 1.0)
    num = np.where(spans > 0.0, (fmax - pts) / safe, 0.0)
    denom = num.sum(axis=1)
    weights = np.where(denom[:, None] > 0.0, num / np.where(denom > 0.0, denom, 1.0)[:, None], 0.5)
    return [(float(w1), float(w2)) for w1, w2 in weights]


def _validate_preference(preference: tuple[float, float]) -> tuple[float, float]:
    p1, p2 = float(preference[0]), float(preference[1])
    if p1 < 0.0 or p2 < 0.0 or abs(p1 + p2 - 1.0) > 1e-9:
        raise ValueError(
            f"preference must be nonnegative and sum to 1, got ({p1}, {p2})"
        )
    return p1, p2


def select_solution(
    front: ParetoFront, preference: tuple[float, float]
) -> Schedule:
    """Pick the front entry whose pseudo-weights best match the preference.

    preference = (p1, p2) with p1 the fidelity emphasis and p2 the JCT
    emphasis; pseudo-weight axis 1 tracks f1 (JCT) and axis 2 tracks f2
    (error), so the comparison runs against (w2, w1). Ties break to the
    lower-f1 entry.
    """
    p1, p2 = _validate_preference(preference)
    if not front.entries:
        raise ValueError("front must be nonempty")
    weights = pseudo_weights(front)
    best = None
    for (schedule, point), (w1, w2) in zip(front.entries, weights):
        dist = math.hypot(w2 - p1, w1 - p2)
        key = (dist, point.f1, schedule.assignment)
        if best is None or key < best[0]:
            best = (key, schedule)
    return best[1]


# ---------------------------------------------------------------------------
# baselines


def fcfs_schedule(jobs: Sequence[Job], qpus: Sequence) -> Schedule:
    """Greedy user-centric baseline: each job takes the feasible QPU with
    the best estimated fidelity, ties to the lower id, ignoring load."""
    del qpus  # assignment depends only on per-job estimates
    assignment = []
    for job in jobs:
        best = min(job.feasible, key=lambda qid: (-job.per_qpu[qid].f, qid))
        assignment.append(best)
    return Schedule(assignment=tuple(assignment))


# ---------------------------------------------------------------------------
# classical placement


@dataclass(frozen=True)
class ClassicalNode:
    id: str
    kind: AcceleratorKind
    count: int  # accelerators on the node
    speed: float  # FLOPs/s per accelerator
    utilization: float = 0.0  # current load measure, lower is better


@dataclass(frozen=True)
class ClassicalTask:
    flops: float
    kind: AcceleratorKind
    count: int = 1
    min_speed: float = 0.0


def filter_score_classical(
    task: ClassicalTask, nodes: Sequence[ClassicalNode]
) -> str:
    """Two stages: drop nodes that cannot host the task, then pick the
    least-utilized survivor (ties by node id)."""
    if not nodes:
        raise ValueError("nodes must be nonempty")
    feasible = [
        n
        for n in nodes
        if n.kind == task.kind
        and n.count >= task.count
        and n.speed > 0.0
        and n.speed >= task.min_speed
    ]
    if not feasible:
        raise NoFeasibleNodeError(
            f"no node offers {task.count}x {task.kind.value} at "
            f">= {task.min_speed} FLOPs/s"
        )
    return min(feasible, key=lambda n: (n.utilization, n.id)).id

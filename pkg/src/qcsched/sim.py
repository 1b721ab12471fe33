"""Discrete-event simulation of a quantum cloud.

Arrivals feed a pending queue; scheduling triggers drain it through the
Pareto or FCFS policy onto per-QPU FIFO queues; executions are resolved
by a ground-truth oracle; calibration cycles re-draw device error rates.
Everything is deterministic per (config, seed).
"""

from __future__ import annotations

import heapq
import json
import math
import time as _time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .circuits import generate_clustered_circuit, generate_random_circuit
from .errors import ConfigError, SimulationError
from .estimator import (
    AcceleratorKind,
    EstimatorContext,
    FeatureVector,
    estimate_fidelity,
    fit_regression,
    knitting_flops,
)
from .qpu import ClusterSpec, DriftParams, QpuGroupSpec, QpuState, advance_calibration, build_cluster
from .rng import substream
from .scheduler import (
    ClassicalNode,
    ClassicalTask,
    Job,
    NsgaParams,
    QpuEstimate,
    RawJob,
    Schedule,
    evaluate_objectives,
    fcfs_schedule,
    filter_score_classical,
    nsga2_optimize,
    preprocess,
    select_solution,
)

SECONDS_PER_HOUR = 3600.0

POLICY_PARETO = "pareto"
POLICY_FCFS = "fcfs"

# event kind priorities for same-time ordering: finishes free capacity
# before recalibration, arrivals land before the trigger that drains them
_PRIO_FINISH = 0
_PRIO_CALIBRATION = 1
_PRIO_ARRIVAL = 2
_PRIO_TRIGGER = 3

EVENT_KINDS = ("JobFinish", "CalibrationCycle", "JobArrival", "ScheduleTrigger")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class WorkloadParams:
    """Parameters of the synthetic job generator."""

    width_mean: float = 10.0
    width_std: float = 4.0
    width_min: int = 2
    # depth and gate density tuned so that, under the default error
    # priors and swap-expanding transpilation, job fidelities spread
    # over roughly [0.15, 0.8] instead of saturating at 0 or 1
    depth_mean: float = 5.0
    depth_std: float = 2.0
    depth_min: int = 2
    depth_max: int = 10
    shots_min: int = 100
    shots_max: int = 10000
    two_qubit_fraction: float = 0.06
    hybrid_fraction: float = 0.5  # share of jobs carrying a cut request
    max_crossings: int = 3
    cut_k: int = 3

    def __post_init__(self):
        if self.width_min < 2:
            raise ConfigError("width_min must be >= 2")
        if not 2 <= self.depth_min <= self.depth_max:
            raise ConfigError("need 2 <= depth_min <= depth_max")
        if not 1 <= self.shots_min <= self.shots_max:
            raise ConfigError("need 1 <= shots_min <= shots_max")
        if not 0.0 <= self.hybrid_fraction <= 1.0:
            raise ConfigError("hybrid_fraction must be in [0, 1]")
        if self.max_crossings < 1 or self.cut_k < 0:
            raise ConfigError("max_crossings >= 1 and cut_k >= 0 required")


@dataclass(frozen=True)
class OracleConstants:
    """Hardware timing model used by ground-truth execution."""

    t_layer: float = 300e-9
    t_readout: float = 4e-6
    t_overhead: float = 2.0
    sigma_time: float = 0.01
    sigma_fid: float = 0.03

    def __post_init__(self):
        if min(self.t_layer, self.t_readout, self.t_overhead) < 0:
            raise ConfigError("oracle timing constants must be >= 0")
        if self.sigma_time < 0 or self.sigma_fid < 0:
            raise ConfigError("oracle sigmas must be >= 0")


@dataclass(frozen=True)
class ClassicalNodeSpec:
    id: str
    kind: str = "CPU"
    count: int = 4
    speed: float = 1e10  # FLOPs/s per accelerator

    def __post_init__(self):
        AcceleratorKind(self.kind)  # raises on unknown kind
        if self.count < 1 or self.speed <= 0:
            raise ConfigError(f"bad classical node spec {self.id!r}")


DEFAULT_CLASSICAL_NODES = (
    ClassicalNodeSpec(id="cpu-0"),
    ClassicalNodeSpec(id="cpu-1"),
)


@dataclass(frozen=True)
class EstimatorParams:
    """How the execution-time model is trained at simulation start."""

    degree: int = 2
    training_samples: int = 2000
    training_noise: float = 0.01
    c_knit: float = 1e6
    knit_base: float = 6.0
    fragment_time_mode: str = "sum"

    def __post_init__(self):
        if self.degree < 1:
            raise ConfigError("degree must be >= 1")
        if self.training_samples < 32:
            raise ConfigError("training_samples must be >= 32")
        if self.training_noise < 0:
            raise ConfigError("training_noise must be >= 0")


def default_cluster_spec(qpu_count: int = 8, qpu_size: int = 27) -> ClusterSpec:
    return ClusterSpec(
        groups=(
            QpuGroupSpec(
                model="hh27",
                count=qpu_count,
                size=qpu_size,
                topology="heavy-hex",
            ),
        )
    )


@dataclass(frozen=True)
class SimConfig:
    cluster: ClusterSpec = field(default_factory=default_cluster_spec)
    duration: float = 3600.0
    arrival_profile: tuple[tuple[float, float], ...] = ((0.0, 1500.0),)
    trigger_queue_limit: int = 100
    trigger_interval: float = 120.0
    preference: tuple[float, float] = (0.5, 0.5)
    policy: str = POLICY_PARETO
    workload: WorkloadParams = WorkloadParams()
    oracle: OracleConstants = OracleConstants()
    estimator: EstimatorParams = EstimatorParams()
    nsga: NsgaParams = NsgaParams()
    drift: DriftParams = DriftParams()
    classical_nodes: tuple[ClassicalNodeSpec, ...] = DEFAULT_CLASSICAL_NODES
    knit_kind: str = "CPU"
    warmup: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be > 0")
        if self.trigger_queue_limit < 1:
            raise ConfigError("trigger_queue_limit must be >= 1")
        if self.trigger_interval <= 0:
            raise ConfigError("trigger_interval must be > 0")
        if self.policy not in (POLICY_PARETO, POLICY_FCFS):
            raise ConfigError(f"unknown policy {self.policy!r}")
        _validate_profile(self.arrival_profile)
        if not self.classical_nodes:
            raise ConfigError("at least one classical node is required")
        try:
            AcceleratorKind(self.knit_kind)
        except ValueError as exc:
            raise ConfigError(f"unknown knit_kind {self.knit_kind!r}") from exc
        if not 0.0 <= self.warmup < self.duration:
            raise ConfigError("warmup must lie in [0, duration)")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


def _validate_profile(profile: Sequence[Sequence[float]]) -> None:
    if not profile:
        raise ConfigError("arrival_profile must be nonempty")
    last_hour = -1.0
    for entry in profile:
        if len(entry) != 2:
            raise ConfigError("profile entries must be (hour, jobs_per_hour)")
        hour, rate = entry
        if hour < 0 or hour <= last_hour:
            raise ConfigError("profile hours must be >= 0 and strictly increasing")
        if rate <= 0:
            raise ConfigError("arrival rates must be > 0")
        last_hour = hour


# ---------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: str
    payload: object = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    arrival: float
    scheduled: float
    started: float
    finished: float
    qpu: str
    est_fidelity: float
    true_fidelity: float
    est_time: float
    true_time: float

    def __post_init__(self):
        eps = 1e-9
        ok = (
            self.arrival <= self.scheduled + eps
            and self.scheduled <= self.started + eps
            and self.started <= self.finished + eps
        )
        if not ok:
            raise ValueError(f"timestamps out of order for job {self.job_id}")

    @property
    def jct(self) -> float:
        return self.finished - self.arrival


@dataclass(frozen=True)
class FrontRow:
    """Per-cycle front extent plus the chosen point."""

    cycle: int
    f1_min: float
    f1_max: float
    f2_min: float
    f2_max: float
    f1_chosen: float
    f2_chosen: float


@dataclass(frozen=True)
class SimReport:
    duration: float
    records: tuple[JobRecord, ...]
    qpu_load: dict[str, float]  # active runtime inside [0, duration]
    fronts: tuple[FrontRow, ...]
    queue_ts: tuple[tuple[float, int], ...]
    counts: dict[str, int]
    aggregates: dict[str, float]
    utilization: dict[str, float]
    classical_busy: dict[str, float]
    rejected_ids: tuple[str, ...]
    stage_seconds: dict[str, float]

    def __post_init__(self):
        for qid, load in self.qpu_load.items():
            if load < -1e-9 or load > self.duration + 1e-6:
                raise ValueError(f"active runtime for {qid} outside [0, duration]")


# ---------------------------------------------------------------------------
# arrivals and workload


def arrival_process(
    profile: Sequence[Sequence[float]], duration: float, rng: np.random.Generator
) -> list[float]:
    """Piecewise-homogeneous Poisson arrival times in [0, duration).

    Each hour bucket uses the most recent profile rate at or before it;
    exponential gaps restart at bucket boundaries, which leaves the
    process exact thanks to memorylessness.
    """
    _validate_profile(profile)
    if duration < 0:
        raise ConfigError("duration must be >= 0")
    entries = sorted((float(h), float(r)) for h, r in profile)
    times: list[float] = []
    bucket = 0
    while bucket * SECONDS_PER_HOUR < duration:
        rate = entries[0][1]
        for hour, r in entries:
            if hour <= bucket:
                rate = r
        start = bucket * SECONDS_PER_HOUR
        end = min(start + SECONDS_PER_HOUR, duration)
        mean_gap = SECONDS_PER_HOUR / rate
        t = start
        while True:
            t += rng.exponential(mean_gap)
            if t >= end:
                break
            times.append(t)
        bucket += 1
    return times


def make_workload(
    seed: int,
    arrival_times: Sequence[float],
    max_width: int,
    params: WorkloadParams = WorkloadParams(),
) -> list[RawJob]:
    """Synthetic job batch: clamped-normal widths and depths, log-uniform
    shots, and a configurable share of cluster-structured hybrid jobs
    that request cutting."""
    if max_width < params.width_min:
        raise ConfigError("max_width below the minimum job width")
    rng = substream(seed, "workload")
    digits = max(5, len(str(max(len(arrival_times) - 1, 0))))
    jobs: list[RawJob] = []
    for i, arrival in enumerate(arrival_times):
        width = int(np.clip(round(rng.normal(params.width_mean, params.width_std)),
                            params.width_min, max_width))
        depth = int(np.clip(round(rng.normal(params.depth_mean, params.depth_std)),
                            params.depth_min, params.depth_max))
        log_lo, log_hi = math.log10(params.shots_min), math.log10(params.shots_max)
        shots = int(round(10.0 ** rng.uniform(log_lo, log_hi)))
        shots = int(np.clip(shots, params.shots_min, params.shots_max))
        hybrid = rng.random() < params.hybrid_fraction
        crossings = int(rng.integers(1, params.max_crossings + 1))
        circuit_seed = int(rng.integers(0, 2**31 - 1))
        # clustered circuits need two nonempty halves worth cutting
        if hybrid and width >= 4 and params.cut_k > 0:
            circuit = generate_clustered_circuit(
                seed=circuit_seed,
                width=width,
                target_depth=depth,
                two_qubit_fraction=params.two_qubit_fraction,
                shots=shots,
                crossings=crossings,
            )
            cut_k = params.cut_k
        else:
            circuit = generate_random_circuit(
                seed=circuit_seed,
                width=width,
                target_depth=depth,
                two_qubit_fraction=params.two_qubit_fraction,
                shots=shots,
            )
            cut_k = 0
        jobs.append(
            RawJob(
                id=f"job-{i:0{digits}d}",
                circuit=circuit,
                arrival_time=float(arrival),
                cut_k=cut_k,
            )
        )
    return jobs


# ---------------------------------------------------------------------------
# ground truth


def oracle_quantum_seconds(shots: int, depth: int, constants: OracleConstants) -> float:
    """Closed-form hardware runtime of one transpiled fragment."""
    return shots * (depth * constants.t_layer + constants.t_readout) + constants.t_overhead


def ground_truth_execution(
    job: Job,
    qpu: QpuState,
    rng: np.random.Generator,
    constants: OracleConstants = OracleConstants(),
) -> tuple[float, float]:
    """Resolve what actually happens when `job` runs on `qpu`.

    Fragments run back to back, so runtimes sum; fidelity is the weakest
    fragment under the QPU's current true calibration. One log-normal
    jitter draw each for time (first) and fidelity (second).
    """
    fragments = job.transpiled_by_model.get(qpu.model)
    if not fragments:
        raise SimulationError(f"job {job.id} was never transpiled for model {qpu.model!r}")
    total = 0.0
    for tc in fragments:
        total += oracle_quantum_seconds(tc.shots, tc.depth, constants)
    total *= math.exp(rng.normal(0.0, constants.sigma_time))
    fid = min(estimate_fidelity(tc, qpu.calibration, qpu.coupling) for tc in fragments)
    fid *= math.exp(rng.normal(0.0, constants.sigma_fid))
    return total, float(min(max(fid, 0.0), 1.0))


def make_training_dataset(
    seed: int,
    n: int,
    constants: OracleConstants = OracleConstants(),
    noise: float = 0.01,
) -> list[tuple[FeatureVector, float]]:
    """Feature/runtime pairs sampled from the ground-truth timing model.

    Ranges deliberately overshoot the workload generator so the fitted
    surface extrapolates nowhere that matters.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = substream(seed, "training")
    out: list[tuple[FeatureVector, float]] = []
    for _ in range(n):
        width = int(rng.integers(2, 28))
        shots = int(round(10.0 ** rng.uniform(2.0, 5.0)))
        depth = int(rng.integers(1, 1001))
        two_q = int(rng.integers(0, max(2, width * depth // 4)))
        seconds = oracle_quantum_seconds(shots, depth, constants)
        seconds *= math.exp(rng.normal(0.0, noise))
        out.append((FeatureVector(width, shots, depth, two_q), seconds))
    return out


def build_estimator_context(
    seed: int, params: EstimatorParams, constants: OracleConstants
) -> EstimatorContext:
    dataset = make_training_dataset(
        seed, params.training_samples, constants, params.training_noise
    )
    model = fit_regression(dataset, degree=params.degree)
    return EstimatorContext(
        model=model,
        c_knit=params.c_knit,
        knit_base=params.knit_base,
        fragment_time_mode=params.fragment_time_mode,
    )


# ---------------------------------------------------------------------------
# event loop internals


@dataclass
class _Queued:
    job: Job
    est: QpuEstimate
    scheduled: float


@dataclass
class _Running:
    job: Job
    est: QpuEstimate
    scheduled: float
    started: float
    true_time: float
    true_fidelity: float
    finish_time: float


@dataclass
class _QpuRuntime:
    state: QpuState
    queue: deque = field(default_factory=deque)
    queued_est: float = 0.0
    running: Optional[_Running] = None
    active: list = field(default_factory=list)  # (start, end) intervals


class _Sim:
    def __init__(self, config: SimConfig, jobs: Optional[Sequence[RawJob]] = None):
        self.cfg = config
        self.ctx = build_estimator_context(config.seed, config.estimator, config.oracle)
        cluster = build_cluster(config.cluster, seed=config.seed)
        self.qpus: dict[str, _QpuRuntime] = {q.id: _QpuRuntime(state=q) for q in cluster}
        self.max_width = max(q.coupling.size for q in cluster)
        if jobs is None:
            arrival_rng = substream(config.seed, "arrivals")
            times = arrival_process(config.arrival_profile, config.duration, arrival_rng)
            jobs = make_workload(config.seed, times, self.max_width, config.workload)
        self.raw_jobs = list(jobs)
        self.node_specs = {n.id: n for n in config.classical_nodes}
        self.node_busy: dict[str, float] = {n.id: 0.0 for n in config.classical_nodes}
        self.pending: list[RawJob] = []
        self.records: list[JobRecord] = []
        self.rejected: list[str] = []
        self.fronts: list[FrontRow] = []
        self.queue_ts: list[tuple[float, int]] = []
        self.first_batch: Optional[list[RawJob]] = None
        self.stage = {"preprocess": 0.0, "optimize": 0.0, "select": 0.0}
        self.cycle = 0
        self._seq = 0
        self._heap: list = []

    # -- heap helpers

    def _push(self, time_s: float, prio: int, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time_s, prio, self._seq, payload))

    # -- event handlers

    def _on_arrival(self, raw: RawJob) -> None:
        self.pending.append(raw)
        if len(self.pending) == self.cfg.trigger_queue_limit:
            self._push(raw.arrival_time, _PRIO_TRIGGER)

    def _on_calibration(self) -> None:
        for rt in self.qpus.values():
            rt.state = advance_calibration(rt.state, self.cfg.seed, self.cfg.drift)

    def _wait_map(self, now: float) -> dict[str, float]:
        wait = {}
        for qid, rt in self.qpus.items():
            busy = max(rt.running.finish_time - now, 0.0) if rt.running else 0.0
            wait[qid] = busy + rt.queued_est
        return wait

    def _on_trigger(self, now: float) -> None:
        self.queue_ts.append((now, len(self.pending)))
        if not self.pending:
            return
        batch, self.pending = self.pending, []
        if self.first_batch is None:
            self.first_batch = list(batch)
        states = [rt.state for rt in self.qpus.values()]

        t0 = _time.perf_counter()
        pre = preprocess(batch, states, self.ctx)
        self.stage["preprocess"] += _time.perf_counter() - t0
        self.rejected.extend(r.id for r in pre.rejected)
        if not pre.accepted:
            return

        wait = self._wait_map(now)
        if self.cfg.policy == POLICY_PARETO:
            cycle_seed = int(substream(self.cfg.seed, f"nsga:{self.cycle}").integers(0, 2**31 - 1))
            params = replace(self.cfg.nsga, seed=cycle_seed)
            t0 = _time.perf_counter()
            front = nsga2_optimize(pre.accepted, states, params, wait)
            self.stage["optimize"] += _time.perf_counter() - t0
            t0 = _time.perf_counter()
            chosen = select_solution(front, self.cfg.preference)
            self.stage["select"] += _time.perf_counter() - t0
            points = front.points()
        else:
            t0 = _time.perf_counter()
            chosen = fcfs_schedule(pre.accepted, states)
            self.stage["select"] += _time.perf_counter() - t0
            points = [evaluate_objectives(chosen, pre.accepted, wait)]
        chosen_pt = evaluate_objectives(chosen, pre.accepted, wait)
        self.fronts.append(
            FrontRow(
                cycle=self.cycle,
                f1_min=min(p.f1 for p in points),
                f1_max=max(p.f1 for p in points),
                f2_min=min(p.f2 for p in points),
                f2_max=max(p.f2 for p in points),
                f1_chosen=chosen_pt.f1,
                f2_chosen=chosen_pt.f2,
            )
        )
        self.cycle += 1

        for job, qid in zip(pre.accepted, chosen.assignment):
            rt = self.qpus[qid]
            est = job.per_qpu[qid]
            rt.queue.append(_Queued(job=job, est=est, scheduled=now))
            rt.queued_est += est.t
        for qid, rt in self.qpus.items():
            if rt.running is None and rt.queue:
                self._start_next(qid, now)

    def _start_next(self, qid: str, now: float) -> None:
        rt = self.qpus[qid]
        item = rt.queue.popleft()
        rt.queued_est -= item.est.t
        rng = substream(self.cfg.seed, f"oracle:{item.job.id}")
        true_time, true_fid = ground_truth_execution(item.job, rt.state, rng, self.cfg.oracle)
        finish = now + true_time
        rt.running = _Running(
            job=item.job,
            est=item.est,
            scheduled=item.scheduled,
            started=now,
            true_time=true_time,
            true_fidelity=true_fid,
            finish_time=finish,
        )
        self._push(finish, _PRIO_FINISH, qid)

    def _knit_finish(self, job: Job, quantum_finish: float) -> float:
        if job.cut is None:
            return quantum_finish
        flops = knitting_flops(
            job.cut.achieved_cuts,
            len(job.cut.fragments),
            base=self.ctx.knit_base,
            c_knit=self.ctx.c_knit,
        )
        task = ClassicalTask(flops=flops, kind=AcceleratorKind(self.cfg.knit_kind))
        nodes = [
            ClassicalNode(
                id=spec.id,
                kind=AcceleratorKind(spec.kind),
                count=spec.count,
                speed=spec.speed,
                utilization=self.node_busy[spec.id],
            )
            for spec in self.cfg.classical_nodes
        ]
        node_id = filter_score_classical(task, nodes)
        knit_seconds = flops / self.node_specs[node_id].speed
        self.node_busy[node_id] += knit_seconds
        return quantum_finish + knit_seconds

    def _on_finish(self, qid: str, now: float) -> None:
        rt = self.qpus[qid]
        run = rt.running
        if run is None or abs(run.finish_time - now) > 1e-9:
            raise SimulationError(f"finish event without a matching run on {qid}")
        rt.running = None
        rt.active.append((run.started, now))
        finished = self._knit_finish(run.job, now)
        self.records.append(
            JobRecord(
                job_id=run.job.id,
                arrival=run.job.arrival_time,
                scheduled=run.scheduled,
                started=run.started,
                finished=finished,
                qpu=qid,
                est_fidelity=run.est.f,
                true_fidelity=run.true_fidelity,
                est_time=run.est.t,
                true_time=run.true_time,
            )
        )
        if rt.queue:
            self._start_next(qid, now)

    # -- main loop

    def run(self) -> SimReport:
        cfg = self.cfg
        for raw in self.raw_jobs:
            self._push(raw.arrival_time, _PRIO_ARRIVAL, raw)
        k = 1
        while k * cfg.trigger_interval <= cfg.duration:
            self._push(k * cfg.trigger_interval, _PRIO_TRIGGER)
            k += 1
        cycle_s = cfg.drift.cycle_hours * SECONDS_PER_HOUR
        k = 1
        while k * cycle_s <= cfg.duration:
            self._push(k * cycle_s, _PRIO_CALIBRATION)
            k += 1

        while self._heap:
            time_s, prio, _, payload = heapq.heappop(self._heap)
            if prio == _PRIO_FINISH:
                self._on_finish(payload, time_s)
            elif prio == _PRIO_CALIBRATION:
                self._on_calibration()
            elif prio == _PRIO_ARRIVAL:
                self._on_arrival(payload)
            else:
                self._on_trigger(time_s)

        for qid, rt in self.qpus.items():
            if rt.running is not None or rt.queue:
                raise SimulationError(f"drained event loop left work on {qid}")

        counts = {
            "arrivals": len(self.raw_jobs),
            "completed": len(self.records),
            "rejected": len(self.rejected),
            "pending_at_end": len(self.pending),
        }
        if counts["completed"] + counts["rejected"] + counts["pending_at_end"] != counts["arrivals"]:
            raise SimulationError(f"job conservation broken: {counts}")

        qpu_load = {
            qid: _clipped_runtime(rt.active, cfg.duration) for qid, rt in self.qpus.items()
        }
        records = tuple(sorted(self.records, key=lambda r: r.job_id))
        aggregates, utilization = compute_metrics(
            records, qpu_load, cfg.duration, warmup=cfg.warmup
        )
        return SimReport(
            duration=cfg.duration,
            records=records,
            qpu_load=qpu_load,
            fronts=tuple(self.fronts),
            queue_ts=tuple(self.queue_ts),
            counts=counts,
            aggregates=aggregates,
            utilization=utilization,
            classical_busy=dict(self.node_busy),
            rejected_ids=tuple(self.rejected),
            stage_seconds=dict(self.stage),
        )


def _clipped_runtime(intervals: Sequence[tuple[float, float]], duration: float) -> float:
    total = 0.0
    for start, end in intervals:
        total += max(min(end, duration) - max(start, 0.0), 0.0)
    return total


def run_simulation(
    config: SimConfig, jobs: Optional[Sequence[RawJob]] = None
) -> SimReport:
    """Run the full event loop; `jobs` overrides the generated workload
    (arrival times must then lie inside [0, duration))."""
    if jobs is not None:
        for raw in jobs:
            if not 0.0 <= raw.arrival_time < config.duration:
                raise ConfigError(f"job {raw.id} arrives outside [0, duration)")
    return _Sim(config, jobs).run()


# ---------------------------------------------------------------------------
# metrics


def compute_metrics(
    records: Sequence[JobRecord],
    qpu_load: dict[str, float],
    duration: float,
    warmup: float = 0.0,
) -> tuple[dict[str, float], dict[str, float]]:
    """Aggregates over completed jobs (those arriving during warm-up are
    excluded) plus per-QPU utilization."""
    if duration <= 0:
        raise ValueError("duration must be > 0")
    utilization = {qid: load / duration for qid, load in qpu_load.items()}
    kept = [r for r in records if r.arrival >= warmup]
    loads = list(qpu_load.values())
    max_load = max(loads) if loads else 0.0
    min_load = min(loads) if loads else 0.0
    imbalance = (max_load - min_load) / max_load if max_load > 0 else 0.0
    if not kept:
        aggregates = {
            "jobs_measured": 0.0,
            "mean_jct": 0.0,
            "p95_jct": 0.0,
            "mean_true_fidelity": 0.0,
            "mean_est_fidelity": 0.0,
            "mean_utilization": float(np.mean(list(utilization.values()))) if utilization else 0.0,
            "load_imbalance": imbalance,
        }
        return aggregates, utilization
    jcts = np.array([r.jct for r in kept])
    aggregates = {
        "jobs_measured": float(len(kept)),
        "mean_jct": float(np.mean(jcts)),
        "p95_jct": float(np.percentile(jcts, 95)),
        "mean_true_fidelity": float(np.mean([r.true_fidelity for r in kept])),
        "mean_est_fidelity": float(np.mean([r.est_fidelity for r in kept])),
        "mean_utilization": float(np.mean(list(utilization.values()))) if utilization else 0.0,
        "load_imbalance": imbalance,
    }
    return aggregates, utilization


# ---------------------------------------------------------------------------
# exports

RECORDS_COLUMNS = (
    "job_id",
    "arrival",
    "scheduled",
    "started",
    "finished",
    "qpu",
    "est_fidelity",
    "true_fidelity",
    "est_time",
    "true_time",
)
QPU_LOAD_COLUMNS = ("qpu_id", "active_runtime", "utilization")
FRONTS_COLUMNS = ("cycle", "f1_min", "f1_max", "f2_min", "f2_max", "f1_chosen", "f2_chosen")
QUEUE_TS_COLUMNS = ("time", "pending_count")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_records_csv(path, report: SimReport) -> None:
    rows = [
        (
            r.job_id,
            r.arrival,
            r.scheduled,
            r.started,
            r.finished,
            r.qpu,
            r.est_fidelity,
            r.true_fidelity,
            r.est_time,
            r.true_time,
        )
        for r in report.records
    ]
    _write_csv(path, RECORDS_COLUMNS, rows)


def write_qpu_load_csv(path, report: SimReport) -> None:
    rows = [
        (qid, report.qpu_load[qid], report.utilization[qid])
        for qid in sorted(report.qpu_load)
    ]
    _write_csv(path, QPU_LOAD_COLUMNS, rows)


def write_fronts_csv(path, report: SimReport) -> None:
    rows = [
        (f.cycle, f.f1_min, f.f1_max, f.f2_min, f.f2_max, f.f1_chosen, f.f2_chosen)
        for f in report.fronts
    ]
    _write_csv(path, FRONTS_COLUMNS, rows)


def write_queue_ts_csv(path, report: SimReport) -> None:
    _write_csv(path, QUEUE_TS_COLUMNS, list(report.queue_ts))


def report_to_dict(report: SimReport) -> dict:
    return {
        "duration": report.duration,
        "counts": dict(report.counts),
        "aggregates": dict(report.aggregates),
        "utilization": dict(sorted(report.utilization.items())),
        "qpu_load": dict(sorted(report.qpu_load.items())),
        "classical_busy": dict(sorted(report.classical_busy.items())),
        "rejected_ids": list(report.rejected_ids),
    }


def write_report_json(path, report: SimReport) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_log(path, report: SimReport) -> None:
    """Wall-clock stage costs; kept out of the CSVs so those stay
    deterministic byte for byte."""
    lines = [f"stage_seconds {k} {v:.6f}" for k, v in sorted(report.stage_seconds.items())]
    lines.append(f"completed {report.counts['completed']}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def export_report(outdir, report: SimReport) -> None:
    import os

    os.makedirs(outdir, exist_ok=True)
    write_records_csv(os.path.join(outdir, "records.csv"), report)
    write_qpu_load_csv(os.path.join(outdir, "qpu_load.csv"), report)
    write_fronts_csv(os.path.join(outdir, "fronts.csv"), report)
    write_queue_ts_csv(os.path.join(outdir, "queue_ts.csv"), report)
    write_report_json(os.path.join(outdir, "report.json"), report)
    write_run_log(os.path.join(outdir, "run.log"), report)

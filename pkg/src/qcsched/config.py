"""Strict JSON configuration surface.

One top-level file with sections {cluster, workload, scheduler,
estimator, simulation}; every section and nested mapping rejects keys it
does not know, so a typo in an experiment sweep fails loudly instead of
silently running defaults. Also holds the named-preference parser shared
by the CLI and the experiment sweep spec."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

from .circuits import Circuit, Gate, GateKind
from .errors import ConfigError
from .qpu import ClusterSpec, DriftParams, QpuGroupSpec
from .scheduler import NsgaParams, RawJob
from .sim import (
    DEFAULT_CLASSICAL_NODES,
    ClassicalNodeSpec,
    EstimatorParams,
    OracleConstants,
    SimConfig,
    WorkloadParams,
    default_cluster_spec,
)

PREFERENCE_NAMES = {
    "fidelity": (1.0, 0.0),
    "jct": (0.0, 1.0),
    "balanced": (0.5, 0.5),
}


def parse_preference(value) -> tuple[float, float]:
    """Accepts a preference name, a "p1,p2" string, or a 2-sequence."""
    if isinstance(value, str):
        name = value.strip().lower()
        if name in PREFERENCE_NAMES:
            return PREFERENCE_NAMES[name]
        parts = name.split(",")
        if len(parts) != 2:
            raise ConfigError(
                f"preference must be fidelity|jct|balanced or p1,p2 - got {value!r}"
            )
        try:
            p1, p2 = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"non-numeric preference {value!r}") from exc
    elif isinstance(value, Sequence) and len(value) == 2:
        p1, p2 = float(value[0]), float(value[1])
    else:
        raise ConfigError(f"cannot parse preference {value!r}")
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-9:
        raise ConfigError(f"preference components must be >= 0 and sum to 1, got {value!r}")
    return (p1, p2)


def _require_mapping(data, section: str) -> Mapping:
    if not isinstance(data, Mapping):
        raise ConfigError(f"section {section!r} must be a JSON object")
    return data


def _check_keys(data: Mapping, allowed: Sequence[str], section: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in section {section!r}")


def _build(cls, data: Mapping, section: str):
    """Generic strict dataclass builder for flat numeric/str sections."""
    _require_mapping(data, section)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    _check_keys(data, list(fields), section)
    kwargs = {}
    for key, value in data.items():
        ftype = fields[key].type
        if ftype in ("int", int):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
                raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
            kwargs[key] = int(value)
        elif ftype in ("float", float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid section {section!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# cluster section


_GROUP_KEYS = (
    "model", "count", "size", "topology", "edges",
    "single_qubit_range", "two_qubit_range", "readout_range",
)


def _group_from_dict(data: Mapping, section: str) -> QpuGroupSpec:
    _require_mapping(data, section)
    _check_keys(data, _GROUP_KEYS, section)
    for key in ("model", "count", "size", "topology"):
        if key not in data:
            raise ConfigError(f"{section} is missing required key {key!r}")
    kwargs = dict(
        model=str(data["model"]),
        count=int(data["count"]),
        size=int(data["size"]),
        topology=str(data["topology"]),
    )
    if data.get("edges") is not None:
        kwargs["edges"] = tuple((int(a), int(b)) for a, b in data["edges"])
    for key in ("single_qubit_range", "two_qubit_range", "readout_range"):
        if key in data:
            lo, hi = data[key]
            kwargs[key] = (float(lo), float(hi))
    try:
        return QpuGroupSpec(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {section}: {exc}") from exc


def _cluster_from_dict(data: Mapping) -> tuple[ClusterSpec, DriftParams]:
    _require_mapping(data, "cluster")
    _check_keys(data, ("groups", "drift"), "cluster")
    drift = _build(DriftParams, data.get("drift", {}), "cluster.drift")
    groups_raw = data.get("groups")
    if groups_raw is None:
        return default_cluster_spec(), drift
    if not isinstance(groups_raw, Sequence) or not groups_raw:
        raise ConfigError("cluster.groups must be a nonempty list")
    groups = tuple(
        _group_from_dict(g, f"cluster.groups[{i}]") for i, g in enumerate(groups_raw)
    )
    return ClusterSpec(groups=groups), drift


def _nodes_from_list(data, section: str) -> tuple[ClassicalNodeSpec, ...]:
    if not isinstance(data, Sequence) or not data:
        raise ConfigError(f"{section} must be a nonempty list")
    return tuple(
        _build(ClassicalNodeSpec, node, f"{section}[{i}]") for i, node in enumerate(data)
    )


# ---------------------------------------------------------------------------
# top level

_SCHEDULER_KEYS = ("policy", "preference", "trigger_queue_limit", "trigger_interval", "nsga")
_SIMULATION_KEYS = (
    "duration", "arrival_profile", "warmup", "seed",
    "classical_nodes", "knit_kind", "oracle",
)


def sim_config_from_dict(data: Mapping) -> SimConfig:
    _require_mapping(data, "<config>")
    _check_keys(data, ("cluster", "workload", "scheduler", "estimator", "simulation"), "<config>")

    cluster, drift = _cluster_from_dict(data.get("cluster", {}))
    workload = _build(WorkloadParams, data.get("workload", {}), "workload")
    estimator = _build(EstimatorParams, data.get("estimator", {}), "estimator")

    sched = _require_mapping(data.get("scheduler", {}), "scheduler")
    _check_keys(sched, _SCHEDULER_KEYS, "scheduler")
    nsga = _build(NsgaParams, sched.get("nsga", {}), "scheduler.nsga")
    preference = parse_preference(sched.get("preference", "balanced"))

    sim = _require_mapping(data.get("simulation", {}), "simulation")
    _check_keys(sim, _SIMULATION_KEYS, "simulation")
    oracle = _build(OracleConstants, sim.get("oracle", {}), "simulation.oracle")
    nodes = (
        _nodes_from_list(sim["classical_nodes"], "simulation.classical_nodes")
        if "classical_nodes" in sim
        else DEFAULT_CLASSICAL_NODES
    )
    profile_raw = sim.get("arrival_profile", [[0.0, 1500.0]])
    if not isinstance(profile_raw, Sequence):
        raise ConfigError("simulation.arrival_profile must be a list of [hour, rate] pairs")
    profile = tuple((float(h), float(r)) for h, r in profile_raw)

    try:
        return SimConfig(
            cluster=cluster,
            duration=float(sim.get("duration", 3600.0)),
            arrival_profile=profile,
            trigger_queue_limit=int(sched.get("trigger_queue_limit", 100)),
            trigger_interval=float(sched.get("trigger_interval", 120.0)),
            preference=preference,
            policy=str(sched.get("policy", "pareto")),
            workload=workload,
            oracle=oracle,
            estimator=estimator,
            nsga=nsga,
            drift=drift,
            classical_nodes=nodes,
            knit_kind=str(sim.get("knit_kind", "CPU")),
            warmup=float(sim.get("warmup", 0.0)),
            seed=int(sim.get("seed", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return sim_config_from_dict(data)


def config_to_dict(cfg: SimConfig) -> dict:
    """Round-trip emission: load_config(write(config_to_dict(cfg))) == cfg."""

    def plain(obj) -> dict:
        return dataclasses.asdict(obj)

    groups = []
    for g in cfg.cluster.groups:
        d = plain(g)
        if d["edges"] is not None:
            d["edges"] = [list(e) for e in d["edges"]]
        d["single_qubit_range"] = list(d["single_qubit_range"])
        d["two_qubit_range"] = list(d["two_qubit_range"])
        d["readout_range"] = list(d["readout_range"])
        groups.append(d)
    return {
        "cluster": {"groups": groups, "drift": plain(cfg.drift)},
        "workload": plain(cfg.workload),
        "scheduler": {
            "policy": cfg.policy,
            "preference": list(cfg.preference),
            "trigger_queue_limit": cfg.trigger_queue_limit,
            "trigger_interval": cfg.trigger_interval,
            "nsga": plain(cfg.nsga),
        },
        "estimator": plain(cfg.estimator),
        "simulation": {
            "duration": cfg.duration,
            "arrival_profile": [list(e) for e in cfg.arrival_profile],
            "warmup": cfg.warmup,
            "seed": cfg.seed,
            "classical_nodes": [plain(n) for n in cfg.classical_nodes],
            "knit_kind": cfg.knit_kind,
            "oracle": plain(cfg.oracle),
        },
    }


# ---------------------------------------------------------------------------
# job batch serialization


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "width": circuit.width,
        "shots": circuit.shots,
        "gates": [{"kind": g.kind.value, "qubits": list(g.qubits)} for g in circuit.gates],
    }


def circuit_from_dict(data: Mapping) -> Circuit:
    _require_mapping(data, "circuit")
    _check_keys(data, ("width", "shots", "gates"), "circuit")
    try:
        gates = tuple(
            Gate(kind=GateKind(g["kind"]), qubits=tuple(int(q) for q in g["qubits"]))
            for g in data["gates"]
        )
        return Circuit(width=int(data["width"]), gates=gates, shots=int(data["shots"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid circuit: {exc}") from exc


def raw_job_to_dict(job: RawJob) -> dict:
    return {
        "id": job.id,
        "arrival_time": job.arrival_time,
        "cut_k": job.cut_k,
        "circuit": circuit_to_dict(job.circuit),
    }


def raw_job_from_dict(data: Mapping) -> RawJob:
    _require_mapping(data, "job")
    _check_keys(data, ("id", "arrival_time", "cut_k", "circuit"), "job")
    try:
        return RawJob(
            id=str(data["id"]),
            circuit=circuit_from_dict(data["circuit"]),
            arrival_time=float(data.get("arrival_time", 0.0)),
            cut_k=int(data.get("cut_k", 0)),
        )
    except KeyError as exc:
        raise ConfigError(f"job entry is missing {exc}") from exc


def write_batch_json(path, jobs: Sequence[RawJob], seed: int | None = None) -> None:
    payload = {"jobs": [raw_job_to_dict(j) for j in jobs]}
    if seed is not None:
        payload["seed"] = seed
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_batch_json(path) -> list[RawJob]:
    if not os.path.exists(path):
        raise ConfigError(f"batch file not found: {path}")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    _require_mapping(data, "batch")
    _check_keys(data, ("jobs", "seed"), "batch")
    jobs_raw = data.get("jobs")
    if not isinstance(jobs_raw, Sequence):
        raise ConfigError("batch file must hold a 'jobs' list")
    return [raw_job_from_dict(j) for j in jobs_raw]


# ---------------------------------------------------------------------------
# experiment sweeps

SWEEP_AXES = ("qpu_count", "load", "preference")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    base: SimConfig
    sweep_axis: str
    sweep_values: tuple
    repetitions: int

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ConfigError("sweep values must be nonempty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")


def experiment_spec_from_dict(data: Mapping) -> ExperimentSpec:
    _require_mapping(data, "<experiment>")
    _check_keys(data, ("name", "base", "sweep", "repetitions"), "<experiment>")
    sweep = _require_mapping(data.get("sweep", {}), "sweep")
    _check_keys(sweep, ("axis", "values"), "sweep")
    if "axis" not in sweep or "values" not in sweep:
        raise ConfigError("sweep needs 'axis' and 'values'")
    values = sweep["values"]
    if not isinstance(values, Sequence) or isinstance(values, str):
        raise ConfigError("sweep.values must be a list")
    return ExperimentSpec(
        name=str(data.get("name", "experiment")),
        base=sim_config_from_dict(data.get("base", {})),
        sweep_axis=str(sweep["axis"]),
        sweep_values=tuple(values),
        repetitions=int(data.get("repetitions", 1)),
    )


def load_experiment_spec(path) -> ExperimentSpec:
    if not os.path.exists(path):
        raise ConfigError(f"experiment spec not found: {path}")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return experiment_spec_from_dict(data)


def apply_sweep_point(base: SimConfig, axis: str, value) -> SimConfig:
    """One sweep point as a derived SimConfig."""
    if axis == "qpu_count":
        if len(base.cluster.groups) != 1:
            raise ConfigError("qpu_count sweeps need a single-group cluster")
        group = base.cluster.groups[0]
        n = int(value)
        if n < 1:
            raise ConfigError(f"qpu_count must be >= 1, got {value!r}")
        cluster = ClusterSpec(groups=(dataclasses.replace(group, count=n),))
        return dataclasses.replace(base, cluster=cluster)
    if axis == "load":
        rate = float(value)
        if rate <= 0:
            raise ConfigError(f"load must be > 0 jobs/hour, got {value!r}")
        return dataclasses.replace(base, arrival_profile=((0.0, rate),))
    if axis == "preference":
        return dataclasses.replace(base, preference=parse_preference(value))
    raise ConfigError(f"unknown sweep axis {axis!r}")

"""Command line entry point.

Subcommands cover the full pipeline: generate a job batch, train and
cross-validate the runtime model, produce resource plans for one
circuit, run a single scheduling cycle on a saved batch, run the full
simulation, and sweep one config axis across repetitions.

Exit codes: 0 success, 2 configuration or usage errors, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .config import (
    ExperimentSpec,
    apply_sweep_point,
    circuit_from_dict,
    config_to_dict,
    load_config,
    load_experiment_spec,
    parse_preference,
    read_batch_json,
    write_batch_json,
)
from .errors import ConfigError, QcschedError
from .estimator import (
    Accelerator,
    AcceleratorKind,
    fit_regression,
    generate_resource_plans,
    kfold_r2,
    model_to_dict,
    plan_to_dict,
    read_dataset_csv,
)
from .qpu import build_cluster, make_template_qpu
from .rng import substream
from .scheduler import (
    evaluate_objectives,
    fcfs_schedule,
    nsga2_optimize,
    preprocess,
    pseudo_weights,
    select_solution,
)
from .sim import (
    POLICY_FCFS,
    POLICY_PARETO,
    SimConfig,
    _Sim,
    build_estimator_context,
    export_report,
    make_training_dataset,
    make_workload,
    run_simulation,
)


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_effective_config(args) -> SimConfig:
    """Config file plus CLI overrides; overrides re-run validation."""
    cfg = load_config(args.config) if args.config else SimConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "policy", None) is not None:
        updates["policy"] = args.policy
    if getattr(args, "preference", None) is not None:
        updates["preference"] = parse_preference(args.preference)
    if not updates:
        return cfg
    try:
        return replace(cfg, **updates)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen_workload(args) -> int:
    cfg = _load_effective_config(args)
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    cluster = build_cluster(cfg.cluster, seed=cfg.seed)
    max_width = max(q.coupling.size for q in cluster)
    jobs = make_workload(cfg.seed, [0.0] * args.count, max_width, cfg.workload)
    write_batch_json(args.out, jobs, seed=cfg.seed)
    print(f"wrote {len(jobs)} jobs to {args.out}")
    return 0


def _cmd_train_model(args) -> int:
    cfg = _load_effective_config(args)
    if args.data is not None:
        if not os.path.exists(args.data):
            raise ConfigError(f"dataset file not found: {args.data}")
        dataset = read_dataset_csv(args.data)
    else:
        dataset = make_training_dataset(
            cfg.seed, cfg.estimator.training_samples, cfg.oracle, cfg.estimator.training_noise
        )
    model = fit_regression(dataset, degree=cfg.estimator.degree)
    r2 = kfold_r2(dataset, degree=cfg.estimator.degree, k_folds=args.folds, seed=cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "model.json"), model_to_dict(model))
    _write_json(
        os.path.join(args.out, "kfold.json"),
        {
            "degree": cfg.estimator.degree,
            "k_folds": args.folds,
            "samples": len(dataset),
            "r2": r2,
        },
    )
    print(f"trained on {len(dataset)} samples, {args.folds}-fold r2={r2:.4f}")
    return 0


def _parse_k_list(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--k must be a comma list of integers, got {text!r}") from exc


def _cmd_estimate(args) -> int:
    cfg = _load_effective_config(args)
    if not os.path.exists(args.circuit):
        raise ConfigError(f"circuit file not found: {args.circuit}")
    with open(args.circuit) as fh:
        try:
            circuit = circuit_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.circuit}: {exc}") from exc

    cluster = build_cluster(cfg.cluster, seed=cfg.seed)
    by_model: dict[str, list] = {}
    for q in cluster:
        by_model.setdefault(q.model, []).append(q)
    templates = [make_template_qpu(members) for _, members in sorted(by_model.items())]
    accelerators = [
        Accelerator(id=n.id, kind=AcceleratorKind(n.kind), speed=n.speed)
        for n in cfg.classical_nodes
    ]
    ctx = build_estimator_context(cfg.seed, cfg.estimator, cfg.oracle)
    plans = generate_resource_plans(
        circuit,
        templates,
        accelerators,
        ctx,
        k_set=_parse_k_list(args.k),
        plan_count=args.plans,
    )
    _write_json(args.out, {"plans": [plan_to_dict(p) for p in plans]})
    print(f"wrote {len(plans)} plans to {args.out}")
    return 0


def _cmd_schedule(args) -> int:
    cfg = _load_effective_config(args)
    jobs = read_batch_json(args.batch)
    if not jobs:
        raise ConfigError(f"batch file {args.batch} holds no jobs")

    cluster = build_cluster(cfg.cluster, seed=cfg.seed)
    states = list(cluster)
    ctx = build_estimator_context(cfg.seed, cfg.estimator, cfg.oracle)
    pre = preprocess(jobs, states, ctx)
    wait = {q.id: 0.0 for q in states}

    payload: dict = {
        "policy": cfg.policy,
        "preference": list(cfg.preference),
        "cycle": args.cycle,
        "seed": cfg.seed,
        "rejected": [r.id for r in pre.rejected],
        "front": [],
        "selected": None,
    }
    if pre.accepted:
        if cfg.policy == POLICY_PARETO:
            # same per-cycle stream derivation the simulator uses, so a saved
            # first batch reproduces the simulator's cycle-0 front exactly
            cycle_seed = int(substream(cfg.seed, f"nsga:{args.cycle}").integers(0, 2**31 - 1))
            params = replace(cfg.nsga, seed=cycle_seed)
            front = nsga2_optimize(pre.accepted, states, params, wait)
            chosen = select_solution(front, cfg.preference)
            weights = pseudo_weights(front)
            payload["front"] = [
                {
                    "assignment": list(sched.assignment),
                    "f1": pt.f1,
                    "f2": pt.f2,
                    "pseudo_weights": [w[0], w[1]],
                }
                for (sched, pt), w in zip(front.entries, weights)
            ]
        else:
            chosen = fcfs_schedule(pre.accepted, states)
            pt = evaluate_objectives(chosen, pre.accepted, wait)
            payload["front"] = [
                {
                    "assignment": list(chosen.assignment),
                    "f1": pt.f1,
                    "f2": pt.f2,
                    "pseudo_weights": [0.5, 0.5],
                }
            ]
        chosen_pt = evaluate_objectives(chosen, pre.accepted, wait)
        payload["selected"] = {
            "assignment": list(chosen.assignment),
            "f1": chosen_pt.f1,
            "f2": chosen_pt.f2,
            "jobs": [
                {
                    "job": job.id,
                    "qpu": qid,
                    "est_time": job.per_qpu[qid].t,
                    "est_fidelity": job.per_qpu[qid].f,
                }
                for job, qid in zip(pre.accepted, chosen.assignment)
            ],
        }
    _write_json(args.out, payload)
    print(
        f"scheduled {len(pre.accepted)} jobs ({len(pre.rejected)} rejected), "
        f"front size {len(payload['front'])}, wrote {args.out}"
    )
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_effective_config(args)
    sim = _Sim(cfg)
    report = sim.run()
    os.makedirs(args.out, exist_ok=True)
    export_report(args.out, report)
    _write_json(os.path.join(args.out, "resolved_config.json"), config_to_dict(cfg))
    write_batch_json(
        os.path.join(args.out, "first_batch.json"), sim.first_batch or [], seed=cfg.seed
    )
    c = report.counts
    print(
        f"completed={c['completed']} rejected={c['rejected']} "
        f"mean_jct={report.aggregates['mean_jct']:.2f}s out={args.out}"
    )
    return 0


EXPERIMENT_COLUMNS = (
    "name", "axis", "value", "seed",
    "jobs_measured", "completed", "rejected",
    "mean_jct", "p95_jct", "mean_true_fidelity", "mean_est_fidelity",
    "mean_utilization", "load_imbalance",
)


def _value_label(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def _experiment_row(task) -> dict:
    name, axis, label, cfg = task
    report = run_simulation(cfg)
    agg = report.aggregates
    row = {
        "name": name,
        "axis": axis,
        "value": label,
        "seed": cfg.seed,
        "completed": report.counts["completed"],
        "rejected": report.counts["rejected"],
    }
    for key in (
        "jobs_measured", "mean_jct", "p95_jct", "mean_true_fidelity",
        "mean_est_fidelity", "mean_utilization", "load_imbalance",
    ):
        row[key] = agg[key]
    return row


def _experiment_tasks(spec: ExperimentSpec) -> list[tuple]:
    tasks = []
    for value in spec.sweep_values:
        point = apply_sweep_point(spec.base, spec.sweep_axis, value)
        for rep in range(spec.repetitions):
            cfg = replace(point, seed=spec.base.seed + rep)
            tasks.append((spec.name, spec.sweep_axis, _value_label(value), cfg))
    return tasks


def _cmd_experiment(args) -> int:
    spec = load_experiment_spec(args.spec)
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    tasks = _experiment_tasks(spec)
    if args.jobs == 1:
        rows = [_experiment_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_experiment_row, tasks))

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "experiment.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPERIMENT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    repr(float(row[col])) if isinstance(row[col], float) else str(row[col])
                    for col in EXPERIMENT_COLUMNS
                ]
            )
    print(f"wrote {len(rows)} rows to {path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcsched",
        description="Hybrid quantum job scheduling: estimation, Pareto search, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default: str):
        p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default=out_default, help=f"output path (default {out_default})")

    p = sub.add_parser("gen-workload", help="generate a batch of jobs with arrival time 0")
    common(p, "workload.json")
    p.add_argument("--count", type=int, default=100, help="number of jobs (default 100)")
    p.set_defaults(func=_cmd_gen_workload)

    p = sub.add_parser("train-model", help="fit the runtime model and cross-validate it")
    common(p, ".")
    p.add_argument("--data", help="feature CSV to train on instead of synthetic data")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds (default 5)")
    p.set_defaults(func=_cmd_train_model)

    p = sub.add_parser("estimate", help="resource plans for one circuit JSON")
    common(p, "plans.json")
    p.add_argument("--circuit", required=True, help="circuit JSON file")
    p.add_argument("--k", default="", help="comma list of extra cut counts to consider")
    p.add_argument("--plans", type=int, default=3, help="plans to emit (default 3)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("schedule", help="run one scheduling cycle on a saved batch")
    common(p, "schedule.json")
    p.add_argument("--batch", required=True, help="batch JSON from gen-workload")
    p.add_argument("--policy", choices=(POLICY_PARETO, POLICY_FCFS), help="override policy")
    p.add_argument("--preference", help="fidelity|jct|balanced or p1,p2")
    p.add_argument("--cycle", type=int, default=0, help="cycle index for the search stream")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("simulate", help="run the full event-loop simulation")
    common(p, "out")
    p.add_argument("--policy", choices=(POLICY_PARETO, POLICY_FCFS), help="override policy")
    p.add_argument("--preference", help="fidelity|jct|balanced or p1,p2")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="sweep one axis of an experiment spec")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default="out", help="output directory (default out)")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QcschedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

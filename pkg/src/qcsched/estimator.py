"""Resource estimation: analytic fidelity, polynomial execution-time
regression, knitting cost model, and Pareto resource-plan generation.

Fidelity is the product of per-operation success probabilities (1 - eps)
read from the target QPU's calibration tables.  Execution time comes from
a polynomial regression over four transpiled-circuit features.  Cut plans
charge an exponential classical knitting cost against an accelerator.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import combinations_with_replacement
from typing import Iterable, Optional, Sequence

import numpy as np

from .circuits import Circuit, CutSolution, GateKind, cut_circuit
from .errors import (
    CapacityError,
    CutInfeasibleError,
    NoFeasiblePlanError,
    RegressionFitError,
    TopologyError,
)
from .qpu import CalibrationData, CouplingMap, TemplateQpu
from .rng import substream
from .transpile import TranspiledCircuit, transpile

DEFAULT_C_KNIT = 1e6
DEFAULT_KNIT_BASE = 6.0
RIDGE_LAMBDA = 1e-8
TIME_FLOOR_S = 1e-3
N_FEATURES = 4


@dataclass(frozen=True)
class FeatureVector:
    """Per-circuit regression inputs, measured on the transpiled form."""

    width: int
    shots: int
    depth: int
    two_qubit_count: int

    def __post_init__(self):
        for name in ("width", "shots", "depth", "two_qubit_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.width, self.shots, self.depth, self.two_qubit_count],
            dtype=np.float64,
        )


@dataclass(frozen=True, eq=False)
class RegressionModel:
    degree: int
    coefficients: np.ndarray
    feature_means: np.ndarray
    feature_scales: np.ndarray
    train_r2: float

    def __post_init__(self):
        n_terms = len(monomial_exponents(N_FEATURES, self.degree))
        if len(self.coefficients) != n_terms:
            raise ValueError(
                f"expected {n_terms} coefficients for degree {self.degree}, "
                f"got {len(self.coefficients)}"
            )
        if np.any(self.feature_scales <= 0.0):
            raise ValueError("feature_scales must be positive")


class AcceleratorKind(str, Enum):
    CPU = "CPU"
    GPU = "GPU"
    TPU = "TPU"
    FPGA = "FPGA"


@dataclass(frozen=True)
class Accelerator:
    id: str
    kind: AcceleratorKind
    speed: float  # FLOPs per second

    def __post_init__(self):
        if self.speed <= 0.0:
            raise ValueError(f"speed must be positive, got {self.speed}")


@dataclass(frozen=True)
class ResourcePlan:
    """One (cut level, target model, accelerator) evaluation."""

    k: int
    target_model: str
    accelerator: Optional[str]
    est_fidelity: float
    est_quantum_time: float
    est_classical_time: float
    est_total_time: float

    def __post_init__(self):
        if not (0.0 <= self.est_fidelity <= 1.0):
            raise ValueError(f"fidelity out of range: {self.est_fidelity}")
        if abs(self.est_total_time - (self.est_quantum_time + self.est_classical_time)) > 1e-9:
            raise ValueError("est_total_time must equal quantum + classical time")


@dataclass(frozen=True)
class EstimatorContext:
    """Fitted model plus cost-model constants shared by plan evaluation."""

    model: RegressionModel
    c_knit: float = DEFAULT_C_KNIT
    knit_base: float = DEFAULT_KNIT_BASE
    fragment_time_mode: str = "sum"  # fragments run sequentially by default

    def __post_init__(self):
        if self.c_knit <= 0.0:
            raise ValueError("c_knit must be positive")
        if not (6.0 <= self.knit_base <= 8.0):
            raise ValueError(f"knit_base must lie in [6, 8], got {self.knit_base}")
        if self.fragment_time_mode not in ("sum", "parallel"):
            raise ValueError(f"unknown fragment_time_mode {self.fragment_time_mode!r}")


def features_from_transpiled(tc: TranspiledCircuit) -> FeatureVector:
    return FeatureVector(
        width=tc.width,
        shots=tc.shots,
        depth=tc.depth,
        two_qubit_count=tc.two_qubit_count,
    )


def estimate_fidelity(
    tc: TranspiledCircuit, cal: CalibrationData, coupling: CouplingMap
) -> float:
    """Product of (1 - eps) over every physical operation.

    Two-qubit errors are looked up per coupling edge, so `tc` must target
    the QPU that owns `cal` and `coupling`.
    """
    single = cal.single_qubit_error
    two = cal.two_qubit_error
    readout = cal.readout_error
    edge_index = coupling.edge_index
    f = 1.0
    for op in tc.ops:
        if op.kind is GateKind.TWO_QUBIT:
            a, b = op.phys_qubits
            key = (a, b) if a < b else (b, a)
            idx = edge_index.get(key)
            if idx is None:
                raise TopologyError(f"two-qubit op on non-edge {key}")
            f *= 1.0 - two[idx]
        elif op.kind is GateKind.ONE_QUBIT:
            f *= 1.0 - single[op.phys_qubits[0]]
        else:
            f *= 1.0 - readout[op.phys_qubits[0]]
    return float(f)


def min_fragment_fidelity(
    cut: CutSolution, per_fragment_fidelities: Sequence[float]
) -> float:
    if len(per_fragment_fidelities) == 0:
        raise ValueError("per_fragment_fidelities must be nonempty")
    if len(per_fragment_fidelities) != len(cut.fragments):
        raise ValueError(
            f"{len(per_fragment_fidelities)} fidelities for "
            f"{len(cut.fragments)} fragments"
        )
    for f in per_fragment_fidelities:
        if not (0.0 <= f <= 1.0):
            raise ValueError(f"fidelity out of range: {f}")
    return float(min(per_fragment_fidelities))


def monomial_exponents(n_features: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials with total degree <= degree.

    Ordered by total degree then lexicographically, intercept first; this
    order is the coefficient layout contract for RegressionModel.
    """
    terms = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(n_features), total):
            exp = [0] * n_features
            for i in combo:
                exp[i] += 1
            terms.append(tuple(exp))
    return terms


def _design_matrix(z: np.ndarray, degree: int) -> np.ndarray:
    cols = []
    for exp in monomial_exponents(z.shape[1], degree):
        col = np.ones(z.shape[0])
        for j, e in enumerate(exp):
            if e:
                col = col * z[:, j] ** e
        cols.append(col)
    return np.column_stack(cols)


def r2_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot, reported raw.

    A constant target scores 1.0 when matched exactly and 0.0 otherwise.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        # constant target: score 1.0 when matched up to damping-level noise
        return 1.0 if ss_res <= 1e-12 * max(float(np.sum(y_true**2)), 1.0) else 0.0
    return 1.0 - ss_res / ss_tot


Dataset = Sequence[tuple[FeatureVector, float]]


def _split_dataset(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([fv.as_array() for fv, _ in dataset])
    y = np.array([t for _, t in dataset], dtype=np.float64)
    return x, y


def fit_regression(dataset: Dataset, degree: int = 2) -> RegressionModel:
    """Least squares over z-scored monomial features, Tikhonov-damped."""
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    n_terms = len(monomial_exponents(N_FEATURES, degree))
    if len(dataset) <= n_terms:
        raise ValueError(
            f"dataset size {len(dataset)} must exceed term count {n_terms}"
        )
    x_raw, y = _split_dataset(dataset)
    means = x_raw.mean(axis=0)
    scales = x_raw.std(axis=0)
    scales = np.where(scales <= 0.0, 1.0, scales)
    design = _design_matrix((x_raw - means) / scales, degree)
    gram = design.T @ design + RIDGE_LAMBDA * np.eye(n_terms)
    try:
        coef = np.linalg.solve(gram, design.T @ y)
    except np.linalg.LinAlgError as exc:
        raise RegressionFitError(f"normal equations unsolvable: {exc}") from exc
    if not np.all(np.isfinite(coef)):
        raise RegressionFitError("fit produced non-finite coefficients")
    train_r2 = r2_score(y, design @ coef)
    return RegressionModel(
        degree=degree,
        coefficients=coef,
        feature_means=means,
        feature_scales=scales,
        train_r2=train_r2,
    )


def _predict_batch(model: RegressionModel, x_raw: np.ndarray) -> np.ndarray:
    z = (x_raw - model.feature_means) / model.feature_scales
    pred = _design_matrix(z, model.degree) @ model.coefficients
    return np.maximum(pred, TIME_FLOOR_S)


def estimate_execution_time(model: RegressionModel, f: FeatureVector) -> float:
    """Predicted seconds, floored at 1 ms."""
    return float(_predict_batch(model, f.as_array()[None, :])[0])


def kfold_r2(dataset: Dataset, degree: int, k_folds: int, seed: int) -> float:
    """Mean held-out R^2 across k deterministic folds (raw, not clamped)."""
    if k_folds < 2:
        raise ValueError(f"k_folds must be >= 2, got {k_folds}")
    n = len(dataset)
    if n < k_folds:
        raise ValueError(f"dataset size {n} smaller than k_folds {k_folds}")
    x_raw, y = _split_dataset(dataset)
    rng = substream(seed, "kfold")
    perm = rng.permutation(n)
    folds = np.array_split(perm, k_folds)
    scores = []
    for i, hold in enumerate(folds):
        train_idx = np.concatenate([folds[j] for j in range(k_folds) if j != i])
        model = fit_regression([dataset[t] for t in train_idx], degree)
        pred = _predict_batch(model, x_raw[hold])
        scores.append(r2_score(y[hold], pred))
    return float(np.mean(scores))


def knitting_flops(
    k: int,
    fragments: int,
    base: float = DEFAULT_KNIT_BASE,
    c_knit: float = DEFAULT_C_KNIT,
) -> float:
    """Classical reconstruction cost: c_knit * base^k per fragment."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if fragments < 1:
        raise ValueError(f"fragments must be >= 1, got {fragments}")
    if not (6.0 <= base <= 8.0):
        raise ValueError(f"base must lie in [6, 8], got {base}")
    return c_knit * base**k * fragments


def classical_time(flops: float, acc: Accelerator) -> float:
    if flops < 0.0:
        raise ValueError(f"flops must be >= 0, got {flops}")
    return flops / acc.speed


def evaluate_plan(
    circuit: Circuit,
    k: int,
    template: TemplateQpu,
    accelerator: Optional[Accelerator],
    ctx: EstimatorContext,
) -> ResourcePlan:
    """Cost out one (k, template, accelerator) combination.

    Raises CutInfeasibleError or CapacityError when the combination cannot
    host the circuit; callers enumerate combinations and skip those.
    """
    if k == 0:
        transpiled = [transpile(circuit, template.coupling, template.model)]
        achieved = 0
    else:
        cut = cut_circuit(circuit, k_max=k)
        transpiled = [
            transpile(frag, template.coupling, template.model)
            for frag in cut.fragments
        ]
        achieved = cut.achieved_cuts
    fidelity = min(
        estimate_fidelity(tc, template.calibration, template.coupling)
        for tc in transpiled
    )
    frag_times = [
        estimate_execution_time(ctx.model, features_from_transpiled(tc))
        for tc in transpiled
    ]
    quantum = sum(frag_times) if ctx.fragment_time_mode == "sum" else max(frag_times)
    if accelerator is None:
        classical = 0.0
    else:
        flops = knitting_flops(achieved, len(transpiled), ctx.knit_base, ctx.c_knit)
        classical = classical_time(flops, accelerator)
    return ResourcePlan(
        k=achieved,
        target_model=template.model,
        accelerator=accelerator.id if accelerator is not None else None,
        est_fidelity=fidelity,
        est_quantum_time=quantum,
        est_classical_time=classical,
        est_total_time=quantum + classical,
    )


def _dominates(a: ResourcePlan, b: ResourcePlan) -> bool:
    return (
        a.est_fidelity >= b.est_fidelity
        and a.est_total_time <= b.est_total_time
        and (a.est_fidelity > b.est_fidelity or a.est_total_time < b.est_total_time)
    )


def pareto_filter_plans(plans: Sequence[ResourcePlan]) -> list[ResourcePlan]:
    """Drop dominated plans and exact objective duplicates, keeping the
    first occurrence in the deterministic sort order."""
    ordered = sorted(
        plans,
        key=lambda p: (
            p.est_total_time,
            -p.est_fidelity,
            p.k,
            p.target_model,
            p.accelerator or "",
        ),
    )
    kept: list[ResourcePlan] = []
    seen: set[tuple[float, float]] = set()
    for cand in ordered:
        objs = (cand.est_fidelity, cand.est_total_time)
        if objs in seen:
            continue
        if any(_dominates(other, cand) for other in ordered if other is not cand):
            continue
        seen.add(objs)
        kept.append(cand)
    return kept


def _spread_select(front: list[ResourcePlan], plan_count: int) -> list[ResourcePlan]:
    """Endpoints first, then repeatedly fill the widest gap at its midpoint.

    `front` must be sorted by total time ascending (fidelity then ascends
    too, since dominated plans are gone)."""
    n = len(front)
    if n <= plan_count:
        return list(front)
    if plan_count == 1:
        return [front[0]]
    times = np.array([p.est_total_time for p in front])
    fids = np.array([p.est_fidelity for p in front])

    def norm(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        return (v - v.min()) / span if span > 0 else np.zeros_like(v)

    pts = np.column_stack([norm(times), norm(fids)])
    selected = [0, n - 1]
    while len(selected) < plan_count:
        selected.sort()
        best_gap = -1.0
        best_idx = -1
        for a, b in zip(selected, selected[1:]):
            if b - a <= 1:
                continue
            gap = float(np.hypot(*(pts[b] - pts[a])))
            if gap > best_gap:
                mid = (pts[a] + pts[b]) / 2.0
                inner = range(a + 1, b)
                best_inner = min(
                    inner, key=lambda i: (float(np.hypot(*(pts[i] - mid))), i)
                )
                best_gap = gap
                best_idx = best_inner
        if best_idx < 0:
            break  # every gap already saturated
        selected.append(best_idx)
    return [front[i] for i in sorted(selected)]


def generate_resource_plans(
    circuit: Circuit,
    templates: Sequence[TemplateQpu],
    accelerators: Sequence[Accelerator],
    ctx: EstimatorContext,
    k_set: Iterable[int] = (),
    plan_count: int = 3,
    workers: int = 1,
) -> list[ResourcePlan]:
    """Evaluate every (k, template, accelerator) combination, keep the
    Pareto front, and return up to plan_count plans spread across it."""
    if not templates:
        raise ValueError("templates must be nonempty")
    if plan_count < 1:
        raise ValueError(f"plan_count must be >= 1, got {plan_count}")
    ks = sorted({0} | {int(k) for k in k_set})
    if any(k < 0 for k in ks):
        raise ValueError("cut counts must be >= 0")
    accs: list[Optional[Accelerator]] = list(accelerators) if accelerators else [None]
    combos = []
    for k in ks:
        if k > 0 and not accelerators:
            continue  # cut plans need an accelerator to knit on
        for template in templates:
            for acc in accs:
                combos.append((k, template, acc))

    def try_one(combo) -> Optional[ResourcePlan]:
        k, template, acc = combo
        try:
            return evaluate_plan(circuit, k, template, acc, ctx)
        except (CutInfeasibleError, CapacityError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(try_one, combos))
    else:
        results = [try_one(c) for c in combos]
    plans = [p for p in results if p is not None]
    if not plans:
        raise NoFeasiblePlanError(
            f"no (k, template) combination hosts a width-{circuit.width} circuit"
        )
    front = pareto_filter_plans(plans)
    return _spread_select(front, plan_count)


# ---------------------------------------------------------------------------
# serialization

DATASET_COLUMNS = ("width", "shots", "depth", "two_qubit_count", "seconds")


def write_dataset_csv(path, dataset: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_COLUMNS)
        for fv, seconds in dataset:
            writer.writerow(
                [fv.width, fv.shots, fv.depth, fv.two_qubit_count, repr(float(seconds))]
            )


def read_dataset_csv(path) -> list[tuple[FeatureVector, float]]:
    dataset = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(DATASET_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"dataset CSV missing columns: {sorted(missing)}")
        for row in reader:
            fv = FeatureVector(
                width=int(row["width"]),
                shots=int(row["shots"]),
                depth=int(row["depth"]),
                two_qubit_count=int(row["two_qubit_count"]),
            )
            dataset.append((fv, float(row["seconds"])))
    return dataset


def model_to_dict(model: RegressionModel) -> dict:
    return {
        "degree": model.degree,
        "coefficients": [float(c) for c in model.coefficients],
        "feature_means": [float(m) for m in model.feature_means],
        "feature_scales": [float(s) for s in model.feature_scales],
        "train_r2": float(model.train_r2),
    }


def model_from_dict(data: dict) -> RegressionModel:
    return RegressionModel(
        degree=int(data["degree"]),
        coefficients=np.asarray(data["coefficients"], dtype=np.float64),
        feature_means=np.asarray(data["feature_means"], dtype=np.float64),
        feature_scales=np.asarray(data["feature_scales"], dtype=np.float64),
        train_r2=float(data["train_r2"]),
    )


def model_to_json(model: RegressionModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def model_from_json(text: str) -> RegressionModel:
    return model_from_dict(json.loads(text))


def plan_to_dict(plan: ResourcePlan) -> dict:
    return {
        "k": plan.k,
        "target_model": plan.target_model,
        "accelerator": plan.accelerator,
        "est_fidelity": plan.est_fidelity,
        "est_quantum_time": plan.est_quantum_time,
        "est_classical_time": plan.est_classical_time,
        "est_total_time": plan.est_total_time,
    }

"""Estimator tests: fidelity product vs log-space oracle, regression fit
quality on formula-generated data, knitting arithmetic, and plan fronts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcsched.circuits import (
    Gate,
    GateKind,
    Circuit,
    cut_circuit,
    generate_clustered_circuit,
    generate_random_circuit,
)
from qcsched.errors import NoFeasiblePlanError, TopologyError
from qcsched.estimator import (
    _spread_select,
    Accelerator,
    AcceleratorKind,
    EstimatorContext,
    FeatureVector,
    ResourcePlan,
    classical_time,
    estimate_execution_time,
    estimate_fidelity,
    evaluate_plan,
    features_from_transpiled,
    fit_regression,
    generate_resource_plans,
    kfold_r2,
    knitting_flops,
    min_fragment_fidelity,
    model_from_json,
    model_to_json,
    monomial_exponents,
    pareto_filter_plans,
    r2_score,
    read_dataset_csv,
    write_dataset_csv,
)
from qcsched.qpu import (
    READOUT_RANGE,
    SINGLE_QUBIT_RANGE,
    TWO_QUBIT_RANGE,
    CalibrationData,
    TemplateQpu,
    heavy_hex_map,
    line_map,
)
from qcsched.transpile import PhysicalOp, TranspiledCircuit, transpile

# ---------------------------------------------------------------------------
# oracles

# Hardware timing constants mirrored from the simulator's ground-truth
# cost model; the regression must recover this formula from samples.
T_LAYER_S = 300e-9
T_READOUT_S = 4e-6
T_OVERHEAD_S = 2.0


def oracle_seconds(shots: int, depth: int) -> float:
    """Closed-form single-fragment execution time, no noise."""
    return shots * (depth * T_LAYER_S + T_READOUT_S) + T_OVERHEAD_S


def oracle_log_fidelity(tc, cal, coupling) -> float:
    """Log-domain recomputation: exp(sum of ln(1 - eps)) over ops."""
    total = 0.0
    for op in tc.ops:
        if op.kind is GateKind.TWO_QUBIT:
            a, b = op.phys_qubits
            idx = coupling.edge_index[(min(a, b), max(a, b))]
            eps = cal.two_qubit_error[idx]
        elif op.kind is GateKind.ONE_QUBIT:
            eps = cal.single_qubit_error[op.phys_qubits[0]]
        else:
            eps = cal.readout_error[op.phys_qubits[0]]
        total += math.log(1.0 - eps)
    return math.exp(total)


def random_calibration(coupling, seed: int) -> CalibrationData:
    rng = np.random.default_rng(seed)
    return CalibrationData(
        single_qubit_error=rng.uniform(*SINGLE_QUBIT_RANGE, coupling.size),
        two_qubit_error=rng.uniform(*TWO_QUBIT_RANGE, len(coupling.edges)),
        readout_error=rng.uniform(*READOUT_RANGE, coupling.size),
        epoch=0,
    )


def make_template(coupling, seed: int, model: str = "tpl") -> TemplateQpu:
    return TemplateQpu(
        model=model, coupling=coupling, calibration=random_calibration(coupling, seed)
    )


def sample_features(rng: np.random.Generator) -> FeatureVector:
    shots = int(round(10 ** rng.uniform(2, 5)))
    depth = int(rng.integers(1, 1001))
    width = int(rng.integers(2, 28))
    two_q = int(rng.integers(0, width * depth // 2 + 1))
    return FeatureVector(width=width, shots=shots, depth=depth, two_qubit_count=two_q)


def oracle_dataset(n: int, seed: int, noise: float = 0.01):
    """Features drawn wide, targets from the closed-form time oracle with
    multiplicative lognormal noise."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        fv = sample_features(rng)
        t = oracle_seconds(fv.shots, fv.depth)
        if noise > 0.0:
            t *= math.exp(rng.normal(0.0, noise))
        out.append((fv, t))
    return out


# ---------------------------------------------------------------------------
# fidelity


def test_fidelity_noiseless_is_one():
    coupling = line_map(3)
    cal = CalibrationData(
        single_qubit_error=np.zeros(3),
        two_qubit_error=np.zeros(2),
        readout_error=np.zeros(3),
        epoch=0,
    )
    tc = TranspiledCircuit(
        target="t",
        ops=(
            PhysicalOp(GateKind.ONE_QUBIT, (0,)),
            PhysicalOp(GateKind.TWO_QUBIT, (0, 1)),
            PhysicalOp(GateKind.MEASURE, (0,)),
        ),
        layout={0: 0, 1: 1},
        swap_count=0,
        width=2,
        shots=100,
    )
    assert estimate_fidelity(tc, cal, coupling) == 1.0


def test_fidelity_two_factor_product():
    coupling = line_map(2)
    cal = CalibrationData(
        single_qubit_error=np.zeros(2),
        two_qubit_error=np.array([0.02]),
        readout_error=np.array([0.01, 0.0]),
        epoch=0,
    )
    tc = TranspiledCircuit(
        target="t",
        ops=(
            PhysicalOp(GateKind.TWO_QUBIT, (0, 1)),
            PhysicalOp(GateKind.MEASURE, (0,)),
        ),
        layout={0: 0, 1: 1},
        swap_count=0,
        width=2,
        shots=100,
    )
    assert estimate_fidelity(tc, cal, coupling) == pytest.approx(
        0.98 * 0.99, abs=1e-15
    )


def test_fidelity_matches_log_oracle_on_random_circuits():
    coupling = heavy_hex_map(27)
    for seed in range(100):
        cal = random_calibration(coupling, 9000 + seed)
        rng = np.random.default_rng(seed)
        circ = generate_random_circuit(
            seed=seed,
            width=int(rng.integers(2, 28)),
            target_depth=int(rng.integers(2, 40)),
            two_qubit_fraction=0.3,
            shots=1000,
        )
        tc = transpile(circ, coupling, "t")
        got = estimate_fidelity(tc, cal, coupling)
        want = oracle_log_fidelity(tc, cal, coupling)
        assert got == pytest.approx(want, abs=1e-9)
        assert 0.0 < got <= 1.0


def test_fidelity_strictly_decreases_when_op_added():
    coupling = line_map(2)
    cal = CalibrationData(
        single_qubit_error=np.array([1e-3, 1e-3]),
        two_qubit_error=np.array([0.02]),
        readout_error=np.array([0.01, 0.01]),
        epoch=0,
    )
    base_ops = (PhysicalOp(GateKind.TWO_QUBIT, (0, 1)),)
    tc1 = TranspiledCircuit("t", base_ops, {0: 0, 1: 1}, 0, 2, 10)
    tc2 = TranspiledCircuit(
        "t", base_ops + (PhysicalOp(GateKind.ONE_QUBIT, (0,)),), {0: 0, 1: 1}, 0, 2, 10
    )
    assert estimate_fidelity(tc2, cal, coupling) < estimate_fidelity(tc1, cal, coupling)


def test_fidelity_monotone_in_calibration_errors():
    coupling = heavy_hex_map(16)
    for seed in range(20):
        cal = random_calibration(coupling, seed)
        worse = CalibrationData(
            single_qubit_error=np.clip(cal.single_qubit_error * 1.5, 0.0, 0.99),
            two_qubit_error=np.clip(cal.two_qubit_error * 1.5, 0.0, 0.99),
            readout_error=np.clip(cal.readout_error * 1.5, 0.0, 0.99),
            epoch=1,
        )
        circ = generate_random_circuit(
            seed=seed, width=10, target_depth=20, two_qubit_fraction=0.3, shots=100
        )
        tc = transpile(circ, coupling, "t")
        assert estimate_fidelity(tc, worse, coupling) <= estimate_fidelity(
            tc, cal, coupling
        )


def test_fidelity_non_edge_raises():
    coupling = line_map(3)  # (0,2) is not an edge
    cal = random_calibration(coupling, 1)
    tc = TranspiledCircuit(
        "t", (PhysicalOp(GateKind.TWO_QUBIT, (0, 2)),), {0: 0, 1: 2}, 0, 2, 10
    )
    with pytest.raises(TopologyError):
        estimate_fidelity(tc, cal, coupling)


def test_min_fragment_fidelity():
    circ = generate_clustered_circuit(
        seed=3, width=10, target_depth=12, two_qubit_fraction=0.3, shots=100, crossings=2
    )
    cut = cut_circuit(circ, k_max=3)
    assert min_fragment_fidelity(cut, [0.9] * len(cut.fragments)) == 0.9
    assert min_fragment_fidelity(cut, [0.95, 0.80][: len(cut.fragments)]) == pytest.approx(
        min([0.95, 0.80][: len(cut.fragments)])
    )
    with pytest.raises(ValueError):
        min_fragment_fidelity(cut, [])
    with pytest.raises(ValueError):
        min_fragment_fidelity(cut, [0.5] * (len(cut.fragments) + 1))


def test_min_fragment_fidelity_recomputes_per_fragment():
    coupling = heavy_hex_map(16)
    template = make_template(coupling, 77)
    circ = generate_clustered_circuit(
        seed=11, width=12, target_depth=15, two_qubit_fraction=0.3, shots=500, crossings=2
    )
    cut = cut_circuit(circ, k_max=3)
    fids = [
        estimate_fidelity(
            transpile(frag, coupling, "t"), template.calibration, coupling
        )
        for frag in cut.fragments
    ]
    assert min_fragment_fidelity(cut, fids) == min(fids)


# ---------------------------------------------------------------------------
# regression


def test_monomial_term_counts():
    assert len(monomial_exponents(4, 1)) == 5
    assert len(monomial_exponents(4, 2)) == 15
    assert len(monomial_exponents(4, 3)) == 35
    assert monomial_exponents(4, 2)[0] == (0, 0, 0, 0)  # intercept first


def test_fit_recovers_realizable_degree2_target():
    rng = np.random.default_rng(42)
    dataset = []
    for _ in range(120):
        fv = sample_features(rng)
        w, s, d, q = fv.width, fv.shots, fv.depth, fv.two_qubit_count
        y = 3.0 + 2.0 * w + 0.5 * d + 1e-4 * s + 1e-6 * s * d + 0.03 * q
        dataset.append((fv, y))
    model = fit_regression(dataset, degree=2)
    assert model.train_r2 >= 0.999999
    for fv, y in dataset[:20]:
        assert estimate_execution_time(model, fv) == pytest.approx(y, rel=1e-6)


def test_fit_constant_target():
    rng = np.random.default_rng(7)
    dataset = [(sample_features(rng), 5.0) for _ in range(60)]
    model = fit_regression(dataset, degree=2)
    assert np.all(np.abs(model.coefficients[1:]) < 1e-6)
    assert model.train_r2 == 1.0
    probe = sample_features(np.random.default_rng(99))
    assert estimate_execution_time(model, probe) == pytest.approx(5.0, abs=1e-6)


def test_fit_rejects_small_dataset_and_bad_degree():
    rng = np.random.default_rng(1)
    small = [(sample_features(rng), 1.0) for _ in range(15)]  # needs > 15
    with pytest.raises(ValueError):
        fit_regression(small, degree=2)
    with pytest.raises(ValueError):
        fit_regression(small, degree=0)


def test_r2_score_of_mean_predictor_is_zero():
    y = np.array([1.0, 2.0, 3.0, 10.0])
    assert r2_score(y, np.full_like(y, y.mean())) == 0.0
    assert r2_score(y, y) == 1.0


def test_kfold_realizable_dataset():
    rng = np.random.default_rng(5)
    dataset = []
    for _ in range(200):
        fv = sample_features(rng)
        dataset.append((fv, oracle_seconds(fv.shots, fv.depth)))
    assert kfold_r2(dataset, degree=2, k_folds=5, seed=0) >= 0.999


def test_kfold_heldout_r2_on_noisy_oracle_data():
    dataset = oracle_dataset(2000, seed=31)
    assert kfold_r2(dataset, degree=2, k_folds=5, seed=0) >= 0.99


def test_kfold_degree2_beats_degree1():
    dataset = oracle_dataset(1500, seed=13)
    r1 = kfold_r2(dataset, degree=1, k_folds=5, seed=0)
    r2 = kfold_r2(dataset, degree=2, k_folds=5, seed=0)
    assert r2 > r1


def test_kfold_is_deterministic_per_seed():
    dataset = oracle_dataset(300, seed=2)
    a = kfold_r2(dataset, degree=2, k_folds=4, seed=17)
    b = kfold_r2(dataset, degree=2, k_folds=4, seed=17)
    c = kfold_r2(dataset, degree=2, k_folds=4, seed=18)
    assert a == b
    assert a != c


def test_kfold_param_errors():
    dataset = oracle_dataset(30, seed=0)
    with pytest.raises(ValueError):
        kfold_r2(dataset, degree=2, k_folds=1, seed=0)
    with pytest.raises(ValueError):
        kfold_r2(dataset[:3], degree=2, k_folds=5, seed=0)


def test_time_prediction_floor():
    rng = np.random.default_rng(3)
    dataset = [(sample_features(rng), -5.0) for _ in range(60)]
    model = fit_regression(dataset, degree=2)
    probe = sample_features(np.random.default_rng(4))
    assert estimate_execution_time(model, probe) == pytest.approx(0.001)


def test_time_prediction_accuracy_on_oracle_circuits():
    train = oracle_dataset(2000, seed=8)
    model = fit_regression(train, degree=2)
    probe = oracle_dataset(100, seed=9, noise=0.0)
    rel_errors = []
    for fv, want in probe:
        got = estimate_execution_time(model, fv)
        rel_errors.append(abs(got - want) / want)
    assert float(np.median(rel_errors)) <= 0.05


# ---------------------------------------------------------------------------
# classical cost model


def test_knitting_flops_arithmetic():
    assert knitting_flops(0, 1) == 1e6
    assert knitting_flops(0, 3) == 3e6
    assert knitting_flops(3, 2, base=6.0, c_knit=1e6) == pytest.approx(4.32e8)
    ratio = knitting_flops(5, 1, base=6.0) / knitting_flops(3, 1, base=6.0)
    assert ratio == pytest.approx(36.0)


def test_knitting_flops_validation():
    with pytest.raises(ValueError):
        knitting_flops(-1, 1)
    with pytest.raises(ValueError):
        knitting_flops(1, 0)
    with pytest.raises(ValueError):
        knitting_flops(1, 1, base=5.0)
    with pytest.raises(ValueError):
        knitting_flops(1, 1, base=8.5)


def test_classical_time():
    cpu = Accelerator("cpu0", AcceleratorKind.CPU, 1e10)
    gpu = Accelerator("gpu0", AcceleratorKind.GPU, 1e12)
    assert classical_time(0.0, cpu) == 0.0
    assert classical_time(1e12, gpu) == pytest.approx(1.0)
    flops = knitting_flops(7, 2, base=6.0)
    assert classical_time(flops, cpu) / classical_time(flops, gpu) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        classical_time(-1.0, cpu)
    with pytest.raises(ValueError):
        Accelerator("bad", AcceleratorKind.CPU, 0.0)


# ---------------------------------------------------------------------------
# resource plans


@pytest.fixture(scope="module")
def fitted_ctx():
    model = fit_regression(oracle_dataset(2000, seed=21), degree=2)
    return EstimatorContext(model=model)


def test_single_combo_yields_one_uncut_plan(fitted_ctx):
    template = make_template(heavy_hex_map(16), 40)
    acc = Accelerator("cpu0", AcceleratorKind.CPU, 1e10)
    circ = generate_random_circuit(
        seed=1, width=8, target_depth=20, two_qubit_fraction=0.3, shots=2000
    )
    plans = generate_resource_plans(circ, [template], [acc], fitted_ctx)
    assert len(plans) == 1
    plan = plans[0]
    assert plan.k == 0
    assert plan.target_model == template.model
    assert plan.est_total_time == pytest.approx(
        plan.est_quantum_time + plan.est_classical_time
    )


def test_dominated_plan_discarded():
    mk = lambda fid, t: ResourcePlan(
        k=0,
        target_model="m",
        accelerator=None,
        est_fidelity=fid,
        est_quantum_time=t,
        est_classical_time=0.0,
        est_total_time=t,
    )
    kept = pareto_filter_plans([mk(0.9, 10.0), mk(0.8, 12.0)])
    assert len(kept) == 1
    assert kept[0].est_fidelity == 0.9


def test_incomparable_plans_both_kept():
    mk = lambda fid, t: ResourcePlan(
        k=0,
        target_model="m",
        accelerator=None,
        est_fidelity=fid,
        est_quantum_time=t,
        est_classical_time=0.0,
        est_total_time=t,
    )
    kept = pareto_filter_plans([mk(0.9, 12.0), mk(0.8, 10.0)])
    assert len(kept) == 2


def test_generated_front_mutually_nondominated(fitted_ctx):
    circ = generate_clustered_circuit(
        seed=5, width=20, target_depth=25, two_qubit_fraction=0.3, shots=4000, crossings=3
    )
    templates = [
        make_template(heavy_hex_map(27), 50, model="hex27"),
        make_template(heavy_hex_map(20), 51, model="hex20"),
    ]
    accs = [
        Accelerator("cpu0", AcceleratorKind.CPU, 1e10),
        Accelerator("gpu0", AcceleratorKind.GPU, 1e12),
    ]
    plans = generate_resource_plans(
        circ, templates, accs, fitted_ctx, k_set={3, 5, 7}, plan_count=10
    )
    assert plans
    for a in plans:  # O(n^2) audit against the domination definition
        for b in plans:
            if a is b:
                continue
            dominates = (
                a.est_fidelity >= b.est_fidelity
                and a.est_total_time <= b.est_total_time
                and (
                    a.est_fidelity > b.est_fidelity
                    or a.est_total_time < b.est_total_time
                )
            )
            assert not dominates


def test_plans_parallel_workers_match_serial(fitted_ctx):
    circ = generate_clustered_circuit(
        seed=6, width=16, target_depth=20, two_qubit_fraction=0.3, shots=3000, crossings=2
    )
    templates = [make_template(heavy_hex_map(27), 52, model="hex27")]
    accs = [Accelerator("cpu0", AcceleratorKind.CPU, 1e10)]
    serial = generate_resource_plans(circ, templates, accs, fitted_ctx, k_set={3, 5})
    threaded = generate_resource_plans(
        circ, templates, accs, fitted_ctx, k_set={3, 5}, workers=4
    )
    assert serial == threaded


def test_cut_plan_gains_fidelity_costs_time(fitted_ctx):
    """k=3 vs uncut on cuttable 12+ qubit circuits: the cut plan should win
    on fidelity and lose on total time in at least 90% of seeds."""
    template = make_template(heavy_hex_map(27), 60)
    acc = Accelerator("cpu0", AcceleratorKind.CPU, 1e10)
    wins = 0
    n_seeds = 20
    for seed in range(n_seeds):
        circ = generate_clustered_circuit(
            seed=seed,
            width=14,
            target_depth=20,
            two_qubit_fraction=0.3,
            shots=2000,
            crossings=3,
        )
        uncut = evaluate_plan(circ, 0, template, acc, fitted_ctx)
        cut = evaluate_plan(circ, 3, template, acc, fitted_ctx)
        if (
            cut.est_fidelity > uncut.est_fidelity
            and cut.est_total_time > uncut.est_total_time
        ):
            wins += 1
    assert wins >= 0.9 * n_seeds


def synthetic_front(n: int) -> list[ResourcePlan]:
    """n mutually non-dominated plans: fidelity and time both ascending."""
    return [
        ResourcePlan(
            k=0,
            target_model=f"m{i}",
            accelerator=None,
            est_fidelity=0.5 + 0.04 * i,
            est_quantum_time=10.0 + 3.0 * i,
            est_classical_time=0.0,
            est_total_time=10.0 + 3.0 * i,
        )
        for i in range(n)
    ]


def test_plan_spread_keeps_endpoints_and_fills_gaps():
    front = synthetic_front(11)
    picked = _spread_select(front, 3)
    assert len(picked) == 3
    assert picked[0] is front[0]
    assert picked[-1] is front[-1]
    # evenly spaced front: the filler lands in the middle
    assert picked[1] is front[5]
    # larger budgets keep the list sorted and unique
    five = _spread_select(front, 5)
    assert len(five) == 5
    assert [p.est_total_time for p in five] == sorted(
        {p.est_total_time for p in five}
    )


def test_plan_spread_passthrough_when_front_small():
    front = synthetic_front(3)
    assert _spread_select(front, 3) == front
    assert _spread_select(front, 10) == front
    assert _spread_select(front, 1) == [front[0]]


def test_no_feasible_plan_raises(fitted_ctx):
    template = make_template(line_map(4), 80)
    circ = generate_random_circuit(
        seed=2, width=12, target_depth=10, two_qubit_fraction=0.3, shots=100
    )
    # width 12 does not fit 4 qubits even split in two; random circuits
    # are not cuttable within k<=3 either
    with pytest.raises(NoFeasiblePlanError):
        generate_resource_plans(
            circ,
            [template],
            [Accelerator("cpu0", AcceleratorKind.CPU, 1e10)],
            fitted_ctx,
            k_set={3},
        )


def test_fragment_time_mode_parallel_uses_max(fitted_ctx):
    template = make_template(heavy_hex_map(27), 61)
    acc = Accelerator("cpu0", AcceleratorKind.CPU, 1e10)
    circ = generate_clustered_circuit(
        seed=14, width=14, target_depth=20, two_qubit_fraction=0.3, shots=2000, crossings=2
    )
    ctx_par = EstimatorContext(model=fitted_ctx.model, fragment_time_mode="parallel")
    seq = evaluate_plan(circ, 3, template, acc, fitted_ctx)
    par = evaluate_plan(circ, 3, template, acc, ctx_par)
    assert par.est_quantum_time < seq.est_quantum_time
    assert par.est_fidelity == seq.est_fidelity


# ---------------------------------------------------------------------------
# serialization


def test_model_json_roundtrip():
    model = fit_regression(oracle_dataset(100, seed=44), degree=2)
    clone = model_from_json(model_to_json(model))
    assert clone.degree == model.degree
    assert np.array_equal(clone.coefficients, model.coefficients)
    assert np.array_equal(clone.feature_means, model.feature_means)
    assert np.array_equal(clone.feature_scales, model.feature_scales)
    assert clone.train_r2 == model.train_r2
    probe = sample_features(np.random.default_rng(0))
    assert estimate_execution_time(clone, probe) == estimate_execution_time(
        model, probe
    )


def test_dataset_csv_roundtrip(tmp_path):
    dataset = oracle_dataset(50, seed=46)
    path = tmp_path / "dataset.csv"
    write_dataset_csv(path, dataset)
    back = read_dataset_csv(path)
    assert len(back) == len(dataset)
    for (fv_a, t_a), (fv_b, t_b) in zip(dataset, back):
        assert fv_a == fv_b
        assert t_a == t_b


def test_dataset_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("width,shots,depth\n1,2,3\n")
    with pytest.raises(ValueError):
        read_dataset_csv(path)


def test_feature_vector_rejects_negative():
    with pytest.raises(ValueError):
        FeatureVector(width=-1, shots=10, depth=1, two_qubit_count=0)


def test_features_from_transpiled():
    coupling = heavy_hex_map(16)
    circ = generate_random_circuit(
        seed=19, width=9, target_depth=15, two_qubit_fraction=0.3, shots=512
    )
    tc = transpile(circ, coupling, "t")
    fv = features_from_transpiled(tc)
    assert fv.width == 9
    assert fv.shots == 512
    assert fv.depth == tc.depth
    assert fv.two_qubit_count == tc.two_qubit_count


@settings(max_examples=30, deadline=None)
@given(
    k=st.integers(min_value=0, max_value=8),
    fragments=st.integers(min_value=1, max_value=4),
    base=st.floats(min_value=6.0, max_value=8.0),
)
def test_knitting_flops_positive_and_monotone(k, fragments, base):
    flops = knitting_flops(k, fragments, base=base)
    assert flops > 0.0
    assert knitting_flops(k + 1, fragments, base=base) >= flops * 6.0

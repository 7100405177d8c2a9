import numpy as np
import pytest

from latentperf import (
    AlgorithmProperties,
    Curriculum,
    DivergenceError,
    FitConfig,
    PerformanceMatrix,
    ScenarioParams,
    TaskProperties,
    ValidationError,
    fit,
    fit_with_restarts,
    gradient,
    loss,
    parameter_recovery_errors,
    project,
    recovery_experiment,
    simulate_all,
)
from latentperf.estimator import _pack
from latentperf.model import _param_arrays

from conftest import params_as_lists, random_instance
from oracles import fd_gradient, loss_ref, relative_errors


def _random_observed(rng, params, cur, masked=True):
    """Random target curves in [-1, 1] with a mostly-true mask."""
    n, m = params.n, cur.m
    mats = []
    for a in params.algorithms:
        values = rng.uniform(-1.0, 1.0, size=(n, m))
        mask = rng.random((n, m)) < 0.85 if masked else None
        mats.append(PerformanceMatrix(algorithm=a.name, values=values, mask=mask))
    if masked and not any(mat.mask.any() for mat in mats):
        mats[0] = PerformanceMatrix(algorithm=mats[0].algorithm, values=mats[0].values)
    return mats


def _flat_loss_fn(n, p, entries, observed_lists, mask_lists):
    """Loss as a plain function of the packed parameter vector, built on
    the loop oracle only."""

    def f(theta):
        k = n * n
        transfer = [list(theta[r * n : (r + 1) * n]) for r in range(n)]
        difficulty = list(theta[k : k + n])
        gamma = theta[k + n : k + n + p]
        h = theta[k + n + p : k + n + 2 * p]
        lam = theta[k + n + 2 * p :]
        algos = list(zip(gamma, h, lam))
        return loss_ref(
            transfer, difficulty, algos, entries, observed_lists, mask_lists, n
        )

    return f


def _pack_gradient(g):
    return np.concatenate(
        [
            g.transfer.ravel(),
            g.difficulty,
            g.transfer_efficiency,
            g.experience_retention,
            g.expertise_translation,
        ]
    )


# ---------------------------------------------------------------------------
# loss


def test_loss_zero_at_perfect_fit(rng):
    _, params, cur = random_instance(rng, 3, 6, 2)
    observed = simulate_all(params, cur)
    assert loss(params, cur, observed) == 0.0


def test_loss_single_entry():
    tasks = TaskProperties(transfer=np.zeros((1, 1)), difficulty=[1.0])
    params = ScenarioParams(
        tasks=tasks, algorithms=[AlgorithmProperties("a", 0.0, 0.5, 0.0)]
    )
    cur = Curriculum(entries=[0], n_tasks=1)
    # prediction is 0 (no transfer), observation 0.5
    observed = [PerformanceMatrix(algorithm="a", values=np.array([[0.5]]))]
    assert loss(params, cur, observed) == 0.25


def test_loss_matches_bruteforce_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 8))
        p = int(rng.integers(1, 4))
        _, params, cur = random_instance(rng, n, m, p)
        observed = _random_observed(rng, params, cur)
        transfer, difficulty, algos = params_as_lists(params)
        expect = loss_ref(
            transfer,
            difficulty,
            algos,
            list(cur.entries),
            [o.values.tolist() for o in observed],
            [o.mask.tolist() for o in observed],
            n,
        )
        got = loss(params, cur, observed)
        assert got == pytest.approx(expect, rel=1e-12)


def test_loss_ignores_masked_entries(rng):
    _, params, cur = random_instance(rng, 2, 5, 1)
    observed = simulate_all(params, cur)
    # corrupt one entry but mask it out: loss must stay zero
    values = observed[0].values.copy()
    mask = np.ones_like(values, dtype=bool)
    values[1, 3] = -0.9
    mask[1, 3] = False
    corrupted = [
        PerformanceMatrix(algorithm=observed[0].algorithm, values=values, mask=mask)
    ]
    assert loss(params, cur, corrupted) == 0.0


def test_loss_shape_mismatch_raises(rng):
    _, params, cur = random_instance(rng, 2, 5, 1)
    bad = [PerformanceMatrix(algorithm="a", values=np.zeros((2, 4)))]
    with pytest.raises(ValidationError):
        loss(params, cur, bad)
    with pytest.raises(ValidationError):
        loss(params, cur, [])


# ---------------------------------------------------------------------------
# gradient


def test_gradient_zero_at_perfect_fit(rng):
    _, params, cur = random_instance(rng, 3, 5, 2)
    observed = simulate_all(params, cur)
    g = _pack_gradient(gradient(params, cur, observed))
    assert (g == 0.0).all()


def test_gradient_gamma_dead_with_zero_transfer(rng):
    tasks = TaskProperties(transfer=np.zeros((3, 3)), difficulty=[0.4, 0.6, 0.8])
    params = ScenarioParams(
        tasks=tasks,
        algorithms=[AlgorithmProperties("a", 0.3, 0.5, 0.2)],
    )
    cur = Curriculum(entries=[0, 1, 2, 1], n_tasks=3)
    observed = _random_observed(rng, params, cur, masked=False)
    g = gradient(params, cur, observed)
    assert (g.transfer_efficiency == 0.0).all()
    assert (g.expertise_translation == 0.0).all()


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 9))
        p = int(rng.integers(1, 4))
        _, params, cur = random_instance(rng, n, m, p)
        observed = _random_observed(rng, params, cur)
        g = _pack_gradient(gradient(params, cur, observed))
        f = _flat_loss_fn(
            n,
            p,
            list(cur.entries),
            [o.values.tolist() for o in observed],
            [o.mask.tolist() for o in observed],
        )
        theta = list(_pack(_param_arrays(params)))
        approx = fd_gradient(f, theta, eps=1e-6)
        errs = relative_errors(approx, list(g))
        worst = max(worst, max(errs))
    assert worst < 1e-4


# ---------------------------------------------------------------------------
# projection


def test_project_clamps_dict():
    raw = {
        "transfer": np.array([[1.7, -2.0], [0.3, 1.0]]),
        "difficulty": np.array([0.5, 1e-9]),
        "gamma": np.array([-3.0, 0.2]),
        "h": np.array([-0.2, 0.35]),
        "lambda": np.array([-1.0, 4.0]),
    }
    out = project(raw)
    np.testing.assert_array_equal(out["transfer"], [[1.0, -1.0], [0.3, 1.0]])
    np.testing.assert_array_equal(out["difficulty"], [0.5, 1e-3])
    np.testing.assert_array_equal(out["gamma"], [0.0, 0.2])
    np.testing.assert_array_equal(out["h"], [0.0, 0.35])
    np.testing.assert_array_equal(out["lambda"], [0.0, 4.0])


def test_project_idempotent(rng):
    for _ in range(20):
        raw = {
            "transfer": rng.normal(size=(3, 3)) * 2,
            "difficulty": rng.normal(size=3),
            "gamma": rng.normal(size=2),
            "h": rng.normal(size=2),
            "lambda": rng.normal(size=2),
        }
        once = project(raw)
        twice = project(once)
        for key in raw:
            np.testing.assert_array_equal(once[key], twice[key])


def test_project_feasible_params_passthrough(rng):
    _, params, _ = random_instance(rng, 3, 4, 2)
    out = project(params)
    assert isinstance(out, ScenarioParams)
    np.testing.assert_array_equal(out.tasks.transfer, params.tasks.transfer)
    np.testing.assert_array_equal(out.tasks.difficulty, params.tasks.difficulty)
    for a, b in zip(out.algorithms, params.algorithms):
        assert a == b


def test_project_rejects_junk():
    with pytest.raises(ValidationError):
        project({"transfer": [[0.0]]})
    with pytest.raises(ValidationError):
        project(42)


# ---------------------------------------------------------------------------
# fit


def _small_problem(rng, n=3, m=6, p=2):
    _, params, cur = random_instance(rng, n, m, p)
    return params, cur, simulate_all(params, cur)


def test_fit_init_at_truth_stays_put(rng):
    truth, cur, observed = _small_problem(rng)
    result = fit(cur, observed, FitConfig(steps=50), init_params=truth)
    assert result.loss_total == 0.0
    np.testing.assert_array_equal(result.params.tasks.transfer, truth.tasks.transfer)
    np.testing.assert_array_equal(
        result.params.tasks.difficulty, truth.tasks.difficulty
    )
    for a, b in zip(result.params.algorithms, truth.algorithms):
        assert a == b
    assert (result.loss_trace == 0.0).all()
    errs = parameter_recovery_errors(truth, result.params)
    assert all(v == 0.0 for v in errs.values())


def test_fit_deterministic(rng):
    _, cur, observed = _small_problem(rng)
    cfg = FitConfig(steps=40, seed=7)
    r1 = fit(cur, observed, cfg)
    r2 = fit(cur, observed, cfg)
    np.testing.assert_array_equal(r1.params.tasks.transfer, r2.params.tasks.transfer)
    np.testing.assert_array_equal(
        r1.params.tasks.difficulty, r2.params.tasks.difficulty
    )
    assert r1.params.algorithms == r2.params.algorithms
    assert r1.loss_total == r2.loss_total
    np.testing.assert_array_equal(r1.loss_trace, r2.loss_trace)
    for m1, m2 in zip(r1.predicted, r2.predicted):
        np.testing.assert_array_equal(m1.values, m2.values)


def test_fit_trace_and_losses(rng):
    _, cur, observed = _small_problem(rng)
    result = fit(cur, observed, FitConfig(steps=30, seed=3))
    assert result.loss_trace.shape == (31,)
    assert np.isfinite(result.loss_trace).all()
    assert result.loss_total >= 0.0
    assert set(result.loss_per_algorithm) == {o.algorithm for o in observed}
    # final loss should not exceed the starting loss on these easy instances
    assert result.loss_trace[-1] <= result.loss_trace[0]


def test_fit_steps_zero_returns_projected_init(rng):
    _, cur, observed = _small_problem(rng)
    result = fit(cur, observed, FitConfig(steps=0, seed=5))
    assert result.loss_trace.shape == (1,)
    assert result.loss_total == result.loss_trace[0]
    # returned parameters must be feasible
    out = project(result.params)
    np.testing.assert_array_equal(out.tasks.transfer, result.params.tasks.transfer)


def test_fit_callback_reports_feasible_steps(rng):
    _, cur, observed = _small_problem(rng)
    seen = []
    fit(
        cur,
        observed,
        FitConfig(steps=25, seed=1),
        callback=lambda t, value, ok: seen.append((t, value, ok)),
    )
    assert [t for t, _, _ in seen] == list(range(1, 26))
    assert all(ok for _, _, ok in seen)
    assert all(np.isfinite(v) for _, v, _ in seen)


def test_fit_result_params_feasible(rng):
    _, cur, observed = _small_problem(rng)
    result = fit(cur, observed, FitConfig(steps=60, seed=11))
    p = result.params
    assert (np.abs(p.tasks.transfer) <= 1.0).all()
    assert (p.tasks.difficulty >= 1e-3).all()
    for a in p.algorithms:
        assert a.transfer_efficiency >= 0.0
        assert 0.0 <= a.experience_retention <= 1.0
        assert a.expertise_translation >= 0.0


def test_fit_divergence_reports_step_and_parameter():
    tasks = TaskProperties(transfer=np.eye(2), difficulty=[0.5, 0.5])
    params = ScenarioParams(
        tasks=tasks, algorithms=[AlgorithmProperties("a", 0.1, 0.5, 0.1)]
    )
    cur = Curriculum(entries=[0, 1], n_tasks=2)
    observed = [
        PerformanceMatrix(algorithm="a", values=np.full((2, 2), 1e308))
    ]
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError) as info:
            fit(cur, observed, FitConfig(steps=5), init_params=params)
    assert info.value.step == 0
    assert "after 0 optimizer steps" in str(info.value)


def test_fit_duplicate_algorithm_names_rejected(rng):
    _, cur, observed = _small_problem(rng)
    dup = [
        PerformanceMatrix(algorithm="same", values=o.values) for o in observed
    ]
    with pytest.raises(ValidationError):
        fit(cur, dup, FitConfig(steps=1))


def test_fit_per_algorithm_variant(rng):
    truth, cur, observed = _small_problem(rng, p=2)
    results = fit(cur, observed, FitConfig(steps=20, seed=9), per_algorithm=True)
    assert isinstance(results, tuple) and len(results) == 2
    for res, mat in zip(results, observed):
        assert res.params.p == 1
        assert res.params.algorithms[0].name == mat.algorithm
    # a single-algorithm problem gives the same answer either way
    solo = [observed[0]]
    joint = fit(cur, solo, FitConfig(steps=20, seed=9))
    split = fit(cur, solo, FitConfig(steps=20, seed=9), per_algorithm=True)[0]
    np.testing.assert_array_equal(
        joint.params.tasks.transfer, split.params.tasks.transfer
    )
    assert joint.loss_total == split.loss_total


def test_fit_config_validation():
    with pytest.raises(ValidationError):
        FitConfig(steps=-1)
    with pytest.raises(ValidationError):
        FitConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        FitConfig(beta1=1.0)
    with pytest.raises(ValidationError):
        FitConfig(epsilon=0.0)
    with pytest.raises(ValidationError):
        FitConfig(init_scheme="rosebud")
    # aliases normalize
    assert FitConfig(init_scheme="uniform").init_scheme == "uniform-random"
    assert FitConfig(init_scheme="identity").init_scheme == "identity-biased"


def test_fit_with_restarts_picks_best(rng):
    _, cur, observed = _small_problem(rng)
    cfg = FitConfig(steps=30, seed=0)
    single = fit(cur, observed, cfg)
    multi = fit_with_restarts(cur, observed, cfg, restarts=3)
    assert multi.loss_total <= single.loss_total
    # restarts=1 is exactly a plain fit
    same = fit_with_restarts(cur, observed, cfg, restarts=1)
    assert same.loss_total == single.loss_total
    with pytest.raises(ValidationError):
        fit_with_restarts(cur, observed, cfg, restarts=0)


# ---------------------------------------------------------------------------
# recovery harness


def test_parameter_recovery_errors_zero_on_equal(rng):
    _, params, _ = random_instance(rng, 4, 5, 2)
    errs = parameter_recovery_errors(params, params)
    assert set(errs) == {"transfer", "difficulty", "gamma", "h", "lambda"}
    assert all(v == 0.0 for v in errs.values())


def test_parameter_recovery_errors_permutation_invariant(rng):
    _, truth, _ = random_instance(rng, 4, 5, 2)
    _, estimate, _ = random_instance(rng, 4, 5, 2)
    perm = np.array([2, 0, 3, 1])

    def permute(params):
        transfer = params.tasks.transfer[np.ix_(perm, perm)]
        difficulty = params.tasks.difficulty[perm]
        return ScenarioParams(
            tasks=TaskProperties(transfer=transfer, difficulty=difficulty),
            algorithms=params.algorithms,
        )

    base = parameter_recovery_errors(truth, estimate)
    permuted = parameter_recovery_errors(permute(truth), permute(estimate))
    for key in base:
        assert permuted[key] == pytest.approx(base[key], rel=1e-12)


def test_parameter_recovery_errors_shape_mismatch(rng):
    _, a, _ = random_instance(rng, 3, 5, 2)
    _, b, _ = random_instance(rng, 4, 5, 2)
    with pytest.raises(ValidationError):
        parameter_recovery_errors(a, b)


def test_recovery_experiment_init_at_truth_is_exact():
    result = recovery_experiment(
        trials=1, config=FitConfig(steps=10), seed=3, init_at_truth=True
    )
    assert result.n_succeeded == 1
    assert result.failures == ()
    assert all(v == 0.0 for v in result.mse.values())


def test_recovery_experiment_deterministic_across_jobs():
    cfg = FitConfig(steps=25)
    serial = recovery_experiment(trials=3, config=cfg, seed=11, jobs=1)
    parallel = recovery_experiment(trials=3, config=cfg, seed=11, jobs=2)
    assert serial.mse == parallel.mse
    assert serial.per_trial == parallel.per_trial


def test_recovery_experiment_validates_counts():
    with pytest.raises(ValidationError):
        recovery_experiment(trials=0)

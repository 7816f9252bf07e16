"""End-to-end acceptance checks, one marker per criterion.

The terminal summary prints one PASS/FAIL line per criterion. Optimizer
runs use seeds derived from base seed 0 through the experiment harness.
"""

import math
import os
import statistics

import numpy as np
import pytest

import oracles
from socialspider.core import SearchSpace, SsaParams, init_engine, maybe_update_mask, run, step
from socialspider.harness import (
    ExperimentPlan,
    comparison_table,
    exact_rank_sum_pvalue,
    run_experiment,
    wilcoxon_rank_sum,
)
from socialspider.objectives import UserObjective, make_benchmark, optimum
from socialspider.rng import RngStream

FLOOR = 1e-8
WORKERS = os.cpu_count() or 1


def criterion(num, desc):
    return pytest.mark.criterion(num, desc)


def finals(function, n, runs, pop, *, stop_at_floor=True):
    # Stopping at the floor cannot change a final value: nothing goes below it.
    params = SsaParams(target=FLOOR) if stop_at_floor else SsaParams()
    plan = ExperimentPlan(cells=((function, n),), runs=runs, pop_size=pop, params=params, workers=WORKERS)
    (cell,) = run_experiment(plan)
    assert cell.error is None, cell.error
    return cell


@pytest.fixture(scope="module")
def rastrigin_30d():
    return finals("f6", 30, 11, 30, stop_at_floor=False)


@criterion(1, "10-D Sphere: >= 18 of 20 runs reach 1e-8")
def test_sphere_10d():
    cell = finals("f1", 10, 20, 10)
    hits = sum(f <= FLOOR for f in cell.finals)
    print(f"criterion 1: {hits}/20 runs at floor")
    assert hits >= 18


@criterion(2, "10-D Rastrigin: median of 11 runs <= 1e-6")
def test_rastrigin_10d():
    med = statistics.median(finals("f6", 10, 11, 10).finals)
    print(f"criterion 2: median {med:.3E}")
    assert med <= 1e-6


@criterion(3, "30-D Rastrigin: median of 11 runs <= 1e-4")
def test_rastrigin_30d(rastrigin_30d):
    values = rastrigin_30d.finals
    med = statistics.median(values)
    print(f"criterion 3: median {med:.3E}, finals {sorted(values)}")
    assert rastrigin_30d.records[0].fe_used == 300_000
    assert med <= 1e-4


@criterion(4, "10-D Griewank and Ackley: median of 11 runs <= 1e-4 each")
@pytest.mark.parametrize("function", ["f8", "f7"])
def test_griewank_ackley_10d(function):
    med = statistics.median(finals(function, 10, 11, 10).finals)
    print(f"criterion 4 {function}: median {med:.3E}")
    assert med <= 1e-4


@criterion(5, "synthetic 25-row table: every rank-sum verdict correct")
def test_synthetic_verdict_table():
    rng = np.random.default_rng(0)
    candidate, opponent, expected = {}, {}, {}
    for fid in range(1, 26):
        base = rng.lognormal(0.0, 0.3, 51)
        other = rng.lognormal(0.0, 0.3, 51)
        kind = fid % 3
        if kind == 0:
            # candidate two decades better
            candidate[f"f{fid}"], opponent[f"f{fid}"], expected[f"f{fid}"] = base * 1e-2, other, "-"
        elif kind == 1:
            candidate[f"f{fid}"], opponent[f"f{fid}"], expected[f"f{fid}"] = base * 1e2, other, "+"
        else:
            # same sample, reordered: no separation at all
            candidate[f"f{fid}"], opponent[f"f{fid}"], expected[f"f{fid}"] = base, rng.permutation(base), "="
    rows, counts = comparison_table(candidate, {"other": opponent})
    assert len(rows) == 25
    got = {r["function"]: r["other:verdict"] for r in rows}
    assert got == expected
    assert counts["other"] == {s: list(expected.values()).count(s) for s in "-+="}
    for r in rows:
        mean, std = r["candidate"].split("±")
        assert float(mean) > 0 and float(std) >= 0
        assert len(mean.split("E")[0]) == 4


def _random_problem(rng):
    if rng.random() < 0.3:
        n = int(rng.integers(2, 7))
        lo = rng.uniform(-50, 10, n)
        hi = lo + rng.uniform(0.5, 60, n)
        space = SearchSpace(lo, hi)
        shift = rng.uniform(lo, hi)
        return UserObjective("box", lambda x, s=shift: float(np.sum((x - s) ** 2)), space)
    fid = int(rng.choice([1, 5, 6, 8, 9, 13, 14, 16, 21, 25]))
    n = int(rng.integers(5 if fid == 25 else 2, 9))
    return make_benchmark(fid, n, seed=int(rng.integers(100)))


@criterion(6, "engine invariants over 1e4 randomized steps and >= 20 seeds")
def test_engine_invariants():
    seeds, steps_each = 25, 400
    total = 0
    for seed in range(seeds):
        rng_cfg = np.random.default_rng(seed)
        objective = _random_problem(rng_cfg)
        n = objective.space.n
        params = SsaParams(
            r_a=float(rng_cfg.choice([0.1, 0.5, 1.0, 3.0, 10.0])),
            p_c=float(rng_cfg.uniform(0.01, 0.99)),
            p_m=float(rng_cfg.uniform(0.01, 0.99)),
            pop_size=int(rng_cfg.integers(2, 12)),
            seed=seed,
        )
        rng = RngStream(seed)
        eng = init_engine(objective, params, rng)
        best = math.inf
        lo, hi = objective.space.lower, objective.space.upper
        for t in range(1, steps_each + 1):
            prev_target = eng.target_pos.copy()
            prev_int = eng.target_int.copy()
            prev_masks = eng.masks.copy()
            step(eng, objective, params, rng)
            total += 1
            assert np.all((eng.positions >= lo) & (eng.positions <= hi))
            assert eng.best_f <= best
            best = eng.best_f
            assert eng.fe == t * params.pop_size and eng.t == t
            changed = np.any(eng.target_pos != prev_target, axis=1) | (eng.target_int != prev_int)
            np.testing.assert_array_equal(eng.inactive == 0, changed)
            pop = eng.masks.sum(axis=1)
            resampled = np.any(eng.masks != prev_masks, axis=1) | (pop > 0)
            assert np.all((pop[resampled] >= 1) & (pop[resampled] <= n - 1))
        if objective.id != "f5":
            assert best == pytest.approx(float(objective.evaluate_batch(eng.best_x[None, :], None)[0]), rel=1e-12)

        small = SsaParams(pop_size=params.pop_size, max_fe=params.pop_size * 30, seed=seed,
                          r_a=params.r_a, p_c=params.p_c, p_m=params.p_m)
        a, b = run(objective, small), run(objective, small)
        assert a.to_dict() == b.to_dict()
        assert a.best_x.tobytes() == b.best_x.tobytes()
    assert total >= 10_000


@criterion(7, "objective oracle: optimum values and 100 random points per function")
def test_objective_oracle_suite():
    for fid in range(1, 26):
        for n in (2, 10, 30):
            spec = make_benchmark(fid, n)
            raw = spec.raw_batch(optimum(spec)[None, :], noise=False)[0]
            assert abs(raw) <= (1e-3 if fid == 13 else 1e-6), (fid, n, raw)
        spec = make_benchmark(fid, 10, seed=fid)
        shift = None if spec.chain.shift is None else spec.chain.shift.tolist()
        rot = None if spec.chain.rotation is None else spec.chain.rotation.tolist()
        xs = np.random.default_rng(1000 + fid).uniform(-100, 100, (100, 10))
        got = spec.raw_batch(xs, noise=False)
        want = [oracles.raw_value(fid, x.tolist(), shift, rot) for x in xs]
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=0)


@criterion(8, "rank-sum normal approximation within 0.02 of exact up to (5,5); exact p = 0.1 example")
def test_wilcoxon_oracle():
    w, p = exact_rank_sum_pvalue([1, 2, 3], [4, 5, 6])
    assert w == 6.0 and p == pytest.approx(0.1, abs=1e-12)
    rng = np.random.default_rng(0)
    worst = (0.0, None)
    for _ in range(200):
        n1, n2 = (int(v) for v in rng.integers(3, 6, 2))
        a = rng.integers(0, 20, n1).tolist()
        b = rng.integers(0, 20, n2).tolist()
        _, exact = exact_rank_sum_pvalue(a, b)
        approx = wilcoxon_rank_sum(a, b).p_value
        if abs(exact - approx) > worst[0]:
            worst = (abs(exact - approx), (a, b, exact, approx))
    print(f"criterion 8: worst |normal - exact| = {worst[0]:.4f} at {worst[1]}")
    assert worst[0] <= 0.02


@criterion(9, "mask resample rate at c_s in {1,2,5} within 3 sigma of 1 - 0.7**c_s")
@pytest.mark.parametrize("cs", [1, 2, 5])
def test_mask_change_rate(cs):
    trials, n = 100_000, 10
    masks = np.zeros((trials, n), dtype=bool)
    out = maybe_update_mask(masks, np.full(trials, cs), 0.7, 0.1, RngStream(cs))
    # any resample of an all-zero mask leaves at least one bit set
    rate = out.any(axis=1).mean()
    p = 1 - 0.7**cs
    sigma = math.sqrt(p * (1 - p) / trials)
    print(f"criterion 9 c_s={cs}: rate {rate:.5f} expected {p:.5f} (3 sigma {3 * sigma:.5f})")
    assert abs(rate - p) <= 3 * sigma


def _late_drop(record, budget):
    half = budget // 2
    at_half = max((f for fe, f in record.trace if fe <= half), default=math.inf)
    return at_half / record.best_f


@criterion(10, "30-D Rastrigin: >= 3 of 11 runs improve >= 100x after half the budget")
def test_late_escape(rastrigin_30d):
    ratios = [_late_drop(r, 300_000) for r in rastrigin_30d.records]
    hits = sum(q >= 100 for q in ratios)
    print(f"criterion 10: {hits}/11 runs, improvement factors {[f'{q:.3g}' for q in ratios]}")
    assert hits >= 3

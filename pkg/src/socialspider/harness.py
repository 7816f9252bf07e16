"""Multi-run experiments and the statistics used to report them."""

from __future__ import annotations

import hashlib
import itertools
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import ConfigurationError, RunRecord, SsaError, SsaParams, run
from .objectives import get_objective, unshifted_benchmark

__all__ = [
    "ExperimentPlan",
    "CellResult",
    "CellSummary",
    "WilcoxonResult",
    "InsufficientDataError",
    "SweepResult",
    "derive_seed",
    "run_experiment",
    "summarize",
    "rank_sum_statistic",
    "wilcoxon_rank_sum",
    "exact_rank_sum_pvalue",
    "success_ecdf",
    "median_convergence_trace",
    "quadratic_fit",
    "parameter_sweep",
    "format_mean_std",
    "comparison_table",
    "RA_VALUES",
    "PROB_VALUES",
    "SWEEP_FUNCTIONS",
]

RA_VALUES = (1 / 10, 1 / 5, 1 / 4, 1 / 3, 1 / 2, 1, 2, 3, 4, 5, 10)
PROB_VALUES = (0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
# Sphere, Schwefel 2.22, Rastrigin, Ackley, Griewank, all unshifted.
SWEEP_FUNCTIONS = (1, 2, 6, 7, 8)
SWEEP_PARAMS = {"r_a": "r_a", "ra": "r_a", "p_c": "p_c", "pc": "p_c", "p_m": "p_m", "pm": "p_m"}


def derive_seed(base_seed: int, cell: int, run_index: int) -> int:
    """64-bit seed from BLAKE2b over ``"<base>:<cell>:<run>"``."""
    digest = hashlib.blake2b(f"{base_seed}:{cell}:{run_index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class ExperimentPlan:
    """Cells of ``(function, n)`` each run `runs` times.

    Budget per run is ``budget_per_dim * n`` and population size equals `n`
    unless `pop_size` is given. `params` supplies the remaining knobs; its
    `seed`, `pop_size` and `max_fe` are overwritten per run.
    """

    cells: tuple
    runs: int = 51
    budget_per_dim: int = 10_000
    pop_size: Optional[int] = None
    params: SsaParams = SsaParams()
    base_seed: int = 0
    trace_stride: Optional[int] = None
    data_seed: int = 0
    data_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple((str(f), int(n)) for f, n in self.cells))
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if not self.cells:
            raise ConfigurationError("plan has no cells")
        if self.budget_per_dim < 1:
            raise ConfigurationError("budget_per_dim must be >= 1")

    def budget(self, n: int) -> int:
        return self.budget_per_dim * n

    def population(self, n: int) -> int:
        return self.pop_size if self.pop_size is not None else max(2, n)

    def run_params(self, cell: int, run_index: int) -> SsaParams:
        n = self.cells[cell][1]
        return replace(
            self.params,
            pop_size=self.population(n),
            max_fe=self.budget(n),
            seed=derive_seed(self.base_seed, cell, run_index),
        )


@dataclass
class CellResult:
    function: str
    n: int
    records: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def finals(self) -> list:
        return [r.best_f for r in self.records]


def _one_run(args):
    function, n, data_seed, data_path, params, stride = args
    objective = get_objective(function, n, seed=data_seed, data_path=data_path)
    return run(objective, params, stride)


def run_experiment(plan: ExperimentPlan) -> list:
    """Run every cell of `plan`; returns one :class:`CellResult` per cell.

    A configuration error in one cell is stored on that cell and does not
    stop the others. Results do not depend on `plan.workers`.
    """
    results = []
    tasks = []
    for ci, (function, n) in enumerate(plan.cells):
        cell = CellResult(function, n)
        results.append(cell)
        try:
            get_objective(function, n, seed=plan.data_seed, data_path=plan.data_path)
            params = [plan.run_params(ci, k) for k in range(plan.runs)]
        except (SsaError, OSError) as exc:
            cell.error = str(exc)
            continue
        for k, p in enumerate(params):
            tasks.append((ci, k, (function, n, plan.data_seed, plan.data_path, p, plan.trace_stride)))

    if plan.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            outs = list(pool.map(_safe_run, [t[2] for t in tasks]))
    else:
        outs = [_safe_run(t[2]) for t in tasks]

    slots = {i: [None] * plan.runs for i in range(len(results))}
    for (ci, k, _), out in zip(tasks, outs):
        if isinstance(out, Exception):
            results[ci].error = results[ci].error or str(out)
        else:
            slots[ci][k] = out
    for ci, cell in enumerate(results):
        if cell.error is None:
            cell.records = slots[ci]
    return results


def _safe_run(args):
    try:
        return _one_run(args)
    except SsaError as exc:
        return exc


@dataclass
class CellSummary:
    mean: float
    std: float
    min: float
    max: float
    median: float
    count: int
    successes: dict = field(default_factory=dict)


def _finals(records) -> list:
    return [r.best_f if isinstance(r, RunRecord) else float(r) for r in records]


def summarize(records, thresholds: Sequence[float] = ()) -> CellSummary:
    """Sample statistics of final bests (std uses N-1; 0 for a single run).

    `records` may hold :class:`RunRecord` objects or plain numbers.
    """
    finals = _finals(records)
    if not finals:
        raise ValueError("summarize needs at least one record")
    std = statistics.stdev(finals) if len(finals) > 1 else 0.0
    return CellSummary(
        mean=statistics.fmean(finals),
        std=std,
        min=min(finals),
        max=max(finals),
        median=statistics.median(finals),
        count=len(finals),
        successes={t: sum(f <= t for f in finals) for t in thresholds},
    )


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # rank sum of the first sample
    p_value: float
    verdict: str  # "minus", "plus" or "tie"

    @property
    def symbol(self) -> str:
        return {"minus": "-", "plus": "+", "tie": "="}[self.verdict]


def _midranks(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_v = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def rank_sum_statistic(a, b) -> float:
    """Sum of the midranks of `a` in the pooled sample."""
    ranks = _midranks(list(a) + list(b))
    return float(ranks[: len(a)].sum())


def _check_sizes(a, b):
    if len(a) < 3 or len(b) < 3:
        raise InsufficientDataError(f"rank-sum test needs >= 3 samples per side, got {len(a)} and {len(b)}")


def _normal_pvalue(a, b) -> tuple:
    n1, n2 = len(a), len(b)
    n = n1 + n2
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    w = float(ranks[:n1].sum())
    mean = n1 * (n + 1) / 2.0
    _, counts = np.unique(np.asarray(pooled, dtype=float), return_counts=True)
    ties = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return w, 1.0
    diff = w - mean
    corrected = max(abs(diff) - 0.5, 0.0)
    z = corrected / math.sqrt(var)
    return w, min(1.0, math.erfc(z / math.sqrt(2.0)))


def exact_rank_sum_pvalue(a, b, max_enumerations: int = 2_000_000) -> tuple:
    """Two-sided p-value by enumerating every assignment of pooled midranks.

    Returns ``(rank_sum_of_a, p)`` with ``p = min(1, 2 * min(P(W <= w), P(W >= w)))``.
    """
    n1 = len(a)
    pooled = list(a) + list(b)
    total = math.comb(len(pooled), n1)
    if total > max_enumerations:
        raise ValueError(f"exact enumeration needs {total} assignments; use the normal approximation")
    ranks = _midranks(pooled)
    w = float(ranks[:n1].sum())
    tol = 1e-9
    low = high = 0
    for combo in itertools.combinations(ranks, n1):
        s = sum(combo)
        low += s <= w + tol
        high += s >= w - tol
    return w, min(1.0, 2.0 * min(low, high) / total)


def wilcoxon_rank_sum(a, b, alpha: float = 0.05, exact: bool = False) -> WilcoxonResult:
    """Two-sided rank-sum test of candidate `a` against opponent `b` (minimization).

    Uses the normal approximation with tie-corrected variance and continuity
    correction unless `exact` is set. Verdict ``"minus"`` means `a` is
    significantly better (smaller), ``"plus"`` significantly worse.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    _check_sizes(a, b)
    w, p = exact_rank_sum_pvalue(a, b) if exact else _normal_pvalue(a, b)
    verdict = "tie"
    if p < alpha:
        ma, mb = statistics.median(a), statistics.median(b)
        if ma < mb:
            verdict = "minus"
        elif ma > mb:
            verdict = "plus"
    return WilcoxonResult(w, p, verdict)


def success_ecdf(records, thresholds: Sequence[float]) -> list:
    """Fraction of runs whose final best is at or below each threshold."""
    thresholds = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    finals = _finals(records)
    if not finals:
        return [(t, 0.0) for t in thresholds]
    return [(t, sum(f <= t for f in finals) / len(finals)) for t in thresholds]


def median_convergence_trace(records):
    """Record holding the ceil(N/2)-th smallest final best (lower median for even N).

    Ties are broken by position in `records`.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    order = sorted(range(len(records)), key=lambda i: (records[i].best_f, i))
    return records[order[(len(records) + 1) // 2 - 1]]


class FitError(ConfigurationError):
    pass


def quadratic_fit(xs, ys) -> tuple:
    """Least-squares ``(c0, c1, c2)`` of ``y = c0 + c1*x + c2*x**2``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < 3:
        raise FitError("quadratic fit needs at least 3 distinct values")
    coef = np.polynomial.polynomial.polyfit(xs, ys, 2)
    return tuple(float(c) for c in coef)


@dataclass
class SweepResult:
    parameter: str
    values: list
    # function id -> list of mean finals, aligned with `values`
    means: dict
    # function id -> (c0, c1, c2)
    fits: dict

    def rows(self):
        for fid, means in self.means.items():
            c0, c1, c2 = self.fits[fid]
            for v, m in zip(self.values, means):
                yield fid, v, m, c0 + c1 * v + c2 * v * v


def parameter_sweep(
    functions=SWEEP_FUNCTIONS,
    parameter: str = "r_a",
    values: Optional[Sequence[float]] = None,
    repeats: int = 20,
    budget: int = 100_000,
    n: int = 10,
    fixed: SsaParams = SsaParams(r_a=1.0, p_c=0.7, p_m=0.1, pop_size=10),
    base_seed: int = 0,
    shifted: bool = False,
    data_seed: int = 0,
) -> SweepResult:
    """Vary one of r_a, p_c, p_m with the others held at `fixed`.

    Functions are evaluated unshifted by default. Each value's mean final
    fitness over `repeats` runs is fitted with a quadratic per function.
    """
    key = SWEEP_PARAMS.get(parameter)
    if key is None:
        raise ConfigurationError(f"cannot sweep {parameter!r}; choose r_a, p_c or p_m")
    if values is None:
        values = RA_VALUES if key == "r_a" else PROB_VALUES
    values = [float(v) for v in values]
    if len(set(values)) < 3:
        raise FitError("sweep needs at least 3 distinct values for the quadratic fit")
    if repeats < 1:
        raise ConfigurationError("repeats must be >= 1")
    # SsaParams validates on construction; fail before spending evaluations.
    for v in values:
        replace(fixed, **{key: v}, max_fe=budget)

    means, fits = {}, {}
    for fi, fid in enumerate(functions):
        if shifted:
            objective = get_objective(fid, n, seed=data_seed)
        else:
            objective = unshifted_benchmark(fid, n)
        col = []
        for vi, v in enumerate(values):
            finals = [
                run(objective, replace(fixed, **{key: v}, max_fe=budget,
                                       seed=derive_seed(base_seed, fi * len(values) + vi, k))).best_f
                for k in range(repeats)
            ]
            col.append(statistics.fmean(finals))
        fid_key = objective.id
        means[fid_key] = col
        fits[fid_key] = quadratic_fit(values, col)
    return SweepResult(key, values, means, fits)


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.2E}±{std:.2E}"


def comparison_table(candidate: dict, opponents: dict, alpha: float = 0.05, exact: bool = False):
    """Mean±std rows with rank-sum verdicts of the candidate against each opponent.

    Parameters
    ----------
    candidate : dict
        ``function -> list of final values`` for the algorithm under test.
    opponents : dict
        ``name -> {function -> list of final values}``.

    Returns
    -------
    (rows, counts)
        `rows` is a list of dicts with keys ``function``, ``candidate`` and,
        per opponent, ``name`` (mean±std) and ``name:verdict`` ("-", "+",
        "="). `counts` maps each opponent to its ``{"-": k, "+": k, "=": k}``
        tally. "-" means the candidate is significantly better.
    """
    rows = []
    counts = {name: {"-": 0, "+": 0, "=": 0} for name in opponents}
    for function, finals in candidate.items():
        s = summarize(finals)
        row = {"function": function, "candidate": format_mean_std(s.mean, s.std)}
        for name, table in opponents.items():
            if function not in table:
                continue
            theirs = table[function]
            t = summarize(theirs)
            sym = wilcoxon_rank_sum(finals, theirs, alpha, exact=exact).symbol
            row[name] = format_mean_std(t.mean, t.std)
            row[f"{name}:verdict"] = sym
            counts[name][sym] += 1
        rows.append(row)
    return rows, counts

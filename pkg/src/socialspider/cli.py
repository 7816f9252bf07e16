"""Command-line front end.

Subcommands::

    ssa run         one run; writes run.json and trace.csv
    ssa experiment  repeated runs per (function, n); summary/ECDF/trace CSVs
    ssa sweep       one-parameter sweep with quadratic fit; sweep.csv
    ssa gen-data    write a transform data file

Every subcommand accepts ``--config FILE``: flat ``key = value`` lines whose
keys are the long flag names without dashes (``trace-stride = 500``). Flags
given on the command line override the file.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

CSV schemas (comma separated, header row always present):

    trace.csv         fe,best
    summary.csv       function,n,mean,std,min,median,max,mean_std
    ecdf.csv          function,n,threshold,success_rate
    median_trace.csv  function,n,seed,fe,best
    verdicts.csv      function,n,algorithm,ssa,opponent,p_value,verdict
    sweep.csv         function,parameter,value,mean,fit

Numbers use scientific notation with 6 significant digits, except
summary.csv which uses the two-decimal ``1.00E-08`` table style.
External results for ``experiment --external`` are CSV with columns
``algorithm,function,n,final`` (``algorithm`` optional), one row per run.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from .core import ConfigurationError, SsaError, SsaParams, run
from .harness import (
    ExperimentPlan,
    FitError,
    PROB_VALUES,
    RA_VALUES,
    SWEEP_FUNCTIONS,
    format_mean_std,
    median_convergence_trace,
    parameter_sweep,
    run_experiment,
    success_ecdf,
    summarize,
    wilcoxon_rank_sum,
)
from .objectives import (
    FITNESS_FLOOR,
    generate_transform_data,
    get_objective,
    parse_function_id,
    save_transform_data,
)

DEFAULT_THRESHOLDS = tuple(10.0**k for k in range(-8, 5))


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    return f"{v:.5E}"


def _table_num(v: float) -> str:
    return f"{v:.2E}"


def _display(v: float) -> str:
    return _table_num(FITNESS_FLOOR) if v <= FITNESS_FLOOR else _num(v)


def _csv_list(text, cast=str):
    if isinstance(text, (list, tuple)):
        return [cast(t) for t in text]
    return [cast(t.strip()) for t in str(text).split(",") if t.strip()]


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file. ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def _add_common(p, *, dim_list=False):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--function", help="benchmark id, e.g. f6" + (" (comma list)" if dim_list else ""))
    p.add_argument("--dim", help="dimension" + (" (comma list)" if dim_list else ""))
    p.add_argument("--seed", help="run seed (experiments: base seed)")
    p.add_argument("--pop", help="population size (default: dim)")
    p.add_argument("--ra", help="attenuation rate r_a (default 1)")
    p.add_argument("--pc", help="mask-change base p_c (default 0.7)")
    p.add_argument("--pm", help="mask bit probability p_m (default 0.1)")
    p.add_argument("--c", help="intensity baseline C (default -1e-100)")
    p.add_argument("--budget", help="evaluations per run (default 10000*dim)")
    p.add_argument("--trace-stride", dest="trace_stride", help="evaluations between trace samples")
    p.add_argument("--data-path", dest="data_path", help="transform data file (default: $SSA_DATA_DIR)")
    p.add_argument("--data-seed", dest="data_seed", help="seed for generated transform data (default 0)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssa", description="Social Spider Algorithm runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run", description="Single run. Writes run.json and trace.csv (fe,best).")
    _add_common(p)
    p.add_argument("--target", help="stop once the best fitness is at or below this value")

    p = sub.add_parser(
        "experiment",
        help="repeated runs per cell",
        description="Repeated runs. Writes summary.csv (function,n,mean,std,min,median,max,mean_std), "
        "ecdf.csv (function,n,threshold,success_rate), median_trace.csv (function,n,seed,fe,best) and, "
        "with --external, verdicts.csv (function,n,algorithm,ssa,opponent,p_value,verdict).",
    )
    _add_common(p, dim_list=True)
    p.add_argument("--runs", help="runs per cell (default 51)")
    p.add_argument("--thresholds", help="comma-separated success thresholds")
    p.add_argument("--external", help="CSV with columns algorithm,function,n,final")
    p.add_argument("--workers", help="parallel worker processes (default 1)")

    p = sub.add_parser(
        "sweep",
        help="one-parameter sweep",
        description="Parameter sweep. Writes sweep.csv (function,parameter,value,mean,fit).",
    )
    _add_common(p, dim_list=False)
    p.add_argument("--param", help="ra, pc or pm")
    p.add_argument("--values", help="comma-separated values (default: 11-value grid)")
    p.add_argument("--repeats", help="runs per value (default 20)")
    p.add_argument("--shifted", action="store_const", const="true", help="use shifted functions")

    p = sub.add_parser("gen-data", help="write transform data", description="Write a transform data file.")
    p.add_argument("--config")
    p.add_argument("--function")
    p.add_argument("--dim")
    p.add_argument("--seed", help="data seed (default 0)")
    p.add_argument("--out", help="output file (default: $SSA_DATA_DIR/f<id>_n<n>.txt)")
    return parser


def _merged(args) -> dict:
    flags = {k.replace("_", "-"): v for k, v in vars(args).items() if k not in ("command", "config")}
    merged = {}
    if args.config:
        cfg = read_config(args.config)
        unknown = sorted(set(cfg) - set(flags))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        merged.update(cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _get(cfg, key, cast, default=None, required=False):
    if key not in cfg:
        if required:
            raise UsageError(f"--{key} is required")
        return default
    try:
        return cast(cfg[key])
    except (TypeError, ValueError):
        raise UsageError(f"--{key}: invalid value {cfg[key]!r}") from None


def _intlike(v) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError(v)
    return int(f)


def _params(cfg, n: int) -> SsaParams:
    pop = _get(cfg, "pop", _intlike, max(2, n))
    return SsaParams(
        r_a=_get(cfg, "ra", float, 1.0),
        p_c=_get(cfg, "pc", float, 0.7),
        p_m=_get(cfg, "pm", float, 0.1),
        pop_size=pop,
        c=_get(cfg, "c", float, -1e-100),
        max_fe=_get(cfg, "budget", _intlike, 10_000 * n),
        target=_get(cfg, "target", float, None),
        seed=_get(cfg, "seed", _intlike, 0),
    )


def _outdir(cfg) -> str:
    out = cfg.get("out", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_run(cfg) -> int:
    function = _get(cfg, "function", str, required=True)
    n = _get(cfg, "dim", _intlike, required=True)
    params = _params(cfg, n)
    stride = _get(cfg, "trace-stride", _intlike, None)
    objective = get_objective(function, n, seed=_get(cfg, "data-seed", _intlike, 0),
                              data_path=cfg.get("data-path"))
    out = _outdir(cfg)
    record = run(objective, params, stride)
    report = {
        "function": objective.id,
        "n": n,
        "seed": params.seed,
        "pop_size": params.pop_size,
        "budget": params.max_fe,
        "fe_used": record.fe_used,
        "r_a": params.r_a,
        "p_c": params.p_c,
        "p_m": params.p_m,
        "best_f": record.best_f,
        "best_display": _display(record.best_f),
        "best_x": [float(v) for v in record.best_x],
    }
    with open(os.path.join(out, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(os.path.join(out, "trace.csv"), ["fe", "best"], [[fe, _num(f)] for fe, f in record.trace])
    print(f"{objective.id} n={n} budget={params.max_fe} fe_used={record.fe_used} best={_display(record.best_f)}")
    return 0


def read_external(path) -> dict:
    """``{algorithm: {(function, n): [finals]}}`` from a long-format CSV."""
    table = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"function", "n", "final"} - set(reader.fieldnames or ())
            if missing:
                raise UsageError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
            for i, row in enumerate(reader, 2):
                try:
                    key = (f"f{parse_function_id(row['function'])}", int(row["n"]))
                    val = float(row["final"])
                except (ValueError, ConfigurationError) as exc:
                    raise UsageError(f"{path}:{i}: {exc}") from None
                algo = (row.get("algorithm") or "external").strip()
                table.setdefault(algo, {}).setdefault(key, []).append(val)
    except OSError as exc:
        raise UsageError(f"cannot read external results {path}: {exc}") from None
    return table


def cmd_experiment(cfg) -> int:
    functions = _get(cfg, "function", _csv_list, required=True)
    dims = _get(cfg, "dim", lambda s: _csv_list(s, _intlike), required=True)
    runs = _get(cfg, "runs", _intlike, 51)
    thresholds = _get(cfg, "thresholds", lambda s: _csv_list(s, float), list(DEFAULT_THRESHOLDS))
    if sorted(thresholds) != thresholds:
        raise UsageError("--thresholds must be ascending")
    external = read_external(cfg["external"]) if "external" in cfg else None

    cells = []
    for f in functions:
        fid = f"f{parse_function_id(f)}"
        cells.extend((fid, n) for n in dims)
    template = _params(cfg, 2)
    plan = ExperimentPlan(
        cells=tuple(cells),
        runs=runs,
        budget_per_dim=10_000,
        pop_size=_get(cfg, "pop", _intlike, None),
        params=template,
        base_seed=template.seed,
        trace_stride=_get(cfg, "trace-stride", _intlike, None),
        data_seed=_get(cfg, "data-seed", _intlike, 0),
        data_path=cfg.get("data-path"),
        workers=_get(cfg, "workers", _intlike, 1),
    )
    budget = _get(cfg, "budget", _intlike, None)
    if budget is not None:
        if len(set(dims)) != 1:
            raise UsageError("--budget with several dimensions is ambiguous; use one --dim")
        plan = replace(plan, budget_per_dim=max(1, budget // dims[0]))
    out = _outdir(cfg)
    results = run_experiment(plan)

    summary, ecdf, traces, verdicts = [], [], [], []
    failed = False
    for cell in results:
        if cell.error:
            print(f"{cell.function} n={cell.n}: {cell.error}", file=sys.stderr)
            failed = True
            continue
        s = summarize(cell.records)
        summary.append([cell.function, cell.n, _table_num(s.mean), _table_num(s.std), _table_num(s.min),
                        _table_num(s.median), _table_num(s.max), format_mean_std(s.mean, s.std)])
        ecdf.extend([cell.function, cell.n, _num(t), f"{r:.6f}"] for t, r in success_ecdf(cell.records, thresholds))
        med = median_convergence_trace(cell.records)
        traces.extend([cell.function, cell.n, med.seed, fe, _num(f)] for fe, f in med.trace)
        if external:
            for algo, table in sorted(external.items()):
                theirs = table.get((cell.function, cell.n))
                if not theirs:
                    continue
                t = summarize(theirs)
                res = wilcoxon_rank_sum(cell.finals, theirs)
                verdicts.append([cell.function, cell.n, algo, format_mean_std(s.mean, s.std),
                                 format_mean_std(t.mean, t.std), _num(res.p_value), res.symbol])
        print(f"{cell.function} n={cell.n}: {format_mean_std(s.mean, s.std)}")

    _write_csv(os.path.join(out, "summary.csv"),
               ["function", "n", "mean", "std", "min", "median", "max", "mean_std"], summary)
    _write_csv(os.path.join(out, "ecdf.csv"), ["function", "n", "threshold", "success_rate"], ecdf)
    _write_csv(os.path.join(out, "median_trace.csv"), ["function", "n", "seed", "fe", "best"], traces)
    if external is not None:
        _write_csv(os.path.join(out, "verdicts.csv"),
                   ["function", "n", "algorithm", "ssa", "opponent", "p_value", "verdict"], verdicts)
    return 1 if failed else 0


def cmd_sweep(cfg) -> int:
    param = _get(cfg, "param", str, "ra")
    key = {"ra": "r_a", "r_a": "r_a", "pc": "p_c", "p_c": "p_c", "pm": "p_m", "p_m": "p_m"}.get(param)
    if key is None:
        raise UsageError(f"--param must be ra, pc or pm, got {param!r}")
    default_values = RA_VALUES if key == "r_a" else PROB_VALUES
    values = _get(cfg, "values", lambda s: _csv_list(s, float), list(default_values))
    if len(set(values)) < 3:
        raise UsageError("--values needs at least 3 distinct values for the quadratic fit")
    functions = _get(cfg, "function", _csv_list, [f"f{f}" for f in SWEEP_FUNCTIONS])
    n = _get(cfg, "dim", _intlike, 10)
    fixed = _params(cfg, n)
    fixed = replace(fixed, pop_size=_get(cfg, "pop", _intlike, 10))
    budget = _get(cfg, "budget", _intlike, 100_000)
    out = _outdir(cfg)
    result = parameter_sweep(
        functions=[parse_function_id(f) for f in functions],
        parameter=key,
        values=values,
        repeats=_get(cfg, "repeats", _intlike, 20),
        budget=budget,
        n=n,
        fixed=fixed,
        base_seed=fixed.seed,
        shifted=cfg.get("shifted", "false").lower() in ("1", "true", "yes"),
        data_seed=_get(cfg, "data-seed", _intlike, 0),
    )
    rows = [[fid, key, _num(v), _num(m), _num(fit)] for fid, v, m, fit in result.rows()]
    _write_csv(os.path.join(out, "sweep.csv"), ["function", "parameter", "value", "mean", "fit"], rows)
    for fid, (c0, c1, c2) in result.fits.items():
        print(f"{fid}: fit c0={c0:.4g} c1={c1:.4g} c2={c2:.4g}")
    return 0


def cmd_gen_data(cfg) -> int:
    fid = parse_function_id(_get(cfg, "function", str, required=True))
    n = _get(cfg, "dim", _intlike, required=True)
    if n < 1:
        raise UsageError("--dim must be >= 1")
    seed = _get(cfg, "seed", _intlike, 0)
    path = cfg.get("out")
    if path is None:
        data_dir = os.environ.get("SSA_DATA_DIR")
        if not data_dir:
            raise UsageError("give --out or set SSA_DATA_DIR")
        path = os.path.join(data_dir, f"f{fid}_n{n}.txt")
    chain = generate_transform_data(fid, n, seed)
    try:
        save_transform_data(path, fid, chain, n)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "sweep": cmd_sweep, "gen-data": cmd_gen_data}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merged(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, FitError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SsaError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit status is 0 on success, 2 when an input fails validation and 3 when an
allocation problem has no feasible solution.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .allocator import solve_dao_exact, solve_dao_heuristic
from .catalog import MODES, SplitSpec, build_catalog, catalog_problem_from_dict
from .core import InfeasibleError
from .harness import (
    WINDOWS,
    ExperimentReport,
    PipelineConfig,
    SweepResult,
    reports_csv,
    run_pipeline,
    sweep_training_window,
)
from .synthgen import ScenarioConfig, dumps, generate_scenario, read_scenario, write_scenario

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3

log = logging.getLogger("workalloc")


def load_config(path):
    """Read a JSON config with optional ``scenario``, ``pipeline`` and ``sweep`` sections.

    A file without any of those keys is taken to be a bare scenario section.
    """
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    sections = {"scenario", "pipeline", "sweep"}
    if not sections & set(data):
        return {"scenario": data}
    unknown = set(data) - sections
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return data


def scenario_config(cfg, seed=None):
    sc = ScenarioConfig.from_dict(cfg.get("scenario", {}))
    return sc if seed is None else sc.replace(seed=seed)


def pipeline_config(cfg, **overrides):
    pc = PipelineConfig.from_dict(cfg.get("pipeline", {}))
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(pc, **overrides) if overrides else pc


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _report_path(out_dir, report):
    return Path(out_dir) / "reports" / f"seed{report.seed:04d}-window{report.window:02d}.json"


def cmd_generate(args):
    cfg = load_config(args.config)
    sc = scenario_config(cfg, args.seed)
    scenario, truth = generate_scenario(sc)
    out = write_scenario(scenario, truth, args.out, sc)
    log.info("wrote %d records and %d tasks to %s", len(scenario.records), len(scenario.tasks), out)
    print(out)


def cmd_train(args):
    cfg = load_config(args.config)
    pc = pipeline_config(cfg)
    scenario, _ = read_scenario(args.scenario)
    split = SplitSpec(train_months=args.window, test_months=pc.test_months,
                      min_test_reviews=pc.min_test_reviews)
    catalog = build_catalog(
        scenario.records, scenario.tasks, split, mode=args.mode,
        config=replace(pc.catalog, seed=args.seed),
        history_months=scenario.history_months, days_per_month=scenario.days_per_month,
        capacity=scenario.roster.capacity, roster_ids=scenario.roster.worker_ids,
    )
    out = args.out or Path(args.scenario) / f"catalog-{args.mode}-{args.window:02d}m.json"
    _write(out, dumps(catalog.to_dict()))
    if out != "-":
        print(out)


def solver_report(problem, sol, kinds):
    """JSON-ready solver output with sparse x/y/z lists."""
    wids = problem.roster.worker_ids
    tids = [t.id for t in problem.tasks]
    assign, models = sol.assignment, sol.models
    return {
        "objective": sol.objective,
        "status": sol.status,
        "bound": sol.bound,
        "gap": sol.gap,
        "nodes": sol.nodes,
        "wall_time": sol.wall_time,
        "x": [[wids[int(assign[j])], tids[j]] for j in range(len(tids))],
        "y": [[wids[i], kinds[int(m)]] for i, m in enumerate(models)],
        "z": [[wids[int(assign[j])], tids[j], kinds[int(models[assign[j]])]] for j in range(len(tids))],
    }


def cmd_allocate(args):
    doc = json.loads(Path(args.catalog).read_text())
    problem = catalog_problem_from_dict(doc)
    if args.solver == "exact":
        sol = solve_dao_exact(problem, node_limit=args.node_limit, seed=args.seed)
    else:
        sol = solve_dao_heuristic(problem, seed=args.seed)
    _write(args.out, json.dumps(solver_report(problem, sol, doc["kinds"]), sort_keys=True, indent=1))


def cmd_run(args):
    cfg = load_config(args.config)
    pc = pipeline_config(cfg, window=args.window, timing=args.timing or None)
    scenario, truth = read_scenario(args.scenario)
    report = run_pipeline(scenario, truth, pc, seed=args.seed)
    if args.out:
        _write(_report_path(args.out, report), report.to_json())
    else:
        _write(None, report.to_json())


def cmd_sweep(args):
    cfg = load_config(args.config)
    sc = scenario_config(cfg)
    pc = pipeline_config(cfg, timing=args.timing or None)
    sweep_cfg = cfg.get("sweep", {})
    windows = tuple(args.windows or sweep_cfg.get("windows", WINDOWS))
    first_seed = sweep_cfg.get("first_seed", 0)
    seeds = range(first_seed, first_seed + args.seeds)
    t0 = time.perf_counter()

    def progress(seed, window, report):
        log.info("seed %d window %d done (%.1fs)", seed, window, time.perf_counter() - t0)
        if args.out:
            _write(_report_path(args.out, report), report.to_json())

    result = sweep_training_window(sc, pc, windows=windows, seeds=seeds, progress=progress)
    summary = json.dumps(result.summary(), sort_keys=True, indent=1)
    if args.out:
        _write(Path(args.out) / "summary.json", summary)
        _write(Path(args.out) / "results.csv", result.csv())
        print(args.out)
    else:
        _write(None, summary)


def _load_reports(in_dir):
    d = Path(in_dir)
    files = sorted((d / "reports").glob("*.json")) if (d / "reports").is_dir() else sorted(d.glob("*.json"))
    reports = []
    for f in files:
        data = json.loads(f.read_text())
        if isinstance(data, dict) and "methods" in data:
            reports.append(ExperimentReport.from_dict(data))
    if not reports:
        raise ValueError(f"no experiment reports found in {in_dir}")
    reports.sort(key=lambda r: (r.seed, r.window))
    return reports


def cmd_report(args):
    reports = _load_reports(args.inp)
    if args.format == "csv":
        _write(args.out, reports_csv(reports))
        return
    windows = tuple(sorted({r.window for r in reports}))
    seeds = tuple(sorted({r.seed for r in reports}))
    summary = SweepResult(windows, seeds, reports).summary()
    doc = {"summary": summary, "reports": [r.to_dict() for r in reports]}
    _write(args.out, json.dumps(doc, sort_keys=True, indent=1))


def build_parser():
    p = argparse.ArgumentParser(prog="workalloc", description="Decision-aware workforce allocation experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic scenario directory")
    g.add_argument("--config", help="JSON config (scenario section or bare scenario fields)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, help="override the master seed")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model catalog for one mode and window")
    t.add_argument("--scenario", required=True, help="scenario directory")
    t.add_argument("--mode", required=True, choices=sorted(MODES))
    t.add_argument("--window", type=int, required=True, help="training window in months")
    t.add_argument("--config", help="JSON config with an optional pipeline section")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", help="catalog JSON path ('-' for stdout)")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("allocate", help="solve the allocation problem stored in a catalog")
    a.add_argument("--catalog", required=True)
    a.add_argument("--solver", choices=("exact", "heuristic"), default="exact")
    a.add_argument("--node-limit", type=int, default=10**6)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", help="solver report path (default stdout)")
    a.set_defaults(func=cmd_allocate)

    r = sub.add_parser("run", help="run the full pipeline on one scenario")
    r.add_argument("--scenario", required=True)
    r.add_argument("--config")
    r.add_argument("--window", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--timing", action="store_true", help="record wall times (reports stop being reproducible)")
    r.add_argument("--out", help="output directory (default: report JSON on stdout)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="training-window sweep over seeds")
    s.add_argument("--config", help="JSON config with scenario/pipeline/sweep sections")
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--windows", type=int, nargs="+")
    s.add_argument("--timing", action="store_true", help="record wall times (reports stop being reproducible)")
    s.add_argument("--out", help="output directory (default: summary JSON on stdout)")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="collect stored reports as CSV or JSON")
    rp.add_argument("--in", dest="inp", required=True, help="directory written by run or sweep")
    rp.add_argument("--format", choices=("json", "csv"), default="csv")
    rp.add_argument("--out", help="output path (default stdout)")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, KeyError, TypeError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

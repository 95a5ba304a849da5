"""End-to-end experiments: catalogs, solvers, random baseline and reports."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .allocator import (
    DayDecomposition,
    random_policy_value,
    solve_dao_exact,
    solve_dao_heuristic,
    solve_dpo,
    solve_uao,
)
from .catalog import (
    AGGREGATE,
    INDIVIDUAL,
    KINDS,
    PROFILE,
    CatalogConfig,
    SplitSpec,
    build_catalog,
    sub_seed,
)
from .core import objective_of
from .synthgen import GroundTruth, ScenarioConfig, generate_scenario, realized_value

METHODS = ("dpo", "uao-individual", "uao-aggregate", "uao-profile", "dao-exact", "dao-heuristic")
UAO_KIND = {"uao-individual": INDIVIDUAL, "uao-aggregate": AGGREGATE, "uao-profile": PROFILE}
CSV_COLUMNS = ("method", "window", "seed", "objective", "realized", "pct_improvement", "auc", "wall_ms")
WINDOWS = (3, 6, 9, 12, 15, 18)

# real-data medians from the insurer study, kept for side-by-side display only:
# (standard-scaled task value, aggregate-model raw prediction) per selected kind
REFERENCE_MEDIANS = {
    INDIVIDUAL: (0.001, 0.489),
    AGGREGATE: (-1.208, 0.637),
    PROFILE: (-0.328, 0.576),
}

# forest tuning budget used by experiments; library defaults keep the full budget
EXPERIMENT_CATALOG = CatalogConfig(n_trees=100, cv_trees=25, forest_cv_folds=5, leaf_grid=(10, 25, 50, 100))


@dataclass(frozen=True)
class PipelineConfig:
    window: int = 12
    methods: tuple = METHODS
    test_months: int = 3
    min_test_reviews: int = 50
    catalog: CatalogConfig = EXPERIMENT_CATALOG
    node_limit: int = 3_000
    heuristic_restarts: int = 4
    random_samples: int = 10_000
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown or empty methods {bad}; expected a subset of {METHODS}")
        if self.random_samples < 2:
            raise ValueError("random_samples must be >= 2 for a standard error")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")

    @property
    def split(self):
        return SplitSpec(train_months=self.window, test_months=self.test_months,
                         min_test_reviews=self.min_test_reviews)

    @property
    def kinds(self):
        """Model families the requested methods need."""
        need = set()
        for m in self.methods:
            need |= {UAO_KIND[m]} if m in UAO_KIND else set(KINDS)
        return tuple(k for k in KINDS if k in need)

    def to_dict(self):
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["catalog"]["lambda_grid"] = list(self.catalog.lambda_grid)
        d["catalog"]["leaf_grid"] = list(self.catalog.leaf_grid)
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown pipeline config fields: {sorted(unknown)}")
        if "catalog" in data:
            cat = dict(data["catalog"])
            bad = set(cat) - {f.name for f in fields(CatalogConfig)}
            if bad:
                raise ValueError(f"unknown catalog config fields: {sorted(bad)}")
            for key in ("lambda_grid", "leaf_grid"):
                if key in cat:
                    cat[key] = tuple(cat[key])
            data["catalog"] = replace(EXPERIMENT_CATALOG, **cat)
        if "methods" in data:
            data["methods"] = tuple(data["methods"])
        return cls(**data)


def pct_improvement(objective, random_mean):
    if random_mean == 0:
        raise ValueError("random baseline mean is zero; percentage improvement undefined")
    return 100.0 * (objective - random_mean) / abs(random_mean)


@dataclass
class ExperimentReport:
    seed: int
    window: int
    methods: dict  # method -> row dict
    random: dict
    auc: dict  # kind -> weighted test AUC
    worker_auc: dict  # kind -> {worker: auc or None}
    selection: dict | None
    allocation: dict | None
    correlation: dict
    workers: list
    excluded: list
    n_tasks: int
    oracle: dict | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def csv_rows(self):
        for name in METHODS:
            if name in self.methods:
                row = self.methods[name]
                yield {
                    "method": name,
                    "window": self.window,
                    "seed": self.seed,
                    "objective": row["objective"],
                    "realized": row["realized"],
                    "pct_improvement": row["pct_improvement"],
                    "auc": row["auc"],
                    "wall_ms": row["wall_ms"],
                }


def write_csv(rows, handle):
    writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if r[k] is None else (repr(r[k]) if isinstance(r[k], float) else r[k])
                         for k in CSV_COLUMNS})


def reports_csv(reports):
    buf = io.StringIO()
    write_csv((row for rep in reports for row in rep.csv_rows()), buf)
    return buf.getvalue()


def model_selection_profile(solution, kinds):
    """Number of workers whose selected model is each kind; sums to the worker count."""
    counts = {k: 0 for k in KINDS}
    for m in solution.models:
        counts[kinds[int(m)]] += 1
    return counts


def allocation_statistics(solution, catalog):
    """Medians of scaled task value and aggregate raw prediction, by the assigned worker's model kind.

    Kinds no task was assigned under are left out rather than reported as zero.
    """
    v = np.array([t.value for t in catalog.tasks])
    sd = v.std()
    scaled = (v - v.mean()) / (sd if sd > 0 else 1.0)
    kind_of_task = np.array(catalog.kinds)[solution.models[solution.assignment]]
    out = {}
    for kind in KINDS:
        mask = kind_of_task == kind
        if not mask.any():
            continue
        row = {"n_tasks": int(mask.sum()), "median_scaled_value": float(np.median(scaled[mask]))}
        if catalog.aggregate_raw is not None:
            agg = catalog.aggregate_raw[mask]
            row["median_aggregate_prediction"] = float(np.median(agg))
            row["median_consensus_margin"] = float(np.median(np.abs(agg - 0.5)))
        out[kind] = row
    return out


def pearson(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.size < 2 or a.std() == 0 or b.std() == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def _selected_auc(catalog, solution):
    """Test AUC of each worker's selected model, weighted by test rows."""
    num = den = 0.0
    for i, w in enumerate(catalog.worker_ids):
        auc, n = catalog.test_auc[catalog.kinds[int(solution.models[i])]][w]
        if auc is not None:
            num += auc * n
            den += n
    return num / den if den else None


def _clock(timing):
    return time.perf_counter() if timing else None


def _elapsed_ms(t0):
    return None if t0 is None else 1000.0 * (time.perf_counter() - t0)


def run_pipeline(scenario, truth: GroundTruth | None = None, config: PipelineConfig = PipelineConfig(),
                 seed: int = 0) -> ExperimentReport:
    """Train the catalog for one window, run every requested method and fill a report.

    Objectives are each method's predicted value under its own adjusted
    expectations; the random baseline draws models and feasible assignments
    uniformly over every family the run trained. Wall times are recorded only
    when ``config.timing`` is set so that reports stay byte-identical.
    """
    cat_cfg = replace(config.catalog, seed=sub_seed(seed, 11))
    catalog = build_catalog(
        scenario.records, scenario.tasks, config.split, mode=config.kinds, config=cat_cfg,
        history_months=scenario.history_months, days_per_month=scenario.days_per_month,
        capacity=scenario.roster.capacity, roster_ids=scenario.roster.worker_ids,
    )
    problem = catalog.problem()
    rand_mean, rand_se = random_policy_value(problem, config.random_samples, sub_seed(seed, 12))
    solver_seed = sub_seed(seed, 13)

    def realized(sol):
        if truth is None:
            return None
        return realized_value(sol, truth, catalog.tasks, catalog.worker_ids)

    methods = {}
    dao_solution = heuristic = None
    heuristic_ms = 0.0
    dd = DayDecomposition(problem)
    for name in METHODS:
        if name not in config.methods:
            continue
        t0 = _clock(config.timing)
        extra = {}
        if name in UAO_KIND:
            kind = UAO_KIND[name]
            sub = catalog.restrict((kind,))
            sol = solve_uao(sub.problem())
            objective, auc = sol.objective, catalog.weighted_auc(kind)
        elif name == "dpo":
            # the family a practitioner would pick by test AUC, thresholded to 0/1
            kind = max(catalog.kinds, key=lambda k: (catalog.weighted_auc(k) or 0.0, -KINDS.index(k)))
            sub = catalog.restrict((kind,))
            sol = solve_dpo(sub.problem(), sub.raw[:, :, 0] >= cat_cfg.threshold)
            objective = objective_of(sub.problem(), sol.assignment, np.zeros(len(catalog.worker_ids)))
            auc = catalog.weighted_auc(kind)
            extra = {"family": kind, "deterministic_objective": sol.objective}
        else:
            if heuristic is None:
                h0 = time.perf_counter()
                heuristic = solve_dao_heuristic(problem, restarts=config.heuristic_restarts,
                                                seed=solver_seed, decomposition=dd)
                heuristic_ms = 1000.0 * (time.perf_counter() - h0)
            if name == "dao-exact":
                sol = solve_dao_exact(problem, node_limit=config.node_limit, incumbent=heuristic,
                                      decomposition=dd)
                extra = {"bound": sol.bound, "nodes": sol.nodes,
                         "root_bound": sol.info["root_bound"]}
            else:
                sol = heuristic
            objective, auc = sol.objective, _selected_auc(catalog, sol)
            extra["selection"] = model_selection_profile(sol, catalog.kinds)
            if dao_solution is None or name == "dao-exact":
                dao_solution = sol
        wall_ms = _elapsed_ms(t0)
        if wall_ms is not None and name == "dao-heuristic":
            wall_ms = heuristic_ms  # computed once, inside the exact solve's clock
        methods[name] = {
            "objective": float(objective),
            "realized": realized(sol),
            "pct_improvement": pct_improvement(objective, rand_mean),
            "auc": auc,
            "wall_ms": wall_ms,
            "status": sol.status,
            **extra,
        }

    oracle = None
    if truth is not None:
        rows = [truth.worker_ids.index(w) for w in catalog.worker_ids]
        acc = truth.acceptance(np.array([t.features for t in catalog.tasks]))[rows]
        best = solve_uao(problem.with_expectation(acc[:, :, None], n_models=np.ones(len(rows), dtype=np.int64),
                                                  model_kinds=()))
        oracle = {"realized": realized(best)}

    correlation = {}
    v = np.array([t.value for t in catalog.tasks])
    if INDIVIDUAL in catalog.kinds:
        correlation["predicted"] = pearson(catalog.raw[:, :, catalog.kinds.index(INDIVIDUAL)].var(axis=0), v)
    if truth is not None:
        acc = truth.acceptance(np.array([t.features for t in catalog.tasks]))
        correlation["true"] = pearson(acc.var(axis=0), v)

    return ExperimentReport(
        seed=int(seed),
        window=config.window,
        methods=methods,
        random={"mean": rand_mean, "std_error": rand_se, "n_samples": config.random_samples},
        auc={k: catalog.weighted_auc(k) for k in catalog.kinds},
        worker_auc={k: {w: a for w, (a, _) in v_.items()} for k, v_ in catalog.test_auc.items()},
        selection=None if dao_solution is None else model_selection_profile(dao_solution, catalog.kinds),
        allocation=None if dao_solution is None else allocation_statistics(dao_solution, catalog),
        correlation=correlation,
        workers=list(catalog.worker_ids),
        excluded=list(catalog.excluded),
        n_tasks=len(catalog.tasks),
        oracle=oracle,
        config=config.to_dict(),
    )


# -- sweeps ------------------------------------------------------------------

def _median(xs):
    xs = [x for x in xs if x is not None]
    return float(np.median(xs)) if xs else None


@dataclass
class SweepResult:
    windows: tuple
    seeds: tuple
    reports: list  # ExperimentReport, ordered by (seed, window)

    def by_window(self, window):
        return [r for r in self.reports if r.window == window]

    def table(self):
        """Median over seeds per (window, method) of improvement, AUC and objective."""
        rows = []
        for w in self.windows:
            reps = self.by_window(w)
            for name in METHODS:
                have = [r.methods[name] for r in reps if name in r.methods]
                if not have:
                    continue
                rows.append({
                    "window": w,
                    "method": name,
                    "median_pct_improvement": _median([m["pct_improvement"] for m in have]),
                    "median_auc": _median([m["auc"] for m in have]),
                    "median_objective": _median([m["objective"] for m in have]),
                    "median_realized": _median([m["realized"] for m in have]),
                    "n_seeds": len(have),
                })
        return rows

    def selection_shares(self):
        """Median share of workers on each kind, per window."""
        out = {}
        for w in self.windows:
            shares = {k: [] for k in KINDS}
            for r in self.by_window(w):
                if r.selection is None:
                    continue
                total = sum(r.selection.values())
                for k in KINDS:
                    shares[k].append(r.selection[k] / total)
            out[w] = {k: _median(v) for k, v in shares.items()}
        return out

    def consensus_margins(self):
        """Median over all reports of the per-kind median |aggregate prediction - 0.5|."""
        vals = {k: [] for k in KINDS}
        for r in self.reports:
            for k, row in (r.allocation or {}).items():
                if "median_consensus_margin" in row:
                    vals[k].append(row["median_consensus_margin"])
        return {k: _median(v) for k, v in vals.items()}

    def correlations(self):
        return {key: _median([r.correlation.get(key) for r in self.reports]) for key in ("predicted", "true")}

    def trends(self):
        """The qualitative checks from the window study, each computed on medians over seeds."""
        tab = {(r["window"], r["method"]): r for r in self.table()}
        lo, hi = min(self.windows), max(self.windows)

        def imp(w, m):
            row = tab.get((w, m))
            return None if row is None else row["median_pct_improvement"]

        out = {}
        beats = [imp(w, m) for w in self.windows for m in METHODS if (w, m) in tab]
        out["all_methods_beat_random"] = bool(beats) and all(b is not None and b > 0 for b in beats)
        p_lo, i_lo = imp(lo, "uao-profile"), imp(lo, "uao-individual")
        p_hi, i_hi = imp(hi, "uao-profile"), imp(hi, "uao-individual")
        if None not in (p_lo, i_lo, p_hi, i_hi):
            out["profile_ge_individual_at_smallest"] = p_lo >= i_lo
            out["individual_ge_profile_at_largest"] = i_hi >= p_hi
        shares = [self.selection_shares()[w][INDIVIDUAL] for w in self.windows]
        if None not in shares:
            out["individual_share_endpoints"] = shares[-1] >= shares[0]
            out["individual_share_nondecreasing"] = all(b >= a for a, b in zip(shares, shares[1:]))
        corr = self.correlations()["predicted"]
        if corr is not None:
            out["disagreement_value_correlation_positive"] = corr > 0
        return out

    def summary(self):
        return {
            "windows": list(self.windows),
            "seeds": list(self.seeds),
            "table": self.table(),
            "selection_shares": {str(k): v for k, v in self.selection_shares().items()},
            "consensus_margins": self.consensus_margins(),
            "correlations": self.correlations(),
            "trends": self.trends(),
            "reference_medians": {k: list(v) for k, v in REFERENCE_MEDIANS.items()},
        }

    def csv(self):
        return reports_csv(self.reports)


def sweep_training_window(scenario_config: ScenarioConfig, pipeline: PipelineConfig = PipelineConfig(),
                          windows=WINDOWS, seeds=range(20), progress=None) -> SweepResult:
    """One generated scenario per seed, every window run on it, in (seed, window) order."""
    windows, seeds = tuple(windows), tuple(seeds)
    need = max(windows) + pipeline.test_months
    if scenario_config.history_months < need:
        raise ValueError(f"history of {scenario_config.history_months} months < {need} needed for the "
                         f"largest window plus the test split")
    reports = []
    for s in seeds:
        scenario, truth = generate_scenario(scenario_config.replace(seed=s))
        for w in windows:
            rep = run_pipeline(scenario, truth, replace(pipeline, window=w), seed=s)
            reports.append(rep)
            if progress is not None:
                progress(s, w, rep)
    return SweepResult(windows, seeds, reports)

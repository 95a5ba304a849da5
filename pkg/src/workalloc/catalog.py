"""Candidate behavior models per worker and the adjusted expectation tensor.

Three families are trained from the historical split: an individual ridge
logistic model per worker, one aggregate random forest over everyone, and
ridge logistic "profile" models over k-means clusters of workers grouped by
how they deviate from the aggregate model. Each (worker, model) pair gets a
PPV and FOR measured on that worker's test slice, and raw probabilities are
mapped to ``ppv * p + for * (1 - p)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import AllocationProblem, WorkerRoster
from .learners import (
    LAMBDA_GRID,
    UndefinedAUCError,
    confusion_rates,
    cross_validate,
    kmeans,
    roc_auc,
    train_forest,
    train_logistic,
)
from .learners.preprocess import Standardizer

log = logging.getLogger(__name__)

INDIVIDUAL, AGGREGATE, PROFILE = "individual", "aggregate", "profile"
KINDS = (INDIVIDUAL, AGGREGATE, PROFILE)
MODES = {
    "uao-individual": (INDIVIDUAL,),
    "uao-aggregate": (AGGREGATE,),
    "uao-profile": (PROFILE,),
    "dao": KINDS,
}
THRESHOLD = 0.5


def sub_seed(seed, *keys):
    """Stable integer seed derived from ``seed`` and integer keys."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass(frozen=True)
class SplitSpec:
    """Chronological windows in months: train < test < optimization."""

    train_months: int = 12
    test_months: int = 3
    opt_months: int = 1
    min_test_reviews: int = 50

    def __post_init__(self):
        if self.train_months < 1 or self.test_months < 1 or self.opt_months < 1:
            raise ValueError("all windows must span at least one month")

    def windows(self, history_months):
        """(train month range, test month range) within a history of ``history_months``."""
        test = (history_months - self.test_months, history_months)
        train = (test[0] - self.train_months, test[0])
        if train[0] < 0:
            raise ValueError(
                f"history of {history_months} months cannot hold {self.train_months} train "
                f"+ {self.test_months} test months"
            )
        return train, test


@dataclass(frozen=True)
class CatalogConfig:
    lambda_grid: tuple = LAMBDA_GRID
    leaf_grid: tuple = (5, 10, 25, 50)
    n_trees: int = 200
    cv_folds: int = 10
    # forest tuning budget; None means the full n_trees / cv_folds
    cv_trees: int | None = None
    forest_cv_folds: int | None = None
    alpha: float = 1.0
    threshold: float = THRESHOLD
    kmeans_restarts: int = 10
    k_override: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class CandidateModel:
    kind: str
    predictor: object
    owner: str | int | None = None  # worker id, cluster id, or None for the aggregate
    hyper: float | None = None
    n_train: int = 0

    def predict_proba(self, X):
        return self.predictor.predict_proba(X)


@dataclass
class SplitData:
    """Per-worker standardized train/test arrays after the exclusion filters."""

    worker_ids: tuple
    train: dict  # worker -> (X, y)
    test: dict
    scaler: Standardizer
    excluded: tuple = ()

    def pooled(self, workers=None):
        workers = self.worker_ids if workers is None else workers
        X = np.vstack([self.train[w][0] for w in workers])
        y = np.concatenate([self.train[w][1] for w in workers])
        return X, y


def prepare_split(records, split: SplitSpec, history_months, days_per_month):
    """Partition records by month, apply exclusion filters and fit the scaler on train rows."""
    (tr0, tr1), (te0, te1) = split.windows(history_months)
    by_worker_train, by_worker_test = {}, {}
    order = []
    for r in records:
        month = r.task.day // days_per_month
        if r.worker_id not in by_worker_train:
            by_worker_train[r.worker_id] = []
            by_worker_test[r.worker_id] = []
            order.append(r.worker_id)
        if tr0 <= month < tr1:
            by_worker_train[r.worker_id].append(r)
        elif te0 <= month < te1:
            by_worker_test[r.worker_id].append(r)

    kept, excluded = [], []
    for w in sorted(order):
        if len(by_worker_test[w]) < split.min_test_reviews:
            log.info("excluding %s: %d test reviews < %d", w, len(by_worker_test[w]), split.min_test_reviews)
            excluded.append(w)
        elif not by_worker_train[w]:
            log.info("excluding %s: no training records", w)
            excluded.append(w)
        else:
            kept.append(w)
    if not kept:
        raise ValueError("no worker passes the exclusion filters")

    def arrays(rows):
        return (np.array([r.task.features for r in rows], dtype=np.float64),
                np.array([r.decision for r in rows], dtype=np.int64))

    raw_train = {w: arrays(by_worker_train[w]) for w in kept}
    scaler = Standardizer.fit(np.vstack([raw_train[w][0] for w in kept]))
    train = {w: (scaler.transform(X), y) for w, (X, y) in raw_train.items()}
    test = {}
    for w in kept:
        X, y = arrays(by_worker_test[w])
        test[w] = (scaler.transform(X), y)
    return SplitData(tuple(kept), train, test, scaler, tuple(excluded))


def _fit_logistic(X, y, lam):
    return train_logistic(X, y, lam)


def _tuned_logistic(X, y, config, cv_seed):
    folds = min(config.cv_folds, y.size)
    if folds >= 2 and 0 < y.sum() < y.size:
        lam = cross_validate(X, y, config.lambda_grid, _fit_logistic, folds=folds, seed=cv_seed)
    else:
        lam = max(config.lambda_grid)
    return lam, train_logistic(X, y, lam)


def build_individual_models(data: SplitData, config: CatalogConfig = CatalogConfig()):
    """One tuned ridge logistic model per retained worker, keyed by worker id."""
    cv_seed = sub_seed(config.seed, 1)
    out = {}
    for w in data.worker_ids:
        X, y = data.train[w]
        lam, model = _tuned_logistic(X, y, config, cv_seed)
        out[w] = CandidateModel(INDIVIDUAL, model, owner=w, hyper=lam, n_train=y.size)
    return out


def build_aggregate_model(data: SplitData, config: CatalogConfig = CatalogConfig()):
    """A random forest on all workers' pooled training rows, leaf size tuned by CV."""
    X, y = data.pooled()
    if y.size < 2 * min(config.leaf_grid):
        raise ValueError(f"{y.size} pooled rows < 2 * min leaf size {min(config.leaf_grid)}")
    forest_seed = sub_seed(config.seed, 2)

    def fit(Xf, yf, leaf, n_trees=config.cv_trees or config.n_trees):
        return train_forest(Xf, yf, min_samples_leaf=int(leaf), n_trees=n_trees, seed=forest_seed)

    grid = [g for g in config.leaf_grid if 2 * g <= y.size] or [min(config.leaf_grid)]
    folds = min(config.forest_cv_folds or config.cv_folds, y.size)
    leaf = cross_validate(X, y, grid, fit, folds=folds, seed=sub_seed(config.seed, 3)) if folds >= 2 else grid[0]
    model = fit(X, y, leaf, config.n_trees)
    return CandidateModel(AGGREGATE, model, owner=None, hyper=float(leaf), n_train=y.size)


def default_cluster_count(train_months):
    """Six clusters for windows of six months or more, four below that."""
    return 6 if train_months >= 6 else 4


@dataclass
class ProfileResult:
    assignments: dict  # worker -> cluster id
    models: dict  # cluster id -> CandidateModel
    rates: np.ndarray  # (workers, 2) in-sample (TPR, TNR) against the aggregate model
    k: int
    inertia: float


def behavior_rates(data: SplitData, aggregate: CandidateModel, alpha=1.0, threshold=THRESHOLD):
    """In-sample (TPR, TNR) of the aggregate model's thresholded predictions, per worker."""
    rows = []
    for w in data.worker_ids:
        X, y = data.train[w]
        pred = (aggregate.predict_proba(X) >= threshold).astype(np.int64)
        m = confusion_rates(pred, y, alpha)
        rows.append((m.tpr, m.tnr))
    return np.array(rows)


def build_profile_models(data: SplitData, aggregate: CandidateModel, train_months: int,
                         config: CatalogConfig = CatalogConfig(), k_override=None):
    """Cluster workers on (TPR, TNR) against the aggregate, then fit one ridge model per cluster."""
    rates = behavior_rates(data, aggregate, config.alpha, config.threshold)
    k = k_override or config.k_override or default_cluster_count(train_months)
    k = min(k, len(data.worker_ids))
    km = kmeans(rates, k, seed=sub_seed(config.seed, 4), n_init=config.kmeans_restarts)
    assignments = {w: int(c) for w, c in zip(data.worker_ids, km.labels)}
    cv_seed = sub_seed(config.seed, 5)
    models = {}
    for c in range(k):
        members = [w for w in data.worker_ids if assignments[w] == c]
        if not members:
            continue
        X, y = data.pooled(members)
        if y.size == 0:
            raise RuntimeError(f"cluster {c} has members but no rows")
        lam, model = _tuned_logistic(X, y, config, cv_seed)
        models[c] = CandidateModel(PROFILE, model, owner=c, hyper=lam, n_train=y.size)
    return ProfileResult(assignments, models, rates, k, km.inertia)


def estimate_conditional_rates(model, X_test, y_test, threshold=THRESHOLD, alpha=1.0):
    """Smoothed (PPV, FOR) of ``model`` on one worker's test rows."""
    p = model.predict_proba(X_test)
    m = confusion_rates((p >= threshold).astype(np.int64), y_test, alpha)
    return m.ppv, m.for_rate


def adjusted_expectation(p_raw, ppv, for_rate):
    """Expected behavior ``ppv * p_raw + for_rate * (1 - p_raw)``."""
    return ppv * p_raw + for_rate * (1.0 - p_raw)


@dataclass
class ModelCatalog:
    worker_ids: tuple
    tasks: tuple
    capacity: np.ndarray
    kinds: tuple  # model kind per slot, shared by all workers
    models: dict  # worker -> list of CandidateModel, aligned with kinds
    rates: np.ndarray  # (workers, models, 2): ppv, for
    raw: np.ndarray  # (workers, tasks, models) unadjusted probabilities
    expectation: np.ndarray  # (workers, tasks, models)
    test_auc: dict = field(default_factory=dict)  # kind -> {worker: (auc, n)}
    profile: ProfileResult | None = None
    excluded: tuple = ()
    train_months: int = 0
    aggregate_raw: np.ndarray | None = None  # aggregate model raw prediction per task

    @property
    def mode(self):
        for name, kinds in MODES.items():
            if kinds == self.kinds:
                return name
        return "custom"

    def problem(self) -> AllocationProblem:
        W, M = len(self.worker_ids), len(self.kinds)
        return AllocationProblem(
            roster=WorkerRoster(self.worker_ids, self.capacity),
            tasks=self.tasks,
            expectation=self.expectation,
            n_models=np.full(W, M, dtype=np.int64),
            model_kinds=tuple(self.kinds for _ in range(W)),
        )

    def restrict(self, kinds):
        """Catalog with only the given model kinds (slices, no retraining)."""
        kinds = tuple(kinds)
        idx = [self.kinds.index(k) for k in kinds]
        return ModelCatalog(
            worker_ids=self.worker_ids, tasks=self.tasks, capacity=self.capacity, kinds=kinds,
            models={w: [ms[i] for i in idx] for w, ms in self.models.items()},
            rates=self.rates[:, idx], raw=self.raw[:, :, idx], expectation=self.expectation[:, :, idx],
            test_auc={k: v for k, v in self.test_auc.items() if k in kinds},
            profile=self.profile if PROFILE in kinds else None, excluded=self.excluded,
            train_months=self.train_months, aggregate_raw=self.aggregate_raw,
        )

    def weighted_auc(self, kind):
        """Test AUC averaged over workers, weighted by their test-row counts."""
        table = self.test_auc.get(kind, {})
        pairs = [(a, n) for a, n in table.values() if a is not None]
        if not pairs:
            return None
        a, n = np.array(pairs).T
        return float(np.sum(a * n) / np.sum(n))

    def to_dict(self):
        W, J, M = self.expectation.shape
        return {
            "mode": self.mode,
            "train_months": self.train_months,
            "kinds": list(self.kinds),
            "worker_ids": list(self.worker_ids),
            "excluded": list(self.excluded),
            "capacity": self.capacity.tolist(),
            "tasks": [{"id": t.id, "day": t.day, "value": t.value, "features": t.features.tolist()}
                      for t in self.tasks],
            "models": {
                w: [{"kind": m.kind, "owner": m.owner, "hyper": m.hyper, "n_train": m.n_train,
                     "ppv": float(self.rates[i, k, 0]), "for": float(self.rates[i, k, 1])}
                    for k, m in enumerate(self.models[w])]
                for i, w in enumerate(self.worker_ids)
            },
            "test_auc": {k: {w: [a, n] for w, (a, n) in v.items()} for k, v in self.test_auc.items()},
            "clusters": None if self.profile is None else self.profile.assignments,
            "shape": [W, J, M],
            "P": self.expectation.ravel().tolist(),
            "raw": self.raw.ravel().tolist(),
            "aggregate_raw": None if self.aggregate_raw is None else self.aggregate_raw.tolist(),
        }


def _worker_auc(model, X, y):
    try:
        return roc_auc(model.predict_proba(X), y)
    except UndefinedAUCError:
        return None


def resolve_kinds(mode):
    """Model kinds for a mode name or an explicit collection of kinds, in canonical order."""
    if isinstance(mode, str):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}")
        return MODES[mode]
    wanted = set(mode)
    unknown = wanted - set(KINDS)
    if unknown or not wanted:
        raise ValueError(f"unknown or empty model kinds: {sorted(unknown)}")
    return tuple(k for k in KINDS if k in wanted)


def build_catalog(records, tasks, split: SplitSpec, mode="dao", config: CatalogConfig = CatalogConfig(),
                  history_months=None, days_per_month=20, capacity=None, roster_ids=None,
                  data: SplitData | None = None):
    """Train the families ``mode`` needs and assemble the adjusted tensor for ``tasks``.

    ``mode`` is a mode name such as ``"dao"`` or a collection of kinds.

    ``capacity``/``roster_ids`` describe the optimization roster; excluded
    workers lose their capacity and the tasks they historically reviewed.
    """
    kinds = resolve_kinds(mode)
    if history_months is None:
        history_months = 1 + max(r.task.day for r in records) // days_per_month
    if data is None:
        data = prepare_split(records, split, history_months, days_per_month)
    workers = data.worker_ids
    keep = set(workers)

    # optimization roster restricted to retained workers
    if roster_ids is None:
        roster_ids = tuple(sorted({t.worker_id for t in tasks if t.worker_id is not None} | keep))
    if capacity is None:
        raise ValueError("capacity is required")
    capacity = np.asarray(capacity, dtype=np.int64)
    rows = [roster_ids.index(w) for w in workers]
    cap = capacity[rows]
    opt_tasks = tuple(t for t in tasks if t.worker_id is None or t.worker_id in keep)
    dropped = len(tasks) - len(opt_tasks)
    if dropped:
        log.info("dropping %d optimization tasks reviewed by excluded workers", dropped)

    families = {}
    need_agg = AGGREGATE in kinds or PROFILE in kinds
    aggregate = build_aggregate_model(data, config) if need_agg else None
    if INDIVIDUAL in kinds:
        families[INDIVIDUAL] = build_individual_models(data, config)
    if AGGREGATE in kinds:
        families[AGGREGATE] = {w: aggregate for w in workers}
    profile = None
    if PROFILE in kinds:
        profile = build_profile_models(data, aggregate, split.train_months, config)
        families[PROFILE] = {w: profile.models[profile.assignments[w]] for w in workers}

    Xopt = data.scaler.transform(np.array([t.features for t in opt_tasks])) if opt_tasks else np.zeros((0, 1))
    W, J, M = len(workers), len(opt_tasks), len(kinds)
    raw = np.zeros((W, J, M))
    rates = np.zeros((W, M, 2))
    test_auc = {k: {} for k in kinds}
    cache = {}
    for m, kind in enumerate(kinds):
        for i, w in enumerate(workers):
            model = families[kind][w]
            key = id(model.predictor)
            if key not in cache:
                cache[key] = model.predict_proba(Xopt) if J else np.zeros(0)
            raw[i, :, m] = cache[key]
            Xt, yt = data.test[w]
            rates[i, m] = estimate_conditional_rates(model, Xt, yt, config.threshold, config.alpha)
            test_auc[kind][w] = (_worker_auc(model, Xt, yt), int(yt.size))
    expectation = adjusted_expectation(raw, rates[:, None, :, 0], rates[:, None, :, 1])
    agg_raw = aggregate.predict_proba(Xopt) if (aggregate is not None and J) else None

    return ModelCatalog(
        worker_ids=workers, tasks=opt_tasks, capacity=cap, kinds=kinds,
        models={w: [families[k][w] for k in kinds] for w in workers},
        rates=rates, raw=raw, expectation=expectation, test_auc=test_auc, profile=profile,
        excluded=data.excluded, train_months=split.train_months, aggregate_raw=agg_raw,
    )


def catalog_problem_from_dict(d):
    """Rebuild the AllocationProblem stored in an exported catalog document."""
    from .core import TaskInstance

    W, J, M = d["shape"]
    tasks = tuple(TaskInstance(t["id"], t["day"], t["features"], t["value"]) for t in d["tasks"])
    P = np.asarray(d["P"], dtype=np.float64).reshape(W, J, M)
    kinds = tuple(d["kinds"])
    return AllocationProblem(
        roster=WorkerRoster(tuple(d["worker_ids"]), np.asarray(d["capacity"], dtype=np.int64).reshape(W, -1)),
        tasks=tasks,
        expectation=P,
        n_models=np.full(W, M, dtype=np.int64),
        model_kinds=tuple(kinds for _ in range(W)),
    )

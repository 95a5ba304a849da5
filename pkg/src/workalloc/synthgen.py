"""Synthetic scenarios with cluster-structured worker behavior.

Workers accept a task with probability ``sigmoid(w_i . phi_j + b_i)`` where
``(w_i, b_i) = base + cluster offset + individual offset``. Task values grow
with the cross-worker variance of those acceptance probabilities, so tasks
on which workers disagree are the valuable ones.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.special import expit

from .core import DecisionRecord, TaskInstance, WorkerRoster


@dataclass(frozen=True)
class ScenarioConfig:
    n_workers: int = 20
    n_clusters: int = 4
    feature_dim: int = 40
    days_per_month: int = 20
    history_months: int = 21
    tasks_per_day: float = 20.0
    activity_sigma: float = 0.1
    base_scale: float = 0.2
    base_bias: float = 0.0
    sigma_cluster: float = 0.03
    cluster_gain_sd: float = 0.8
    sigma_indiv: float = 0.06
    cluster_bias_sd: float = 0.8
    indiv_bias_sd: float = 0.1
    n_components: int = 6
    component_spread: float = 1.0
    value_intercept: float = 1.0
    value_alpha: float = 1.0
    value_noise: float = 1.0
    seed: int = 0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid scenario config: " + "; ".join(problems))

    def problems(self):
        out = []
        for name in ("activity_sigma", "base_scale", "sigma_cluster", "cluster_gain_sd", "sigma_indiv", "cluster_bias_sd",
                     "indiv_bias_sd",
                     "component_spread", "value_noise"):
            if getattr(self, name) < 0:
                out.append(f"{name} must be >= 0")
        if self.n_workers < 1:
            out.append("n_workers must be >= 1")
        if not 1 <= self.n_clusters <= self.n_workers:
            out.append("n_clusters must be in [1, n_workers]")
        if self.feature_dim < 1 or self.n_components < 1:
            out.append("feature_dim and n_components must be >= 1")
        if self.days_per_month < 1 or self.history_months < 1:
            out.append("days_per_month and history_months must be >= 1")
        if self.tasks_per_day <= 0:
            out.append("tasks_per_day must be > 0 (zero capacity is infeasible)")
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario config fields: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **kw):
        return ScenarioConfig(**{**asdict(self), **kw})


@dataclass(frozen=True)
class GroundTruth:
    weights: np.ndarray  # (workers, features)
    biases: np.ndarray
    clusters: np.ndarray
    value_intercept: float
    value_alpha: float
    value_noise: float
    worker_ids: tuple = ()

    def acceptance(self, features):
        """True acceptance probability, shape (workers, tasks)."""
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        return expit(self.weights @ X.T + self.biases[:, None])

    def to_dict(self):
        return {
            "worker_ids": list(self.worker_ids),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "clusters": self.clusters.tolist(),
            "value_intercept": self.value_intercept,
            "value_alpha": self.value_alpha,
            "value_noise": self.value_noise,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            weights=np.asarray(d["weights"], dtype=np.float64),
            biases=np.asarray(d["biases"], dtype=np.float64),
            clusters=np.asarray(d["clusters"], dtype=np.int64),
            value_intercept=d["value_intercept"],
            value_alpha=d["value_alpha"],
            value_noise=d["value_noise"],
            worker_ids=tuple(d.get("worker_ids", ())),
        )


@dataclass(frozen=True)
class Scenario:
    """Historical records, the optimization-window tasks and the roster serving them."""

    records: tuple
    tasks: tuple
    roster: WorkerRoster
    days_per_month: int
    history_months: int
    feature_dim: int

    @property
    def month_of(self):
        return np.array([r.task.day // self.days_per_month for r in self.records], dtype=np.int64)


def disagreement(acceptance):
    """Cross-worker (population) variance of acceptance probability per task."""
    return np.var(acceptance, axis=0)


def _route(rng, n_tasks, activity):
    return rng.choice(activity.size, size=n_tasks, p=activity / activity.sum())


def generate_scenario(config: ScenarioConfig):
    """Draw ``(scenario, ground_truth)``; a pure function of the config."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(6)]
    r_workers, r_feats, r_route, r_decide, r_value, r_days = streams
    W, C, d = config.n_workers, config.n_clusters, config.feature_dim

    # hierarchical behavior: base + cluster + individual, last coordinate is the intercept
    base = np.append(r_workers.normal(0.0, config.base_scale, d), config.base_bias)
    offsets = r_workers.normal(0.0, 1.0, (C, d + 1)) * np.append(np.full(d, config.sigma_cluster),
                                                                 config.cluster_bias_sd)
    # cluster gain along the shared weights: how closely a group tracks consensus
    gains = r_workers.normal(0.0, config.cluster_gain_sd, C)
    offsets[:, :d] += gains[:, None] * base[None, :d]
    offsets -= offsets.mean(axis=0)  # the base carries the population mean
    clusters = r_workers.permutation(np.arange(W) % C)
    indiv = r_workers.normal(0.0, 1.0, (W, d + 1)) * np.append(np.full(d, config.sigma_indiv),
                                                               config.indiv_bias_sd)
    theta = base[None, :] + offsets[clusters] + indiv
    weights, biases = theta[:, :d], theta[:, d]
    activity = np.exp(r_workers.normal(0.0, config.activity_sigma, W))

    # task features: gaussian mixture with per-component diagonal scales
    K = config.n_components
    means = r_feats.normal(0.0, config.component_spread, (K, d))
    scales = r_feats.uniform(0.5, 1.5, (K, d))
    mix = r_feats.dirichlet(np.full(K, 2.0))

    dpm = config.days_per_month
    n_hist_days = config.history_months * dpm
    per_day = np.maximum(1, r_days.poisson(config.tasks_per_day, n_hist_days + dpm))
    n_total = int(per_day.sum())
    comp = r_feats.choice(K, size=n_total, p=mix)
    X = means[comp] + scales[comp] * r_feats.standard_normal((n_total, d))
    day = np.repeat(np.arange(n_hist_days + dpm), per_day)

    accept = expit(weights @ X.T + biases[:, None])  # (W, n_total)
    dis = disagreement(accept)
    z = (dis - dis.mean()) / (dis.std() or 1.0)
    values = (config.value_intercept + config.value_alpha * z
              + config.value_noise * r_value.standard_normal(n_total))

    reviewer = _route(r_route, n_total, activity)
    decisions = (r_decide.random(n_total) < accept[reviewer, np.arange(n_total)]).astype(np.int64)

    worker_ids = tuple(f"w{i:03d}" for i in range(W))
    records, tasks = [], []
    for j in range(n_total):
        task = TaskInstance(
            id=f"t{j:06d}",
            day=int(day[j]) if day[j] < n_hist_days else int(day[j] - n_hist_days),
            features=X[j],
            value=values[j],
            worker_id=worker_ids[reviewer[j]],
        )
        if day[j] < n_hist_days:
            records.append(DecisionRecord(worker_ids[reviewer[j]], task, int(decisions[j])))
        else:
            tasks.append(task)
    capacity = np.zeros((W, dpm), dtype=np.int64)
    opt = day >= n_hist_days
    np.add.at(capacity, (reviewer[opt], day[opt] - n_hist_days), 1)

    scenario = Scenario(
        records=tuple(records),
        tasks=tuple(tasks),
        roster=WorkerRoster(worker_ids, capacity),
        days_per_month=dpm,
        history_months=config.history_months,
        feature_dim=d,
    )
    truth = GroundTruth(weights, biases, clusters, config.value_intercept, config.value_alpha,
                        config.value_noise, worker_ids)
    return scenario, truth


def realized_value(solution, ground_truth: GroundTruth, tasks, worker_ids=None) -> float:
    """True expected value sum of sigmoid(w_i . phi_j + b_i) * v_j * x_ij.

    ``worker_ids`` maps the solution's worker rows onto ground-truth rows when
    the solution covers a subset of the generated workforce.
    """
    X = np.array([t.features for t in tasks])
    v = np.array([t.value for t in tasks])
    acc = ground_truth.acceptance(X)
    if worker_ids is not None:
        rows = [ground_truth.worker_ids.index(w) for w in worker_ids]
        acc = acc[rows]
    x = np.asarray(solution.x if hasattr(solution, "x") else solution, dtype=np.float64)
    return float(np.sum(acc * v[None, :] * x))


# -- serialization -----------------------------------------------------------

def _task_dict(t: TaskInstance):
    d = {"id": t.id, "day": t.day, "features": t.features.tolist(), "value": t.value}
    if t.worker_id is not None:
        d["worker_id"] = t.worker_id
    return d


def scenario_to_dict(scenario: Scenario):
    return {
        "meta": {
            "days_per_month": scenario.days_per_month,
            "history_months": scenario.history_months,
            "feature_dim": scenario.feature_dim,
        },
        "roster": [
            {"worker_id": w, "capacity": scenario.roster.capacity[i].tolist()}
            for i, w in enumerate(scenario.roster.worker_ids)
        ],
        "tasks": [_task_dict(t) for t in scenario.tasks],
        "records": [
            {"worker_id": r.worker_id, "task_id": r.task.id, "day": r.task.day,
             "features": r.task.features.tolist(), "value": r.task.value, "decision": r.decision}
            for r in scenario.records
        ],
    }


def scenario_from_dict(d) -> Scenario:
    meta = d["meta"]
    roster = WorkerRoster(
        tuple(w["worker_id"] for w in d["roster"]),
        np.array([w["capacity"] for w in d["roster"]], dtype=np.int64).reshape(len(d["roster"]), -1),
    )
    tasks = tuple(
        TaskInstance(t["id"], t["day"], t["features"], t["value"], t.get("worker_id")) for t in d["tasks"]
    )
    records = tuple(
        DecisionRecord(
            r["worker_id"],
            TaskInstance(r.get("task_id", f"r{k}"), r["day"], r["features"], r["value"], r["worker_id"]),
            r["decision"],
        )
        for k, r in enumerate(d["records"])
    )
    return Scenario(records, tasks, roster, meta["days_per_month"], meta["history_months"],
                    meta["feature_dim"])


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_scenario(scenario, truth, out_dir, config=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(dumps(scenario_to_dict(scenario)))
    (out / "ground_truth.json").write_text(dumps(truth.to_dict()))
    if config is not None:
        (out / "config.json").write_text(json.dumps(asdict(config), sort_keys=True, indent=2))
    return out


def read_scenario(in_dir):
    """Load ``(scenario, ground_truth or None)`` from a directory written by :func:`write_scenario`."""
    d = Path(in_dir)
    scenario = scenario_from_dict(json.loads((d / "scenario.json").read_text()))
    gt_path = d / "ground_truth.json"
    truth = GroundTruth.from_dict(json.loads(gt_path.read_text())) if gt_path.exists() else None
    return scenario, truth

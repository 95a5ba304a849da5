import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FAST, SPLIT, catalog_kwargs
from workalloc.catalog import (
    AGGREGATE,
    INDIVIDUAL,
    KINDS,
    PROFILE,
    SplitData,
    SplitSpec,
    adjusted_expectation,
    build_aggregate_model,
    build_catalog,
    build_individual_models,
    build_profile_models,
    catalog_problem_from_dict,
    default_cluster_count,
    estimate_conditional_rates,
    prepare_split,
    resolve_kinds,
)
from workalloc.core import DecisionRecord, TaskInstance, validate_problem
from workalloc.learners import Standardizer, kmeans, roc_auc, train_logistic

unit = st.floats(0.0, 1.0, allow_nan=False)


class Echo:
    """Predictor returning its first feature."""

    def predict_proba(self, X):
        return np.asarray(X)[:, 0]


# -- adjustment ----------------------------------------------------------------

def test_adjustment_examples():
    assert adjusted_expectation(0.7, 1.0, 0.0) == pytest.approx(0.7)
    assert adjusted_expectation(0.5, 0.8, 0.3) == pytest.approx(0.55)
    for p in (0.0, 0.3, 1.0):
        assert adjusted_expectation(p, 0.42, 0.42) == pytest.approx(0.42)


@settings(max_examples=300, deadline=None)
@given(unit, unit, unit, unit)
def test_adjustment_range_and_monotonicity(p, q, ppv, fr):
    e = adjusted_expectation(p, ppv, fr)
    assert min(ppv, fr) - 1e-12 <= e <= max(ppv, fr) + 1e-12
    lo, hi = sorted((p, q))
    diff = adjusted_expectation(hi, ppv, fr) - adjusted_expectation(lo, ppv, fr)
    assert diff * np.sign(ppv - fr) >= -1e-12


def test_adjustment_vectorizes():
    raw = np.array([[0.1, 0.9]])
    np.testing.assert_allclose(adjusted_expectation(raw, 1.0, 0.0), raw)


# -- conditional rates ---------------------------------------------------------

def test_rates_from_confusion_counts():
    X = np.array([[1.0], [1.0], [0.0], [0.0]])
    assert estimate_conditional_rates(Echo(), X, np.array([1, 0, 0, 1]), alpha=0) == (0.5, 0.5)


def test_perfect_predictor_rates():
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    ppv, fr = estimate_conditional_rates(Echo(), y[:, None].astype(float), y, alpha=1.0)
    assert ppv == pytest.approx(1 - 1 / (3 + 2))
    assert fr == pytest.approx(1 / (7 + 2))


def test_coin_flip_worker_rates_approach_base_rate():
    rng = np.random.default_rng(0)
    n = 20_000
    y = (rng.random(n) < 0.3).astype(int)
    scores = rng.random((n, 1))
    ppv, fr = estimate_conditional_rates(Echo(), scores, y)
    assert abs(ppv - 0.3) < 0.02 and abs(fr - 0.3) < 0.02


# -- families ------------------------------------------------------------------

def _split_data(train, test):
    scaler = Standardizer(np.zeros(train[next(iter(train))][0].shape[1]), np.ones(1))
    return SplitData(tuple(train), train, test, scaler)


def test_realizable_individual_concept():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 1))
    y = (X[:, 0] > 0.2).astype(int)
    Xt = rng.normal(size=(100, 1))
    yt = (Xt[:, 0] > 0.2).astype(int)
    data = _split_data({"a": (X, y)}, {"a": (Xt, yt)})
    model = build_individual_models(data, FAST)["a"]
    assert roc_auc(model.predict_proba(Xt), yt) == 1.0


def test_identical_histories_identical_models():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3))
    y = (X @ [1.0, -1.0, 0.5] + rng.normal(size=60) > 0).astype(int)
    data = _split_data({"a": (X, y), "b": (X.copy(), y.copy())}, {"a": (X, y), "b": (X, y)})
    models = build_individual_models(data, FAST)
    a, b = models["a"].predictor, models["b"].predictor
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_single_class_worker_flagged():
    X = np.random.default_rng(3).normal(size=(20, 2))
    data = _split_data({"a": (X, np.zeros(20, dtype=int))}, {"a": (X, np.zeros(20, dtype=int))})
    model = build_individual_models(data, FAST)["a"]
    assert model.predictor.single_class
    assert np.all(model.predict_proba(X) < 0.1)


def test_cluster_count_rule():
    assert default_cluster_count(3) == 4
    assert default_cluster_count(12) == 6


def test_separated_behavior_groups_recovered():
    rng = np.random.default_rng(4)
    pts = np.vstack([rng.normal([0.9, 0.9], 0.01, (5, 2)), rng.normal([0.2, 0.2], 0.01, (5, 2))])
    labels = kmeans(pts, 2, seed=0).labels
    assert len(set(labels[:5])) == 1 and len(set(labels[5:])) == 1 and labels[0] != labels[5]


def test_single_cluster_profile_is_pooled_logistic(small_scenario):
    scenario, _ = small_scenario
    data = prepare_split(scenario.records, SPLIT, scenario.history_months, scenario.days_per_month)
    agg = build_aggregate_model(data, FAST)
    prof = build_profile_models(data, agg, 3, FAST, k_override=1)
    assert set(prof.assignments.values()) == {0}
    model = prof.models[0]
    X, y = data.pooled()
    ref = train_logistic(X, y, model.hyper)
    np.testing.assert_allclose(model.predictor.weights, ref.weights, atol=1e-12)
    assert model.n_train == y.size


def test_profile_cluster_count_capped(small_scenario):
    scenario, _ = small_scenario
    data = prepare_split(scenario.records, SPLIT, scenario.history_months, scenario.days_per_month)
    prof = build_profile_models(data, build_aggregate_model(data, FAST), 3, FAST)
    assert prof.k == len(data.worker_ids)
    assert prof.rates.shape == (len(data.worker_ids), 2)


# -- catalog assembly ----------------------------------------------------------

@pytest.fixture(scope="module")
def dao_catalog(small_scenario):
    scenario, _ = small_scenario
    return build_catalog(scenario.records, scenario.tasks, SPLIT, "dao", FAST, **catalog_kwargs(scenario))


def test_dao_shape_and_range(dao_catalog):
    W, J = len(dao_catalog.worker_ids), len(dao_catalog.tasks)
    assert dao_catalog.expectation.shape == (W, J, 3)
    assert dao_catalog.kinds == KINDS
    assert np.all((dao_catalog.expectation >= 0) & (dao_catalog.expectation <= 1))
    assert validate_problem(dao_catalog.problem()) == []


def test_aggregate_mode_shared_raw(small_scenario):
    scenario, _ = small_scenario
    cat = build_catalog(scenario.records, scenario.tasks, SPLIT, "uao-aggregate", FAST, **catalog_kwargs(scenario))
    assert cat.kinds == (AGGREGATE,)
    assert np.all(cat.problem().n_models == 1)
    assert np.all(cat.raw == cat.raw[:1])


@pytest.mark.parametrize("mode", ["uao-individual", "uao-aggregate", "uao-profile"])
def test_dao_slices_match_single_modes(small_scenario, dao_catalog, mode):
    scenario, _ = small_scenario
    single = build_catalog(scenario.records, scenario.tasks, SPLIT, mode, FAST, **catalog_kwargs(scenario))
    m = dao_catalog.kinds.index(single.kinds[0])
    np.testing.assert_array_equal(dao_catalog.expectation[:, :, m], single.expectation[:, :, 0])
    np.testing.assert_array_equal(dao_catalog.restrict(single.kinds).expectation, single.expectation)


def test_catalog_round_trip(dao_catalog):
    doc = dao_catalog.to_dict()
    p = catalog_problem_from_dict(doc)
    np.testing.assert_array_equal(p.expectation, dao_catalog.expectation)
    assert p.roster.worker_ids == dao_catalog.worker_ids
    assert doc["shape"] == list(dao_catalog.expectation.shape)
    assert set(doc["test_auc"]) == set(KINDS)


def test_weighted_auc_defined(dao_catalog):
    for kind in KINDS:
        assert 0.0 <= dao_catalog.weighted_auc(kind) <= 1.0
    assert dao_catalog.weighted_auc("missing") is None


def test_exclusion_drops_worker_and_tasks(small_scenario):
    scenario, _ = small_scenario
    quiet = scenario.roster.worker_ids[0]
    test_months = set(range(3, 6))
    records = [r for r in scenario.records
               if not (r.worker_id == quiet and r.task.day // scenario.days_per_month in test_months)]
    cat = build_catalog(records, scenario.tasks, SPLIT, "uao-individual", FAST, **catalog_kwargs(scenario))
    assert quiet in cat.excluded and quiet not in cat.worker_ids
    assert all(t.worker_id != quiet for t in cat.tasks)


def test_resolve_kinds_and_split_guard():
    assert resolve_kinds({PROFILE, INDIVIDUAL}) == (INDIVIDUAL, PROFILE)
    with pytest.raises(ValueError):
        resolve_kinds("uao-random")
    with pytest.raises(ValueError):
        SplitSpec(train_months=20).windows(6)


def test_no_surviving_worker_is_an_error():
    t = TaskInstance("t", 0, [0.0], 1.0)
    with pytest.raises(ValueError):
        prepare_split([DecisionRecord("a", t, 1)], SplitSpec(train_months=1, test_months=1), 2, 10)

import pytest

from workalloc.catalog import CatalogConfig, SplitSpec
from workalloc.synthgen import ScenarioConfig, generate_scenario

SMALL = ScenarioConfig(n_workers=4, n_clusters=2, feature_dim=3, days_per_month=10, history_months=6,
                       tasks_per_day=12.0, base_scale=1.0, sigma_cluster=0.5, sigma_indiv=0.2, seed=1)
FAST = CatalogConfig(n_trees=10, cv_folds=3, leaf_grid=(5, 10), kmeans_restarts=3)
SPLIT = SplitSpec(train_months=3, test_months=3)


@pytest.fixture(scope="session")
def small_scenario():
    return generate_scenario(SMALL)


def catalog_kwargs(scenario):
    return dict(history_months=scenario.history_months, days_per_month=scenario.days_per_month,
                capacity=scenario.roster.capacity, roster_ids=scenario.roster.worker_ids)


# one line per acceptance criterion, printed at the end of the run
CRITERIA = {}


def record(criterion, passed, detail):
    CRITERIA[criterion] = f"{criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    print(CRITERIA[criterion])
    return passed


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(CRITERIA, key=lambda k: (len(k), k)):
            terminalreporter.write_line(CRITERIA[key])

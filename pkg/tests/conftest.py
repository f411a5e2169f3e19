import numpy as np
import pandas as pd
import pytest

from invlab.ingest import SynthConfig, clean, engineer_features, generate_synthetic


@pytest.fixture(scope="session")
def synthetic():
    return generate_synthetic(SynthConfig(n_days=120, seed=3))


@pytest.fixture(scope="session")
def engineered(synthetic):
    return {kind: engineer_features(clean(synthetic), kind, seed=3)
            for kind in ("lost_sales", "dual_sourcing", "multi_echelon")}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def env_frame(rows):
    """Minimal environment frame from (qty, lost, days, price, demand, lead) tuples."""
    cols = ["Quantity Sold_x", "Estimated Lost Sales", "Days Until Replenishment", "Price",
            "Estimated Demand", "Lead Time"]
    return pd.DataFrame(rows, columns=cols, dtype=float)


_CRITERIA: dict[int, tuple[str, list[str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    _, outcomes = _CRITERIA.setdefault(number, (title, []))
    outcomes.append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcomes = _CRITERIA[number]
        verdict = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {number}: {title}")

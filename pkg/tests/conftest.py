import json
from pathlib import Path

import numpy as np
import pytest

from regiopanel.panel import PanelDataset
from regiopanel.specs import ModelSpec

FIXTURES = Path(__file__).parent / "fixtures"


def random_panel(rng, n_entities=4, n_years=6, k=2, unbalanced=False, effect_scale=1.0,
                 start=2000, log_levels=False):
    """Panel with columns y, x1..xk (in logs unless ``log_levels``).

    With ``unbalanced`` each entity keeps a random subset of at least three years.
    """
    beta = rng.normal(size=k)
    records = []
    for i in range(n_entities):
        alpha = effect_scale * rng.normal()
        years = np.arange(start, start + n_years)
        if unbalanced:
            keep = max(3, int(rng.integers(3, n_years + 1)))
            years = np.sort(rng.choice(years, size=keep, replace=False))
        for y in years:
            x = rng.normal(size=k) + 0.3 * alpha
            yv = alpha + x @ beta + 0.5 * rng.normal()
            vals = {"y": yv, **{f"x{j + 1}": x[j] for j in range(k)}}
            if log_levels:
                vals = {name: float(np.exp(v)) for name, v in vals.items()}
            records.append((f"e{i}", int(y), vals))
    return PanelDataset.from_records(records)


def log_spec(k=2, **kw):
    return ModelSpec("y", tuple(f"x{j + 1}" for j in range(k)), log_all=False, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def printed_tables():
    return json.loads((FIXTURES / "printed_tables.json").read_text())


@pytest.fixture(scope="session")
def study_csv(tmp_path_factory):
    """Synthetic five-region 1980-1999 panel written as CSV."""
    from regiopanel.panel import dump_panel
    from regiopanel.synthetic import study_panel

    path = tmp_path_factory.mktemp("data") / "regions.csv"
    dump_panel(study_panel(seed=1), path)
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

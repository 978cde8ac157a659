from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from tees.devices import GeneratorModel
from tees.scenario import load_scenario

DATA = Path(__file__).resolve().parents[1] / "src" / "tees" / "data"
SMALL = DATA / "synthetic" / "scenario.json"

T0 = datetime(2023, 1, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def small_scenario():
    return load_scenario(SMALL, seed=0)


@pytest.fixture
def generator():
    return GeneratorModel(alpha=0.99, c0=35.5, p_max=1373.0, combined_unit_capacity_kw=505.0)


def write_csv(path, rows, header="timestamp,value"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


def five_min_rows(values, start="2023-01-01T00:00:00Z", step_min=5):
    t = datetime.fromisoformat(start.replace("Z", "+00:00"))
    out = []
    for i, v in enumerate(values):
        ts = t.timestamp() + i * step_min * 60
        stamp = datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        out.append(f"{stamp},{'' if v is None else v}")
    return out


def rng(seed=0):
    return np.random.default_rng(seed)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

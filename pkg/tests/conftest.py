import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_table_columns(rng, max_objects=8, max_attrs=4, max_labels=3):
    """Random small decision table as (columns dict, attribute names)."""
    n = int(rng.integers(1, max_objects + 1))
    m = int(rng.integers(1, max_attrs + 1))
    attrs = [f"a{j}" for j in range(m)]
    cols = {a: rng.integers(0, int(rng.integers(1, max_labels + 1)), n).tolist() for a in attrs}
    cols["d"] = rng.integers(0, int(rng.integers(1, max_labels + 1)), n).tolist()
    return cols, attrs


@pytest.fixture
def worked_table():
    from roughbattery.roughsets import InformationTable

    return InformationTable.from_columns({"a": [1, 1, 2, 2], "d": ["y", "y", "y", "n"]}, "d")


@pytest.fixture(scope="session")
def planted():
    from roughbattery.tabular import synth_generate

    return synth_generate(1000, 7)


# criterion number -> (passed, summary line), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n][1])

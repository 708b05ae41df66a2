from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

DATA = Path(__file__).parent / "data"
SLICE = DATA / "slice"

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "property: randomized invariant suites")
    config.addinivalue_line("markers", "acceptance: acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


TABLE1 = (
    "The contents of this letter threw Elizabeth into a flutter of spirits, in which it was difficult "
    "to determine whether pleasure or pain bore the greatest share.\n\n"
    "She was roused from her seat, and her reflections, by some one's approach; and before she could "
    "strike into another path, she was overtaken by Wickham. \"I am afraid I interrupt your solitary "
    "ramble, my dear sister?\" said he, as he joined her.\n\n"
    "\"You certainly do,\" she replied with a smile; \"but it does not follow that the interruption "
    "must be unwelcome.\"\n\n"
    "\"I should be sorry indeed, if it were. We were always good friends; and now we are better.\"\n\n"
    "\"True. Are the others coming out?\"\n"
)


@pytest.fixture
def table1_text():
    return TABLE1

from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from sizeterm import corpus_path, load_system

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTED = ["div", "map-filter-cond", "goedel-T", "howard-V", "quicksort"]

ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def corpus():
    cache: dict = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_system(corpus_path(f"{name}.hrs"))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def div(corpus):
    return corpus("div")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

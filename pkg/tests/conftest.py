"""Shared fixtures: scenario runs are expensive, so each is simulated once per session."""

from __future__ import annotations

import functools

import pytest

from gnssdobench.scenario import run, template


@functools.lru_cache(maxsize=None)
def cached_run(name: str, seed: int = 1, **overrides):
    return run(template(name, {"seed": seed, **overrides}))


@pytest.fixture(scope="session")
def holdover_run():
    return cached_run("holdover_24h")


@pytest.fixture(scope="session")
def short_outage_run():
    # 1 h outage, 2 h after it to observe recovery
    return run(template("holdover_24h", {"outage_duration": 3600.0}))


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

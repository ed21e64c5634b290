"""Shared fixtures.

Presentations and word-length balls are session scoped: the breadth-first
enumeration plus the fingerprint index dominates setup cost, and every
module reads from the same frozen objects.
"""

import pytest

from hyperhall.fuchsian import Multiplier, build_genus_g_group

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(num: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def g2():
    return build_genus_g_group(2)


@pytest.fixture(scope="session")
def g3():
    return build_genus_g_group(3)


@pytest.fixture(scope="session")
def ball2_g2(g2):
    return g2.ball(2)


@pytest.fixture(scope="session")
def ball3_g2(g2):
    return g2.ball(3)


@pytest.fixture(scope="session")
def ball4_g2(g2):
    return g2.ball(4)


@pytest.fixture(scope="session")
def ball2_g3(g3):
    return g3.ball(2)


@pytest.fixture(scope="session")
def mult_g2(g2):
    return Multiplier(1.0, g2)

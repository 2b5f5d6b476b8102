"""Shared, cached subjects for the test-suite."""

from functools import lru_cache

import numpy as np
import pytest

from chernmin import immersion as im
from chernmin.angle import analyze


@lru_cache(maxsize=None)
def subject(name, n, **params):
    """(immersion, jet, angle) for a catalogue subject; cached per session."""
    f = im.get_immersion(name, **params)
    dom = f.domain(n)
    jet = im.pullback(f, dom, strict=False)
    return f, jet, analyze(jet)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def hopf_points(rng, count):
    """Uniform random points with |z| in [1, 2] (the fundamental annulus)."""
    v = rng.normal(size=(count, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = rng.uniform(1.0, 2.0, size=(count, 1))
    v *= r
    return v[:, 0::2] + 1j * v[:, 1::2]


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run

ACCEPTANCE = {}


def verdict(number, title, ok, detail=""):
    """Record and print a criterion outcome, then assert it."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_") or not report.failed:
        return
    number = int(name.split("_")[2])
    line = ACCEPTANCE.get(number, f"criterion {number:2d} FAIL  {name}: {report.when} error")
    ACCEPTANCE[number] = line.replace(" PASS ", " FAIL ", 1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from deforge.core import Field, Grid

settings.register_profile("deforge", max_examples=40, deadline=None)
settings.load_profile("deforge")

TWO_PI = 2 * np.pi


def periodic_grid(n=32, d=1, L=TWO_PI, **kw) -> Grid:
    return Grid((n,) * d, (L,) * d, (True,) * d, **kw)


def mode_field(grid: Grid, k, fn=np.cos) -> Field:
    """``fn(k . x)`` for an integer mode vector ``k`` on a periodic grid."""
    k = np.atleast_1d(k)
    X = grid.mesh()
    phase = sum(2 * np.pi * kj * Xj / L for kj, Xj, L in zip(k, X, grid.extents))
    return Field(grid, fn(phase)[None])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

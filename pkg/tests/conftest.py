import numpy as np
import pytest

from hybridcavity import DriveSpec, TimeGrid, propagate
from scenarios import environment, qgaussian, T_SPIN, WC

_ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


@pytest.fixture
def criterion():
    """Record an acceptance check for the summary, then assert it."""

    def record(label, ok, detail):
        ok = bool(ok)
        _ACCEPTANCE.append((label, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return record


@pytest.fixture(scope="session")
def paper_props():
    """Paper parameters at 25 mK, rectangular pulse on [0, 1) us, 2 us horizon."""
    env = environment(spin_t=T_SPIN, env_t=T_SPIN)
    grid = TimeGrid.from_horizon(5e-4, 2.0)
    drive = DriveSpec("rectangular", 1.0, t_on=0.0, t_off=1.0)
    return qgaussian(), env, drive, propagate(qgaussian(), env, drive, grid)


@pytest.fixture(scope="session")
def short_props():
    """Paper line at 25 mK on a coarse short grid, for the slow O(N^3) paths."""
    env = environment(spin_t=T_SPIN, env_t=T_SPIN)
    grid = TimeGrid(2e-3, 150, v_stride=1)
    drive = DriveSpec("rectangular", 1.0, t_off=0.1)
    return qgaussian(), env, drive, propagate(qgaussian(), env, drive, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


__all__ = ["WC"]

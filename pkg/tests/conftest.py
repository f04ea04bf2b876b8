"""Shared fixtures: test data location, random instances, reporting.

The acceptance module records one PASS/FAIL line per criterion; the
``pytest_terminal_summary`` hook prints them in a dedicated section so
they appear exactly once in any run's output, independent of capture
settings.
"""
from __future__ import annotations

import json
import pathlib

import numpy as np
import pytest

from neariso import BINOMIAL, GAMMA_SCALE, NORMAL, POISSON

DATA_DIR = pathlib.Path(__file__).parent / "data"

_ACCEPTANCE_LINES: list[tuple[float, str]] = []


def record_criterion(number: float, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append((number, f"criterion {number:g}: {status} - {detail}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir() -> pathlib.Path:
    return DATA_DIR


def load_expected(name: str) -> dict:
    with open(DATA_DIR / f"{name}_expected.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


ALL_FAMILIES = (NORMAL, BINOMIAL, POISSON, GAMMA_SCALE)


def random_instance(rng: np.random.Generator, family, n: int):
    """Sufficient statistics and weights with interior-valued data.

    Data are kept away from the boundary of the mean range (counts
    clipped inside (0, trials), positive counts for Poisson, positive
    observations for gamma) so every instance has an interior optimum.
    """
    if family.kind == "binomial":
        w = rng.integers(3, 9, n).astype(float)
        x = np.clip(rng.binomial(w.astype(np.int64), rng.uniform(0.2, 0.8, n)), 1.0, w - 1.0)
    elif family.kind == "poisson":
        w = rng.uniform(0.5, 3.0, n)
        x = rng.poisson(w * rng.uniform(0.5, 4.0, n)).astype(float) + 1.0
    elif family.kind == "gamma":
        w = rng.uniform(0.5, 3.0, n)
        x = np.maximum(rng.gamma(w, rng.uniform(0.5, 2.0, n)), 1e-3)
    else:
        w = rng.uniform(0.5, 3.0, n)
        x = w * rng.normal(0.0, 1.0, n)
    return np.asarray(x, dtype=float), w


def lambda_pool(path) -> list[float]:
    """Knots, segment midpoints, zero, and a point past the terminal."""
    knots = [float(k) for k in path.knots]
    mids = [0.5 * (a + b) for a, b in zip(knots[:-1], knots[1:])]
    return [0.0] + knots + mids + [10.0 * path.terminal_lambda + 0.1]

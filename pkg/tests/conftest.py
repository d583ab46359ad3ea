"""Shared fixtures and the acceptance-criteria summary."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from qptmpdo import dense, mpdo
from qptmpdo.circuit import Circuit, Gate

FIXTURES = Path(__file__).parent / "fixtures"
ACCEPTANCE_CRITERIA = range(1, 11)

# criterion number -> (passed, detail); filled by the ``criterion`` fixture
_ACCEPTANCE: dict[int, tuple[bool, str]] = {}
_ACCEPTANCE_RAN = False


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture(scope="session")
def frozen_thresholds() -> dict:
    return json.loads((FIXTURES / "frozen_thresholds.json").read_text())


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome and echo it as a PASS/FAIL line."""
    global _ACCEPTANCE_RAN
    _ACCEPTANCE_RAN = True

    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (bool(passed), detail)
        print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RAN:
        return
    terminalreporter.section("acceptance criteria")
    for n in ACCEPTANCE_CRITERIA:
        passed, detail = _ACCEPTANCE.get(n, (False, "not run or errored before reporting"))
        terminalreporter.write_line(f"CRITERION {n:>2}: {'PASS' if passed else 'FAIL'} - {detail}")


# --- helpers shared by several test modules ----------------------------------


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def mpdo_vs_dense(circuit: Circuit, trunc: mpdo.TruncationConfig | None = None) -> float:
    """Trace distance between the MPDO and dense-oracle final states."""
    from qptmpdo.metrics import trace_distance

    st = mpdo.simulate_mpdo(circuit, trunc)
    return trace_distance(mpdo.full_density_matrix(st), dense.simulate_dense(circuit).rho)


def bell_circuit() -> Circuit:
    return Circuit(2, (Gate("H", (0,)), Gate("CNOT", (0, 1))))

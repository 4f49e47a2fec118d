from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


def load_hardware_batch() -> list[dict]:
    """The 40 recorded hardware runs for (pi/2) sigma_x: N, P0 and fidelity."""
    with open(DATA / "x_half_pi_hardware.csv") as fh:
        return [
            {"N": int(row["N"]), "P0": float(row["P0"]), "F": float(row["F"])}
            for row in csv.DictReader(fh)
        ]


def phase_aligned_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Max |a - e^{i phi} b| with phi chosen from the largest entry of b."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[k] / b[k]
    phase /= abs(phase)
    return float(np.max(np.abs(a - phase * b)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def hardware_batch():
    return load_hardware_batch()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

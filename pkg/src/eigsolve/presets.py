"""The six benchmark observables and their default reward schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .environment import Observable
from .errors import UnknownPreset
from .rlsolver import RestartSchedule

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
ID2 = np.eye(2, dtype=np.complex128)

# Hydrogen at 0.2 A bond length, coefficients of I, Z0, Z1, Z0Z1, Y0Y1, X0X1.
H2_G = (2.8489, 0.5678, -1.4508, 0.6799, 0.0791, 0.0791)


def h2_matrix(g=H2_G) -> np.ndarray:
    g0, g1, g2, g3, g4, g5 = g
    return np.array(
        [
            [g0 + g1 + g2 + g3, 0, 0, g5 - g4],
            [0, g0 + g1 - g2 - g3, g4 + g5, 0],
            [0, g4 + g5, g0 - g1 + g2 - g3, 0],
            [g5 - g4, 0, 0, g0 - g1 - g2 + g3],
        ],
        dtype=np.complex128,
    )


def nondegenerate_matrix() -> np.ndarray:
    pi = math.pi
    return np.array(
        [
            [pi, -pi / 2, -pi / 4, -pi / 4],
            [-pi / 2, pi, -pi / 4, -pi / 4],
            [-pi / 4, -pi / 4, pi / 2, 0],
            [-pi / 4, -pi / 4, 0, pi / 2],
        ],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class Preset:
    name: str
    build: Callable[[], np.ndarray]
    schedule: RestartSchedule
    fidelity_mode: str  # column statistic the benchmark reports
    vqe_shots: int  # shots per optimiser step used for the VQE comparison
    description: str

    def observable(self) -> Observable:
        return Observable(self.build(), self.name)


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "x-half-pi",
            lambda: (math.pi / 2) * SX,
            RestartSchedule.from_ratios([0.9], 1.0),
            "overlap",
            500,
            "(pi/2) sigma_x, gap pi",
        ),
        Preset(
            "x-quarter-pi",
            lambda: (math.pi / 4) * SX,
            RestartSchedule.from_ratios([0.9], 1.5),
            "overlap",
            500,
            "(pi/4) sigma_x, gap pi/2",
        ),
        Preset(
            "xy-gap2",
            lambda: math.cos(0.1) * SX + math.sin(0.1) * SY,
            RestartSchedule.from_ratios([0.9], 1.5),
            "overlap",
            800,
            "cos(1/10) sigma_x + sin(1/10) sigma_y, gap 2",
        ),
        Preset(
            "xx",
            lambda: np.kron(SX, SX),
            RestartSchedule.from_ratios([0.9], 1.5),
            "probability",
            300,
            "sigma_x sigma_x, doubly degenerate spectrum",
        ),
        Preset(
            "h2-0.2A",
            h2_matrix,
            RestartSchedule.from_ratios([0.9], 1.5),
            "probability",
            120,
            "two-qubit H2 Hamiltonian at 0.2 A",
        ),
        Preset(
            "nondeg-4",
            nondegenerate_matrix,
            RestartSchedule.from_ratios([0.6, 0.7, 0.8, 0.9], 1.0),
            "overlap",
            2000,
            "non-degenerate 4x4 with spectrum {0, pi/2, pi, 3pi/2}",
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None

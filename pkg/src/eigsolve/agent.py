"""Agent unitary: two-level rotations, their composition, and the qubit Euler form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EqualIndices, IndexOutOfRange
from .qcore import as_matrix, polar_unitary, unitarity_defect

REUNITARIZE_EVERY = 1000
REUNITARIZE_TOL = 1e-9


class RotationAngles(NamedTuple):
    theta: float
    phi: float
    lam: float


class EulerParams(NamedTuple):
    theta: float
    phi: float
    lam: float


@dataclass(frozen=True)
class AgentUnitary:
    """The accumulated preparation unitary D_k and its iteration index k."""

    matrix: np.ndarray
    iteration: int = 0

    @classmethod
    def identity(cls, dim: int) -> AgentUnitary:
        return cls(np.eye(dim, dtype=np.complex128), 0)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j]


def _check_index(i: int, dim: int, name: str) -> None:
    if not 0 <= i < dim:
        raise IndexOutOfRange(f"{name}={i} outside basis of dimension {dim}")


def two_level_rotation(dim: int, j: int, m: int, angles: RotationAngles) -> np.ndarray:
    """General SU(2)-type rotation acting on span{|j>, |m>}, identity elsewhere.

    Inside the subspace (rows/columns ordered j, m)::

        [[cos(t/2),              -e^{i phi} sin(t/2)],
         [e^{i lam} sin(t/2),     e^{i(lam+phi)} cos(t/2)]]
    """
    _check_index(j, dim, "j")
    _check_index(m, dim, "m")
    if j == m:
        raise EqualIndices(f"rotation indices must differ (got j = m = {j})")
    theta, phi, lam = angles
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    u = np.eye(dim, dtype=np.complex128)
    u[j, j] = c
    u[m, m] = np.exp(1j * (lam + phi)) * c
    u[j, m] = -np.exp(1j * phi) * s
    u[m, j] = np.exp(1j * lam) * s
    return u


def update_agent(
    d: AgentUnitary, outcome_m: int, target_j: int, angles: RotationAngles
) -> AgentUnitary:
    """One action step: keep D when the outcome hits the target, else rotate in {j, m}.

    The returned unitary is re-projected onto the unitary group every
    ``REUNITARIZE_EVERY`` updates if rounding drift has exceeded 1e-9.
    """
    dim = d.dim
    _check_index(outcome_m, dim, "outcome_m")
    _check_index(target_j, dim, "target_j")
    k = d.iteration + 1
    if outcome_m == target_j:
        mat = d.matrix
    else:
        # D u only mixes columns j and m; update those two columns directly.
        u = two_level_rotation(2, 0, 1, angles)
        mat = d.matrix.copy()
        cols = [target_j, outcome_m]
        mat[:, cols] = d.matrix[:, cols] @ u
    if k % REUNITARIZE_EVERY == 0 and unitarity_defect(mat) > REUNITARIZE_TOL:
        mat = polar_unitary(mat)
    return AgentUnitary(mat, k)


def _rz(a: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * a), 0.0], [0.0, np.exp(0.5j * a)]], dtype=np.complex128)


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2.0), math.sin(a / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def euler_unitary(p: EulerParams) -> np.ndarray:
    """Rz(lam) Ry(theta) Rz(phi), the generic single-qubit gate."""
    return _rz(p.lam) @ _ry(p.theta) @ _rz(p.phi)


def accumulate_euler(p: EulerParams, deltas: RotationAngles, outcome_m: int) -> EulerParams:
    """Add the drawn deltas to every Euler angle when the outcome is 1.

    Angles are deliberately left unwrapped.
    """
    if outcome_m not in (0, 1):
        raise IndexOutOfRange(f"single-qubit outcome must be 0 or 1, got {outcome_m}")
    if outcome_m == 0:
        return p
    return EulerParams(p.theta + deltas.theta, p.phi + deltas.phi, p.lam + deltas.lam)


def agent_from_matrix(m, iteration: int = 0) -> AgentUnitary:
    return AgentUnitary(as_matrix(m), iteration)

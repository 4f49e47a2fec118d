"""Fidelity estimators, per-run fidelity reports and batch statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .agent import AgentUnitary
from .environment import Observable, ShotSource, outcome_distribution, sample_shots
from .errors import DimensionMismatch, EmptyBatch, GapDegenerate, RadicandNegative

HIST_BIN_WIDTH = 0.05
DEGENERACY_TOL = 1e-8


def spectral_gap(o: Observable) -> float:
    """|alpha_1 - alpha_0| of a single-qubit tau*O."""
    if o.dim != 2:
        raise DimensionMismatch("the gap is defined for single-qubit observables only")
    a = o.spectrum.eigenvalues
    return abs(float(a[1] - a[0]))


def p0_from_fidelity(f: float, gap: float) -> float:
    """Probability of reading back |0> given max-overlap fidelity ``f`` and gap."""
    return 2.0 * f * (f - 1.0) * (1.0 - math.cos(gap)) + 1.0


def fidelity_from_p0(p0: float, gap: float) -> float:
    """Invert :func:`p0_from_fidelity`, taking the branch >= 1/2."""
    denom = 1.0 - math.cos(gap)
    if abs(denom) < 1e-12:
        raise GapDegenerate(f"gap {gap!r} gives cos(gap) = 1; P0 is insensitive to fidelity")
    radicand = 2.0 * (p0 - 1.0) / denom + 1.0
    if radicand < 0.0:
        if radicand < -1e-9:
            raise RadicandNegative(f"P0 = {p0!r} is below the floor reachable with gap {gap!r}")
        radicand = 0.0
    return 0.5 * (1.0 + math.sqrt(radicand))


def estimate_p(o: Observable, d: AgentUnitary, j: int, shots: int, src: ShotSource) -> float:
    """Frequency of reading back ``j`` over ``shots`` single shots."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    outcomes = sample_shots(outcome_distribution(o, d, j), shots, src)
    return float(np.count_nonzero(outcomes == j)) / shots


def exact_probability_fidelity(o: Observable, d: AgentUnitary, j: int) -> float:
    """|<j| D^dag E D |j>|^2 computed from the state vector."""
    if d.dim != o.dim:
        raise DimensionMismatch(f"agent dimension {d.dim} != observable dimension {o.dim}")
    col = d.matrix[:, j]
    amp = np.vdot(col, o.evolution @ col)
    return float(abs(amp) ** 2)


def degenerate_blocks(eigenvalues: np.ndarray, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    """Group indices of ascending eigenvalues whose neighbours differ by <= tol."""
    blocks = [[0]]
    for k in range(1, len(eigenvalues)):
        if eigenvalues[k] - eigenvalues[k - 1] <= tol:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def exact_overlap_fidelity(o: Observable, d: AgentUnitary, j: int) -> tuple[float, int]:
    """Largest squared overlap of ``D|j>`` with an eigenvector, and its index.

    For a degenerate eigenvalue the whole eigenspace counts: the overlap is the
    projection weight onto the block, and the index reported is the block
    member with the largest individual overlap.
    """
    if d.dim != o.dim:
        raise DimensionMismatch(f"agent dimension {d.dim} != observable dimension {o.dim}")
    spec = o.spectrum
    weights = np.abs(spec.eigenvectors.conj().T @ d.matrix[:, j]) ** 2
    best, best_idx = -1.0, 0
    for block in degenerate_blocks(spec.eigenvalues):
        w = float(sum(weights[k] for k in block))
        if w > best + 1e-15:
            best = w
            best_idx = max(block, key=lambda k: weights[k])
    return min(best, 1.0), int(best_idx)


def basis_label(j: int, dim: int) -> str:
    n = dim.bit_length() - 1
    return format(j, f"0{n}b")


@dataclass
class ColumnFidelity:
    label: str
    probability: float
    overlap: float
    matched_index: int
    p_estimate: float | None = None
    fidelity_from_p0: float | None = None


@dataclass
class FidelityReport:
    columns: list[ColumnFidelity]
    shots: int = 0

    def values(self, mode: str) -> list[float]:
        """Per-column fidelities for ``mode`` in {"overlap", "probability", "estimated"}."""
        if mode == "overlap":
            return [c.overlap for c in self.columns]
        if mode == "probability":
            return [c.probability for c in self.columns]
        if mode == "estimated":
            return [c.fidelity_from_p0 for c in self.columns]
        raise ValueError(f"unknown fidelity mode {mode!r}")


def fidelity_report(
    o: Observable, d: AgentUnitary, shots: int = 0, src: ShotSource | None = None
) -> FidelityReport:
    """Exact fidelities for every column of ``D``; shot-based estimates if ``shots``.

    For a single qubit the estimate is also converted through the gap formula.
    """
    gap = spectral_gap(o) if o.dim == 2 else None
    cols = []
    for j in range(o.dim):
        overlap, idx = exact_overlap_fidelity(o, d, j)
        col = ColumnFidelity(
            basis_label(j, o.dim), exact_probability_fidelity(o, d, j), overlap, idx
        )
        if shots:
            col.p_estimate = estimate_p(o, d, j, shots, src)
            if gap is not None and abs(1.0 - math.cos(gap)) >= 1e-12:
                # Raw frequencies may undershoot the reachable floor; clip first.
                floor = p0_from_fidelity(0.5, gap)
                col.fidelity_from_p0 = fidelity_from_p0(max(col.p_estimate, floor), gap)
        cols.append(col)
    return FidelityReport(cols, shots)


@dataclass
class BatchStats:
    mean: float
    std: float
    n_mean: float
    n_min: int
    n_max: int
    histogram: list[tuple[float, float, int]] = field(default_factory=list)
    count: int = 0


def histogram(values: Sequence[float], width: float = HIST_BIN_WIDTH) -> list[tuple[float, float, int]]:
    """Fixed-width bins on [0, 1], closed on the left; 1.0 lands in the last bin."""
    nbins = int(round(1.0 / width))
    counts = [0] * nbins
    for v in values:
        k = int(math.floor(round(v / width, 9)))
        counts[min(max(k, 0), nbins - 1)] += 1
    return [(round(k * width, 10), round((k + 1) * width, 10), c) for k, c in enumerate(counts)]


def batch_stats(fidelities: Sequence[float], iterations: Sequence[int]) -> BatchStats:
    """Mean and population standard deviation of fidelities plus iteration extremes."""
    if len(fidelities) == 0 or len(iterations) == 0:
        raise EmptyBatch("cannot summarise an empty batch")
    f = np.asarray(fidelities, dtype=float)
    n = np.asarray(iterations, dtype=float)
    return BatchStats(
        mean=float(f.mean()),
        std=float(f.std()),
        n_mean=float(n.mean()),
        n_min=int(n.min()),
        n_max=int(n.max()),
        histogram=histogram(f),
        count=len(f),
    )

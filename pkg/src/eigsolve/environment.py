"""Environment side of the loop: evolution under the unknown observable and single-shot readout."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .agent import AgentUnitary
from .errors import DimensionMismatch, InvalidEpsilon
from .qcore import Spectrum, eigendecompose, expm_hermitian, require_hermitian


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian matrix holding tau*O (the time constant is folded in)."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = require_hermitian(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def spectrum(self) -> Spectrum:
        return eigendecompose(self.matrix)

    @cached_property
    def evolution(self) -> np.ndarray:
        e = expm_hermitian(self.matrix)
        e.setflags(write=False)
        return e


def evolution_operator(o: Observable) -> np.ndarray:
    """exp(-i tau O); computed once per Observable."""
    return o.evolution


def outcome_distribution(o: Observable, d: AgentUnitary, j: int) -> np.ndarray:
    """Probabilities |<m| D^dag E D |j>|^2 over the computational basis."""
    if d.dim != o.dim:
        raise DimensionMismatch(f"agent dimension {d.dim} != observable dimension {o.dim}")
    dm = d.matrix
    amps = dm.conj().T @ (o.evolution @ dm[:, j])
    return amps.real**2 + amps.imag**2


@dataclass
class ShotSource:
    """Seeded uniform stream standing in for hardware single-shot randomness.

    ``(seed, stream, position)`` fully determines every subsequent draw, so a
    source can be rebuilt mid-trajectory for replay. Philox is used because it
    is counter-based and keyed: distinct streams under one seed never overlap.
    """

    seed: int
    stream: int = 0
    position: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        key = int(self.seed) | (int(self.stream) << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        if self.position:
            self._gen.random(self.position)

    def uniform(self) -> float:
        self.position += 1
        return float(self._gen.random())

    def uniforms(self, k: int) -> np.ndarray:
        self.position += k
        return self._gen.random(k)

    def fork(self, stream: int) -> ShotSource:
        """Independent source under the same seed (used for post-run estimation)."""
        return ShotSource(self.seed, stream)


def _sample_index(cdf: np.ndarray, u):
    idx = np.searchsorted(cdf, u, side="right")
    # Guard against u landing above a cdf that rounds to just under 1.
    last = int(np.flatnonzero(np.diff(np.concatenate(([0.0], cdf))) > 0)[-1])
    return np.minimum(idx, last)


def single_shot(dist: np.ndarray, src: ShotSource) -> int:
    """Draw one outcome by inverse CDF on a single uniform."""
    cdf = np.cumsum(dist)
    return int(_sample_index(cdf, src.uniform()))


def sample_shots(dist: np.ndarray, shots: int, src: ShotSource) -> np.ndarray:
    """``shots`` independent single-shot outcomes; identical to repeated single_shot calls."""
    cdf = np.cumsum(dist)
    return _sample_index(cdf, src.uniforms(shots)).astype(np.int64)


def measurement_flip_noise(dist: np.ndarray, eps: float) -> np.ndarray:
    """Convolve with independent per-bit readout flips of probability ``eps``."""
    if not 0.0 <= eps <= 0.5:
        raise InvalidEpsilon(f"flip probability must lie in [0, 0.5], got {eps}")
    dist = np.asarray(dist, dtype=float)
    if eps == 0.0:
        return dist
    dim = len(dist)
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise DimensionMismatch(f"bit-flip noise needs a power-of-two dimension, got {dim}")
    flip = np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])
    channel = np.ones((1, 1))
    for _ in range(n):
        channel = np.kron(channel, flip)
    return channel @ dist

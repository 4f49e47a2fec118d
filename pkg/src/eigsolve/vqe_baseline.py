"""Expectation-value VQE baseline used for single-shot budget comparisons.

Energies are estimated term by term from a Pauli expansion, each term from
its own batch of computational-basis shots after a basis change. The
optimiser is a plain Nelder-Mead simplex; every objective call costs
``shots_per_step`` single shots.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .environment import Observable, ShotSource, sample_shots
from .errors import InsufficientShots, MaxEvalsExceeded, ParamLengthMismatch
from .presets import ID2, SX, SY, SZ
from .qcore import require_hermitian

PAULI = {"I": ID2, "X": SX, "Y": SY, "Z": SZ}

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
_SDG = np.array([[1, 0], [0, -1j]], dtype=np.complex128)
# Maps each Pauli's +1/-1 eigenbasis onto |0>/|1>.
_BASIS_CHANGE = {"I": ID2, "Z": ID2, "X": _H, "Y": _H @ _SDG}


class PauliTerm(NamedTuple):
    coefficient: float
    label: str  # qubit 0 first, e.g. "ZI" acts with Z on qubit 0

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (PAULI[c] for c in self.label))


def pauli_decompose(o: Observable | np.ndarray, tol: float = 1e-12) -> list[PauliTerm]:
    """Expand ``tau*O`` as sum_P c_P P with c_P = Tr(P O) / 2^n, dropping |c_P| <= tol."""
    m = require_hermitian(o.matrix if isinstance(o, Observable) else o)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"Pauli expansion needs a 2^n dimensional matrix, got {dim}")
    terms = []
    for word in itertools.product("IXYZ", repeat=n):
        label = "".join(word)
        p = reduce(np.kron, (PAULI[c] for c in label))
        c = np.trace(p @ m).real / dim
        if abs(c) > tol:
            terms.append(PauliTerm(float(c), label))
    return terms


def _parity_signs(label: str) -> np.ndarray:
    n = len(label)
    mask = sum(1 << (n - 1 - q) for q, c in enumerate(label) if c != "I")
    idx = np.arange(1 << n)
    bits = np.array([bin(i & mask).count("1") for i in idx])
    return 1.0 - 2.0 * (bits % 2)


def allocate_shots(terms: Sequence[PauliTerm], shots: int) -> list[int]:
    """Equal split across terms; the remainder goes to the largest |coefficient|."""
    k = len(terms)
    if k == 0:
        return []
    if shots < k:
        raise InsufficientShots(f"{shots} shots cannot cover {k} measured Pauli terms")
    alloc = [shots // k] * k
    biggest = max(range(k), key=lambda i: abs(terms[i].coefficient))
    alloc[biggest] += shots - (shots // k) * k
    return alloc


def estimate_energy(
    terms: Sequence[PauliTerm],
    state: np.ndarray,
    shots_per_step: int | None,
    src: ShotSource | None = None,
) -> float:
    """Shot-based energy estimate; ``shots_per_step=None`` gives the exact expectation."""
    identity = sum(t.coefficient for t in terms if set(t.label) == {"I"})
    measured = [t for t in terms if set(t.label) != {"I"}]
    if shots_per_step is None:
        return identity + sum(
            t.coefficient * float(np.vdot(state, t.matrix() @ state).real) for t in measured
        )
    energy = identity
    for term, n_shots in zip(measured, allocate_shots(measured, shots_per_step)):
        rot = reduce(np.kron, (_BASIS_CHANGE[c] for c in term.label))
        amps = rot @ state
        probs = amps.real**2 + amps.imag**2
        outcomes = sample_shots(probs, n_shots, src)
        energy += term.coefficient * float(_parity_signs(term.label)[outcomes].mean())
    return energy


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a / 2.0), math.sin(a / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(a: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * a), 0.0], [0.0, np.exp(0.5j * a)]], dtype=np.complex128)


def _cnot(n: int, control: int, target: int) -> np.ndarray:
    dim = 1 << n
    u = np.zeros((dim, dim), dtype=np.complex128)
    cbit, tbit = 1 << (n - 1 - control), 1 << (n - 1 - target)
    for i in range(dim):
        u[i ^ tbit if i & cbit else i, i] = 1.0
    return u


def ansatz_state(params: Sequence[float], n_qubits: int) -> np.ndarray:
    """Hardware-efficient ansatz applied to |0...0>.

    Each layer holds ``n_qubits`` y-angles followed by ``n_qubits`` z-angles;
    every qubit gets Rz(z) Ry(y), then for n >= 2 a CNOT ladder 0->1->...->n-1.
    For one qubit a layer is the Euler gate Rz(lam) Ry(theta) acting on |0>.
    """
    params = np.asarray(params, dtype=float)
    per_layer = 2 * n_qubits
    if params.ndim != 1 or len(params) == 0 or len(params) % per_layer:
        raise ParamLengthMismatch(
            f"expected a multiple of {per_layer} parameters, got {params.shape}"
        )
    dim = 1 << n_qubits
    state = np.zeros(dim, dtype=np.complex128)
    state[0] = 1.0
    ladder = reduce(
        lambda a, b: b @ a,
        (_cnot(n_qubits, q, q + 1) for q in range(n_qubits - 1)),
        np.eye(dim, dtype=np.complex128),
    )
    for layer in params.reshape(-1, per_layer):
        ys, zs = layer[:n_qubits], layer[n_qubits:]
        local = reduce(np.kron, (_rz(z) @ _ry(y) for y, z in zip(ys, zs)))
        state = ladder @ (local @ state)
    return state


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool


def minimize(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    tolerance: float = 1e-3,
    max_evals: int = 1000,
    step: float = 0.5,
    strict: bool = False,
) -> MinimizeResult:
    """Nelder-Mead with reflect 1, expand 2, contract 0.5, shrink 0.5.

    Stops once every vertex lies within ``tolerance`` of the best one, or
    when ``max_evals`` objective calls have been spent. The evaluation count
    returned is exact.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return float(objective(x))

    simplex = [x0.copy()] + [x0 + step * np.eye(n)[i] for i in range(n)]
    values = [f(x) for x in simplex]
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        best = simplex[0]
        if max(np.max(np.abs(x - best)) for x in simplex[1:]) < tolerance:
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    values[i] = f(simplex[i])
    if not converged and strict:
        raise MaxEvalsExceeded(f"Nelder-Mead used {evals} evaluations without converging")
    return MinimizeResult(simplex[0], values[0], evals, converged)


def ground_fidelity(o: Observable, state: np.ndarray) -> float:
    """Projection weight of ``state`` on the lowest eigenspace of ``o``."""
    spec = o.spectrum
    low = spec.eigenvalues[0]
    block = [k for k, a in enumerate(spec.eigenvalues) if a - low <= 1e-8]
    overlaps = np.abs(spec.eigenvectors[:, block].conj().T @ state) ** 2
    return float(min(overlaps.sum(), 1.0))


@dataclass
class VqeRunRecord:
    label: str
    seed: int
    shots_per_step: int | None
    evals: int
    total_shots: int
    energy: float
    exact_energy: float
    fidelity: float
    converged: bool
    layers: int
    params: list[float]
    fidelity_trace: list[float] = field(default_factory=list, repr=False)

    def shots_to_fidelity(self, threshold: float) -> int | None:
        """Single shots spent before the best-so-far point first reached ``threshold``."""
        if self.shots_per_step is None:
            return None
        for k, fid in enumerate(self.fidelity_trace, start=1):
            if fid >= threshold:
                return k * self.shots_per_step
        return None


def run_vqe(
    o: Observable,
    shots_per_step: int | None,
    tolerance: float = 1e-2,
    seed: int = 0,
    layers: int | None = None,
    max_evals: int = 400,
) -> VqeRunRecord:
    """Minimise the estimated energy over the ansatz; ``shots_per_step=None`` is noiseless.

    Multi-qubit runs default to two layers: with a single layer |0...0> can be
    a local minimum (it is for the H2 preset).
    """
    terms = pauli_decompose(o)
    n = o.n_qubits
    if layers is None:
        layers = 1 if n == 1 else 2
    src = ShotSource(seed)
    jitter = ShotSource(seed, stream=1).uniforms(layers * 2 * n)
    x0 = 0.2 * jitter - 0.1
    trace: list[float] = []
    best = [math.inf]

    def objective(x):
        state = ansatz_state(x, n)
        e = estimate_energy(terms, state, shots_per_step, src)
        if e < best[0]:
            best[0] = e
            trace.append(ground_fidelity(o, state))
        else:
            trace.append(trace[-1])
        return e

    res = minimize(objective, x0, tolerance, max_evals)
    state = ansatz_state(res.x, n)
    return VqeRunRecord(
        label=o.label,
        seed=seed,
        shots_per_step=shots_per_step,
        evals=res.evals,
        total_shots=res.evals * shots_per_step if shots_per_step else 0,
        energy=res.fun,
        exact_energy=estimate_energy(terms, state, None),
        fidelity=ground_fidelity(o, state),
        converged=res.converged,
        layers=layers,
        params=[float(v) for v in res.x],
        fidelity_trace=trace,
    )

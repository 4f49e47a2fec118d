"""Dense complex linear algebra for small (2..16 dimensional) Hilbert spaces.

Matrices are plain ``numpy`` ``complex128`` arrays; the helpers here validate
shape and Hermiticity and provide a cyclic Jacobi eigensolver whose fixed
sweep order makes degenerate eigenbases reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

MAX_DIM = 16

_JACOBI_MAX_SWEEPS = 64


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` into a square complex matrix with 2 <= dim <= 16."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    dim = a.shape[0]
    if dim < 2:
        raise DimensionMismatch("matrix dimension must be at least 2")
    if dim > MAX_DIM:
        raise DimensionMismatch(f"matrix dimension {dim} exceeds the supported maximum {MAX_DIM}")
    return a


def as_state(s, tol: float = 1e-10) -> np.ndarray:
    v = np.array(s, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D state vector, got shape {v.shape}")
    norm = float(np.vdot(v, v).real)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector is not normalised (|v|^2 = {norm!r})")
    return v


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def hermitian_defect(m) -> tuple[float, tuple[int, int]]:
    """Largest ``|m[i,j] - conj(m[j,i])|`` and the (i, j) pair where it occurs."""
    a = np.asarray(m, dtype=np.complex128)
    diff = np.abs(a - a.conj().T)
    flat = int(np.argmax(diff))
    i, j = divmod(flat, a.shape[1])
    return float(diff[i, j]), (i, j)


def check_hermitian(m, tol: float = 1e-9) -> bool:
    return hermitian_defect(m)[0] <= tol


def require_hermitian(m, tol: float = 1e-9) -> np.ndarray:
    a = as_matrix(m)
    worst, (i, j) = hermitian_defect(a)
    if worst > tol:
        raise NonHermitianInput(
            f"matrix is not Hermitian: |m[{i}][{j}] - conj(m[{j}][{i}])| = {worst:.3e} > {tol:g}"
        )
    return a


def unitarity_defect(u) -> float:
    a = np.asarray(u, dtype=np.complex128)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def is_unitary(u, tol: float = 1e-9) -> bool:
    return unitarity_defect(u) <= tol


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with column-aligned orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def vector(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, j]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    # Zero a[p, q] in place: phase-rotate q so the pivot is real, then apply a
    # real Givens rotation. G = diag(1, e^{-i beta}) @ [[c, s], [-s, c]].
    b = a[p, q]
    mag = abs(b)
    phase = b / mag
    angle = 0.5 * math.atan2(2.0 * mag, a[q, q].real - a[p, p].real)
    c, s = math.cos(angle), math.sin(angle)
    g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]], dtype=np.complex128)
    idx = [p, q]
    a[:, idx] = a[:, idx] @ g
    a[idx, :] = g.conj().T @ a[idx, :]
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ g


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # Largest-magnitude component real-positive; first index wins ties.
    out = v.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.round(np.abs(col), 12)))
        out[:, j] = col * (abs(col[k]) / col[k])
    return out


def eigendecompose(m) -> Spectrum:
    """Diagonalise a Hermitian matrix with cyclic complex Jacobi sweeps.

    Raises NonHermitianInput if ``m`` is not Hermitian within 1e-9.
    """
    a = require_hermitian(m)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    tiny = 1e-300

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a)))
        if float(np.max(off)) <= 1e-16 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > tiny:
                    _jacobi_rotate(a, v, p, q)

    values = np.real(np.diag(a)).copy()
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = _fix_phase(v[:, order])
    values.setflags(write=False)
    vectors.setflags(write=False)
    return Spectrum(values, vectors)


def expm_hermitian(m) -> np.ndarray:
    """Return ``exp(-i m)`` for Hermitian ``m`` (time constant already folded in)."""
    spec = eigendecompose(m)
    v = spec.eigenvectors
    return (v * np.exp(-1j * spec.eigenvalues)) @ v.conj().T


def apply(u, s) -> np.ndarray:
    """Apply a unitary to a state vector."""
    u = np.asarray(u, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if u.ndim != 2 or s.ndim != 1 or u.shape[1] != s.shape[0]:
        raise DimensionMismatch(f"cannot apply {u.shape} operator to state of length {s.shape}")
    return u @ s


def polar_unitary(m) -> np.ndarray:
    """Closest unitary to ``m`` in Frobenius norm (polar factor via SVD)."""
    w, _, vh = np.linalg.svd(np.asarray(m, dtype=np.complex128))
    return w @ vh


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Hermitian matrix whose real and imaginary parts are drawn from [-scale, scale]."""
    x = rng.uniform(-scale, scale, (dim, dim)) + 1j * rng.uniform(-scale, scale, (dim, dim))
    return 0.5 * (x + x.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)

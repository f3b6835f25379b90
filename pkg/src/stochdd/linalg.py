"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy.ndarray`` objects of dtype ``complex128`` and
shape ``(d, d)``.  All functions here are pure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import tolerances as tol
from .errors import MatrixOverflow, NoConvergence, NotHermitian, NotUnitary

__all__ = [
    "EigenDecomposition",
    "as_matrix",
    "adjoint",
    "commutator",
    "is_hermitian",
    "is_unitary",
    "hermitian_eig",
    "unitary_eig",
    "expm_hermitian_generator",
    "expm_general",
    "operator_norm",
]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _spectral_norm_fast(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def is_hermitian(a: np.ndarray, rtol: float = tol.HERMITICITY) -> bool:
    scale = max(_spectral_norm_fast(a), 1.0)
    return _spectral_norm_fast(a - adjoint(a)) <= rtol * scale


def is_unitary(u: np.ndarray, atol: float = tol.UNITARITY) -> bool:
    d = u.shape[0]
    return _spectral_norm_fast(adjoint(u) @ u - np.eye(d)) <= atol


def _order(values: np.ndarray, key_re: np.ndarray, key_im: np.ndarray) -> np.ndarray:
    # ascending primary key, ties by imaginary part, then by original index
    idx = np.arange(len(values))
    return np.lexsort((idx, key_im, key_re))


def hermitian_eig(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues are real and sorted ascending (ties resolved by index), so the
    output is bit-stable for identical input.

    Raises
    ------
    NotHermitian
        If ``||A - A^dagger||_op > 1e-10 ||A||_op``.
    NoConvergence
        If LAPACK fails to converge.
    """
    a = as_matrix(a)
    if not is_hermitian(a):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    herm = 0.5 * (a + adjoint(a))
    try:
        w, v = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    order = _order(w, w, np.zeros_like(w))
    return EigenDecomposition(w[order].astype(np.complex128), v[:, order])


def unitary_eig(u) -> EigenDecomposition:
    """Eigendecomposition of a unitary matrix via the complex Schur form.

    A unitary matrix is normal, so its Schur factor is diagonal and the Schur
    vectors are an orthonormal eigenbasis, even inside degenerate eigenspaces.
    No matrix logarithm is involved.  Eigenvalues are renormalised onto the
    unit circle and sorted by eigenphase in ``(-pi, pi]``.
    """
    u = as_matrix(u)
    if not is_unitary(u):
        raise NotUnitary("matrix is not unitary within tolerance")
    try:
        t, z = sla.schur(u, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc
    lam = np.diag(t).copy()
    lam /= np.abs(lam)
    phases = np.angle(lam)
    order = _order(lam, phases, lam.imag)
    return EigenDecomposition(lam[order], z[:, order])


def expm_hermitian_generator(h, s: float) -> np.ndarray:
    """Return ``exp(-i H s)`` for Hermitian ``H`` through its spectrum."""
    dec = hermitian_eig(h)
    v = dec.eigenvectors
    phases = np.exp(-1j * dec.eigenvalues.real * s)
    return (v * phases) @ v.conj().T


def expm_general(a) -> np.ndarray:
    """Matrix exponential of an arbitrary square matrix.

    Scaling and squaring with a degree-13 Pade approximant (scipy's
    Al-Mohy/Higham implementation).
    """
    a = as_matrix(a)
    with np.errstate(over="ignore", invalid="ignore"):
        out = sla.expm(a)
    if not np.all(np.isfinite(out)):
        raise MatrixOverflow("matrix exponential overflowed")
    return out


def operator_norm(a) -> float:
    """Largest singular value, taken from the spectrum of ``A^dagger A``."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    gram = adjoint(a) @ a
    gram = 0.5 * (gram + adjoint(gram))
    w = np.linalg.eigvalsh(gram)
    return float(np.sqrt(max(w[-1], 0.0)))

"""Operator constructors: Pauli matrices, tensor products, truncated bosons.

Basis convention: each qubit site is ordered ``(|0>, |1>)`` and
``sigma_z = |1><1| - |0><0|``, so ``|0>`` is the -1 eigenstate.  ``sigma_x``
is the usual flip and ``sigma_y`` is fixed by ``[X, Y] = 2iZ``.  Site 1 is the
leftmost tensor factor.  hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DimensionTooLarge, EmptyList, PhiOutOfRange

MAX_QUBITS = 6

_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
    "Z": np.array([[-1, 0], [0, 1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliCoefficients:
    c0: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    cz: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.c0, self.cx, self.cy, self.cz])):
            raise ValueError("Pauli coefficients must be finite")


@dataclass(frozen=True)
class QubitRegister:
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")

    @property
    def dims(self) -> list[int]:
        return [2] * self.n_sites

    @property
    def dim(self) -> int:
        return 2**self.n_sites


@dataclass(frozen=True)
class BosonicSpace:
    truncation_dim: int

    def __post_init__(self):
        if self.truncation_dim < 2:
            raise ValueError("truncation_dim must be >= 2")


def pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis.upper()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def site_operator(coeffs: PauliCoefficients) -> np.ndarray:
    """``c0 I + cx X + cy Y + cz Z`` on one qubit."""
    return (
        coeffs.c0 * _PAULI["I"]
        + coeffs.cx * _PAULI["X"]
        + coeffs.cy * _PAULI["Y"]
        + coeffs.cz * _PAULI["Z"]
    )


def tensor(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product in site order (first element is the leftmost factor)."""
    ops = list(ops)
    if not ops:
        raise EmptyList("tensor() needs at least one operator")
    return reduce(np.kron, (np.asarray(o, dtype=np.complex128) for o in ops))


def embed(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Place a single-site operator at ``site`` (0-based) of a product space."""
    factors = [np.eye(d, dtype=np.complex128) for d in dims]
    if op.shape != (dims[site], dims[site]):
        raise DimensionMismatch("operator does not match the site dimension")
    factors[site] = op
    return tensor(factors)


def pauli_string(axes: str) -> np.ndarray:
    """Tensor product such as ``pauli_string("ZI")``."""
    return tensor([pauli(a) for a in axes])


def spin_bath_hamiltonian(K: int, omegas: Sequence[float], couplings: Sequence[float]) -> np.ndarray:
    """Central spin (site 1) coupled isotropically to ``K`` bath spins.

    ``sum_k A_k (XX + YY + ZZ)_{1,k} + sum_k omega_k/2 Z_k``.  ``omegas`` has
    ``K + 1`` entries (electron first), ``couplings`` has ``K``.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if K + 1 > MAX_QUBITS:
        raise DimensionTooLarge(f"K={K} exceeds the 2^{MAX_QUBITS} dimension cap")
    if len(omegas) != K + 1 or len(couplings) != K:
        raise DimensionMismatch("need K+1 frequencies and K couplings")
    dims = [2] * (K + 1)
    h = np.zeros((2 ** (K + 1),) * 2, dtype=np.complex128)
    for k, omega in enumerate(omegas):
        h += 0.5 * omega * embed(_PAULI["Z"], k, dims)
    for k, a_k in enumerate(couplings, start=1):
        for ax in "XYZ":
            factors = [_PAULI["I"]] * (K + 1)
            factors[0] = _PAULI[ax]
            factors[k] = _PAULI[ax]
            h += a_k * tensor(factors)
    return h


def stretched_exp_couplings(K: int, omega: float) -> list[float]:
    """``A_k = omega * exp(-(k/5)^(1/3))`` for bath spins ``k = 1..K``."""
    return [omega * float(np.exp(-((k / 5.0) ** (1.0 / 3.0)))) for k in range(1, K + 1)]


def boson_ladder(space: BosonicSpace) -> tuple[np.ndarray, np.ndarray]:
    d = space.truncation_dim
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(np.complex128)
    return a, a.conj().T


def number_operator(space: BosonicSpace) -> np.ndarray:
    return np.diag(np.arange(space.truncation_dim, dtype=float)).astype(np.complex128)


def parity_phase_pulse(space: BosonicSpace, phi: float) -> np.ndarray:
    """``exp(i phi a^dagger a)`` for ``phi`` in ``(0, pi]``."""
    if not (0.0 < phi <= np.pi):
        raise PhiOutOfRange(f"phi={phi} outside (0, pi]")
    n = np.arange(space.truncation_dim)
    return np.diag(np.exp(1j * phi * n))


def coherent_state(space: BosonicSpace, alpha: complex) -> np.ndarray:
    """Truncated coherent state, renormalised on the kept Fock levels."""
    d = space.truncation_dim
    amps = np.empty(d, dtype=np.complex128)
    amps[0] = 1.0
    for n in range(1, d):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps / np.linalg.norm(amps)


def top_level_population(rho: np.ndarray, dims: Sequence[int], site: int, levels: int = 2) -> float:
    """Population of the highest ``levels`` Fock states of one site."""
    red = partial_trace(rho, dims, [site])
    return float(np.real(np.trace(red[-levels:, -levels:])))


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Reduced operator on the sites in ``keep`` (0-based, returned in site order)."""
    rho = np.asarray(rho, dtype=np.complex128)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise DimensionMismatch(f"dims {dims} do not match operator shape {rho.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch("site index out of range")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # contract each traced site's row index against its column index
    row = list(range(n))
    col = [n + k if k in keep else k for k in range(n)]
    out = keep + [n + k for k in keep]
    red = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return red.reshape(dk, dk)

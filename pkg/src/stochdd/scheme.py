"""Decoupling schemes and their continuous-control limits.

Pulses are stored in application order: ``u_1`` acts first.  Partial
products are ``g_0 = I`` and ``g_n = u_n ... u_1``, and the cycle unitary is
``U = g_M``.

The limit of the Cesaro mean ``(1/N) sum_k U^k X U^-k`` is the orthogonal
(Hilbert-Schmidt) projection of ``X`` onto the commutant of ``U``.  For a
finite-dimensional unitary this is ``sum_g Pi_g X Pi_g`` over the spectral
projectors ``Pi_g`` of the distinct eigenvalues, which is what
:func:`ergodic_projector` evaluates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tolerances as tol
from .errors import ClusterAmbiguity, DimensionMismatch, NotUnitary
from .linalg import adjoint, as_matrix, is_unitary, operator_norm, unitary_eig

__all__ = [
    "DecouplingScheme",
    "SchemeLimits",
    "CommutantProjector",
    "partial_products",
    "scheme_products",
    "ergodic_projector",
    "cesaro_oracle",
    "scheme_limit",
    "finite_generator_terms",
]

_MAX_PERIOD_CYCLES = 64


def _proportional_to_identity(u: np.ndarray, atol: float = tol.CYCLE_IDENTITY) -> bool:
    phase = np.trace(u) / u.shape[0]
    if abs(abs(phase) - 1.0) > atol:
        return False
    return operator_norm(u - phase * np.eye(u.shape[0])) <= atol


@dataclass(frozen=True)
class DecouplingScheme:
    """One cycle ``u_1 ... u_M`` of instantaneous unitary pulses."""

    pulses: tuple
    cycle_unitary: np.ndarray = field(init=False, repr=False)
    cycle_is_identity: bool = field(init=False)

    def __post_init__(self):
        pulses = tuple(as_matrix(p) for p in self.pulses)
        if not pulses:
            raise ValueError("a scheme needs at least one pulse")
        d = pulses[0].shape[0]
        for p in pulses:
            if p.shape != (d, d):
                raise DimensionMismatch("all pulses must share one dimension")
            if not is_unitary(p):
                raise NotUnitary("every pulse must be unitary")
        u = np.eye(d, dtype=np.complex128)
        for p in pulses:
            u = p @ u
        object.__setattr__(self, "pulses", pulses)
        object.__setattr__(self, "cycle_unitary", u)
        object.__setattr__(
            self, "cycle_is_identity", operator_norm(u - np.eye(d)) <= tol.CYCLE_IDENTITY
        )

    @property
    def dim(self) -> int:
        return self.pulses[0].shape[0]

    @property
    def length(self) -> int:
        return len(self.pulses)

    @property
    def period(self) -> int | None:
        """Smallest pulse count after which the accumulated pulses act trivially.

        That is the smallest ``k*M`` with ``U^k`` proportional to the identity;
        ``None`` if no such ``k <= 64`` exists.
        """
        u = self.cycle_unitary
        acc = np.eye(self.dim, dtype=np.complex128)
        for k in range(1, _MAX_PERIOD_CYCLES + 1):
            acc = u @ acc
            if _proportional_to_identity(acc):
                return k * self.length
        return None

    def pulse(self, n: int) -> np.ndarray:
        """Pulse ``u_n`` (1-based) of the periodically repeated scheme."""
        return self.pulses[(n - 1) % self.length]


@dataclass(frozen=True)
class SchemeLimits:
    effective_hamiltonian: np.ndarray
    effective_error: np.ndarray


def partial_products(scheme: DecouplingScheme) -> list[np.ndarray]:
    """``[g_0, g_1, ..., g_M]`` with ``g_n = u_n ... u_1``."""
    g = [np.eye(scheme.dim, dtype=np.complex128)]
    for p in scheme.pulses:
        g.append(p @ g[-1])
    return g


def scheme_products(scheme: DecouplingScheme, N: int) -> list[np.ndarray]:
    """``[g_0, ..., g_{N-1}]`` of the periodically repeated scheme."""
    g = [np.eye(scheme.dim, dtype=np.complex128)]
    for n in range(1, N):
        g.append(scheme.pulse(n) @ g[-1])
    return g


def _cluster_phases(phases: np.ndarray, cluster_tol: float) -> list[np.ndarray]:
    n = len(phases)
    if n == 1:
        return [np.array([0])]
    gaps = np.empty(n)
    gaps[:-1] = np.diff(phases)
    gaps[-1] = phases[0] + 2 * np.pi - phases[-1]
    guard = (gaps > cluster_tol) & (gaps <= 10 * cluster_tol)
    if np.any(guard):
        raise ClusterAmbiguity(
            f"eigenphase gap {gaps[guard].min():.3e} lies in the guard band "
            f"({cluster_tol:.1e}, {10 * cluster_tol:.1e}]"
        )
    cuts = np.flatnonzero(gaps > cluster_tol)  # a cut after index i
    if len(cuts) == 0:
        return [np.arange(n)]
    clusters = []
    start = (cuts[-1] + 1) % n
    for c in cuts:
        stop = c + 1
        if start <= c:
            clusters.append(np.arange(start, stop))
        else:  # wraps through -pi/pi
            clusters.append(np.concatenate((np.arange(start, n), np.arange(0, stop))))
        start = stop % n
    return clusters


class CommutantProjector:
    """Projection onto ``{X : UX = XU}``, precomputed for one unitary ``U``."""

    def __init__(self, u, cluster_tol: float = tol.CLUSTER):
        dec = unitary_eig(u)
        phases = np.angle(dec.eigenvalues)
        self.eigenvalues = dec.eigenvalues
        self.clusters = _cluster_phases(phases, cluster_tol)
        self.projectors = []
        for idx in self.clusters:
            v, _ = np.linalg.qr(dec.eigenvectors[:, idx])
            self.projectors.append(v @ adjoint(v))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        out = np.zeros_like(x)
        for p in self.projectors:
            out += p @ x @ p
        return out


def ergodic_projector(u, x, cluster_tol: float = tol.CLUSTER) -> np.ndarray:
    """Project ``x`` onto the commutant of the unitary ``u``.

    Eigenphases of ``u`` closer than ``cluster_tol`` are treated as one
    eigenvalue.  Raises :class:`ClusterAmbiguity` when a gap falls in
    ``(cluster_tol, 10*cluster_tol]``.
    """
    return CommutantProjector(u, cluster_tol)(x)


def cesaro_oracle(u, x, N: int) -> np.ndarray:
    """Finite Cesaro mean ``(1/N) sum_{k<N} U^k X U^-k`` by brute force.

    Uses only matrix products (binary doubling on ``N``), no spectral data.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    u = np.asarray(u, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    # invariant: block = sum_{k<m} U^k X U^-k and power = U^m, m = 2^i
    block, power = x.copy(), u.copy()
    total = np.zeros_like(x)
    shift = np.eye(u.shape[0], dtype=np.complex128)  # U^(terms already in total)
    remaining = N
    while remaining:
        if remaining & 1:
            total += shift @ block @ adjoint(shift)
            shift = shift @ power
        remaining >>= 1
        if remaining:
            block = block + power @ block @ adjoint(power)
            power = power @ power
    return total / N


def _cycle_average(scheme: DecouplingScheme, x: np.ndarray) -> np.ndarray:
    g = partial_products(scheme)[:-1]
    return sum(gj @ x @ adjoint(gj) for gj in g) / len(g)


def scheme_limit(scheme: DecouplingScheme, h, b, cluster_tol: float = tol.CLUSTER) -> SchemeLimits:
    """Continuous-control limits of the Hamiltonian and the error operator.

    Both are ``P((1/M) sum_{j<M} g_j X g_j^dagger)``; the projection is
    skipped when the cycle unitary is the identity.
    """
    h = as_matrix(h)
    b = as_matrix(b)
    if h.shape != (scheme.dim, scheme.dim) or b.shape != h.shape:
        raise DimensionMismatch("H, B and the pulses must share one dimension")
    h_avg = _cycle_average(scheme, h)
    b_avg = _cycle_average(scheme, b)
    if not scheme.cycle_is_identity:
        proj = CommutantProjector(scheme.cycle_unitary, cluster_tol)
        h_avg, b_avg = proj(h_avg), proj(b_avg)
    return SchemeLimits(h_avg, b_avg)


def finite_generator_terms(products: Sequence[np.ndarray], h, b, N: int):
    """Generator terms ``(H_N, B_N, C_N)`` at vanishing pulse spacing.

    ``products`` is ``[g_0, ..., g_{N-1}]``.  With ``b_k = g_k B g_k^dagger``:
    ``H_N`` and ``B_N`` are plain averages and
    ``C_N = (sum_k b_k^2 + 2 sum_{j<k} b_j b_k) / N^2``.
    """
    if len(products) != N:
        raise ValueError(f"expected {N} partial products, got {len(products)}")
    h = as_matrix(h)
    b = as_matrix(b)
    h_sum = np.zeros_like(h)
    b_sum = np.zeros_like(b)
    c_sum = np.zeros_like(b)
    for g in products:
        gd = adjoint(g)
        h_sum += g @ h @ gd
        bk = g @ b @ gd
        # b_sum holds sum_{j<k} b_j at this point
        c_sum += bk @ bk + 2.0 * b_sum @ bk
        b_sum += bk
    return h_sum / N, b_sum / N, c_sum / N**2

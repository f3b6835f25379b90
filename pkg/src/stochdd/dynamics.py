"""Time evolution under noisy decoupling.

Three routes are provided:

* :func:`propagate_finite_pulses` -- ``N`` instantaneous pulses spread evenly
  over ``[0, t]``.  Every pulse of one run carries the same noise factor
  ``exp(-i sqrt(gamma) B W_t / N)``, with a single terminal Wiener draw
  ``W_t`` per run.
* :func:`continuous_trajectory` -- one realisation of the continuous-control
  limit, integrated with the split step ``exp(-i Hc dt) exp(-i sqrt(gamma) Bc dW)``.
* :func:`averaged_lindblad` -- the ensemble average, i.e. the master equation
  ``drho/dt = -i[Hc, rho] - gamma/2 [Bc, [Bc, rho]]``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import tolerances as tol
from .errors import DimensionMismatch, DimensionTooLarge, NotCycleMultiple, NotHermitian
from .linalg import (
    adjoint,
    as_matrix,
    expm_general,
    expm_hermitian_generator,
    hermitian_eig,
    is_hermitian,
)
from .operators import partial_trace
from .scheme import DecouplingScheme
from .stochastic import WienerPath

__all__ = [
    "NoiseModel",
    "Scenario",
    "TrajectoryResult",
    "propagate_finite_pulses",
    "finite_pulse_unitaries",
    "continuous_trajectory",
    "split_step_unitaries",
    "averaged_lindblad",
    "lindblad_superoperator",
    "phase_damped_solution",
    "ideal_reference",
    "averaged_pulse",
    "evolve_state",
]


@dataclass(frozen=True)
class NoiseModel:
    """Error operator ``B`` and noise strength ``gamma`` of the pulse SDE."""

    B: np.ndarray
    gamma: float
    _eig: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = as_matrix(self.B)
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        dec = hermitian_eig(b)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "_eig", (dec.eigenvalues.real, dec.eigenvectors))

    def kicks(self, w) -> np.ndarray:
        """``exp(-i sqrt(gamma) B w)`` for a scalar or an array of ``w``."""
        vals, vecs = self._eig
        w = np.asarray(w, dtype=float)
        phases = np.exp(-1j * np.sqrt(self.gamma) * np.multiply.outer(w, vals))
        return (vecs * phases[..., None, :]) @ adjoint(vecs)


@dataclass
class Scenario:
    """Physical setup: Hamiltonian, initial state and the protected subsystem.

    ``psi0`` is the pure initial state of the protected sites and
    ``ideal_generator`` generates its reference evolution.
    """

    H: np.ndarray
    rho0: np.ndarray
    site_dims: Sequence[int]
    protected_sites: Sequence[int]
    psi0: np.ndarray
    ideal_generator: np.ndarray
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H = as_matrix(self.H)
        self.rho0 = as_matrix(self.rho0)
        self.site_dims = [int(d) for d in self.site_dims]
        self.protected_sites = tuple(sorted(int(s) for s in self.protected_sites))
        self.psi0 = np.asarray(self.psi0, dtype=np.complex128)
        self.ideal_generator = as_matrix(self.ideal_generator)
        d = int(np.prod(self.site_dims))
        if self.H.shape != (d, d) or self.rho0.shape != (d, d):
            raise DimensionMismatch("H and rho0 must match the site dimensions")
        if not is_hermitian(self.H):
            raise NotHermitian("H must be Hermitian")
        if not is_hermitian(self.ideal_generator):
            raise NotHermitian("ideal_generator must be Hermitian")
        dp = int(np.prod([self.site_dims[s] for s in self.protected_sites]))
        if self.psi0.shape != (dp,) or self.ideal_generator.shape != (dp, dp):
            raise DimensionMismatch("psi0 / ideal_generator must live on the protected sites")
        if abs(np.trace(self.rho0).real - 1.0) > tol.STATE_TRACE:
            raise ValueError("rho0 must have unit trace")
        if not is_hermitian(self.rho0) or np.linalg.eigvalsh(self.rho0)[0] < tol.STATE_PSD_FLOOR:
            raise ValueError("rho0 must be a positive semidefinite Hermitian matrix")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def reduce(self, rho: np.ndarray) -> np.ndarray:
        """Reduced state on the protected sites."""
        return partial_trace(rho, self.site_dims, self.protected_sites)

    def protected_projector(self, psi: np.ndarray) -> np.ndarray:
        """``|psi><psi|`` on the protected sites tensored with identity elsewhere."""
        n = len(self.site_dims)
        rest = [s for s in range(n) if s not in self.protected_sites]
        dr = int(np.prod([self.site_dims[s] for s in rest])) if rest else 1
        op = np.kron(np.outer(psi, psi.conj()), np.eye(dr))
        # op is ordered (protected..., rest...); permute factors back to site order
        order = list(self.protected_sites) + rest
        dims_in = [self.site_dims[s] for s in order]
        t = op.reshape(dims_in + dims_in)
        inv = np.argsort(order)
        t = t.transpose(list(inv) + [n + i for i in inv])
        return t.reshape(self.dim, self.dim)


@dataclass
class TrajectoryResult:
    times: np.ndarray
    states: np.ndarray
    wiener_record: dict = field(default_factory=dict)


def evolve_state(unitaries: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """``U rho0 U^dagger`` for a single or stacked ``U``."""
    return unitaries @ rho0 @ np.conj(np.swapaxes(unitaries, -1, -2))


def finite_pulse_unitaries(
    scheme: DecouplingScheme, H: np.ndarray, noise: NoiseModel, t: float, N: int, w_t
) -> np.ndarray:
    """Propagators ``U_N(t)`` for one or many terminal Wiener values ``w_t``.

    ``U_N(t) = prod_k [K u_{N-k}] exp(-i H t/N)`` with free evolution acting
    first in every slot and the same kick ``K = exp(-i sqrt(gamma) B w_t/N)``
    on every pulse.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N % scheme.length:
        raise NotCycleMultiple(f"N={N} is not a multiple of the cycle length {scheme.length}")
    if H.shape != (scheme.dim, scheme.dim) or noise.B.shape != H.shape:
        raise DimensionMismatch("H, B and the pulses must share one dimension")
    free = expm_hermitian_generator(H, t / N)
    kick = noise.kicks(np.asarray(w_t, dtype=float) / N)
    block = np.broadcast_to(np.eye(scheme.dim, dtype=np.complex128), kick.shape).copy()
    for p in scheme.pulses:
        block = kick @ (p @ free) @ block
    return np.linalg.matrix_power(block, N // scheme.length)


def propagate_finite_pulses(
    scenario: Scenario, scheme: DecouplingScheme, noise: NoiseModel, t: float, N: int, w_t: float
) -> np.ndarray:
    """State after ``N`` noisy pulses on ``[0, t]`` for one run with terminal draw ``w_t``."""
    u = finite_pulse_unitaries(scheme, scenario.H, noise, t, N, float(w_t))
    return evolve_state(u, scenario.rho0)


def split_step_unitaries(h_eff, b_eff, gamma: float, increments: np.ndarray, dt: float, record_every: int = 1):
    """Split-step propagators for a batch of Brownian increment sequences.

    ``increments`` has shape ``(batch, steps)``.  Each step applies
    ``exp(-i Hc dt) exp(-i sqrt(gamma) Bc dW)``.  Returns the propagators at
    steps ``0, record_every, 2*record_every, ...`` with shape
    ``(records, batch, d, d)``.
    """
    h_eff = as_matrix(h_eff)
    b_eff = as_matrix(b_eff)
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    batch, steps = increments.shape
    if steps % record_every:
        raise ValueError("record_every must divide the number of steps")
    dec = hermitian_eig(b_eff)
    vals, vecs = dec.eigenvalues.real, dec.eigenvectors
    # work in the eigenbasis of Bc, where the noise factor is diagonal
    free = adjoint(vecs) @ expm_hermitian_generator(h_eff, dt) @ vecs
    d = h_eff.shape[0]
    u = np.broadcast_to(np.eye(d, dtype=np.complex128), (batch, d, d)).copy()
    out = [vecs @ u @ adjoint(vecs)]
    root = np.sqrt(gamma)
    for k in range(steps):
        phase = np.exp(-1j * root * np.multiply.outer(increments[:, k], vals))
        u = free @ (phase[:, :, None] * u)
        if (k + 1) % record_every == 0:
            out.append(vecs @ u @ adjoint(vecs))
    return np.stack(out)


def continuous_trajectory(h_eff, b_eff, gamma: float, rho0, path: WienerPath, record_every: int = 1) -> TrajectoryResult:
    """One realisation of the continuous-control dynamics along ``path``.

    Exact when ``[Hc, Bc] = 0``, weak order one otherwise.  The Ito drift
    ``-gamma/2 Bc^2 dt`` is carried by the second-order term of the noise
    exponential, so every step is exactly unitary.
    """
    rho0 = as_matrix(rho0)
    us = split_step_unitaries(h_eff, b_eff, gamma, path.increments[None, :], path.dt, record_every)
    states = evolve_state(us[:, 0], rho0)
    times = path.times[::record_every]
    record = {"terminal": path.terminal, "n_steps": path.n_steps}
    return TrajectoryResult(times, states, record)


def lindblad_superoperator(h_eff, b_eff, gamma: float) -> np.ndarray:
    """Row-major vectorised generator of ``-i[Hc, .] - gamma/2 [Bc, [Bc, .]]``."""
    h = as_matrix(h_eff)
    b = as_matrix(b_eff)
    d = h.shape[0]
    eye = np.eye(d)
    b2 = b @ b
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T)) - 0.5 * gamma * (
        np.kron(b2, eye) + np.kron(eye, b2.T) - 2.0 * np.kron(b, b.T)
    )


_PROPAGATOR_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()
_CACHE_MAX = 64


def _step_propagator(h, b, gamma: float, dt: float) -> np.ndarray:
    key = (h.tobytes(), b.tobytes(), h.shape, float(gamma), float(dt))
    with _CACHE_LOCK:
        hit = _PROPAGATOR_CACHE.get(key)
    if hit is not None:
        return hit
    prop = expm_general(lindblad_superoperator(h, b, gamma) * dt)
    with _CACHE_LOCK:
        if len(_PROPAGATOR_CACHE) >= _CACHE_MAX:
            _PROPAGATOR_CACHE.pop(next(iter(_PROPAGATOR_CACHE)))
        _PROPAGATOR_CACHE[key] = prop
    return prop


def averaged_lindblad(h_eff, b_eff, gamma: float, rho0, t: float, steps: int, method: str = "auto") -> TrajectoryResult:
    """Solve the averaged master equation on ``steps + 1`` equally spaced times.

    ``method="superoperator"`` exponentiates the ``d^2 x d^2`` generator once
    per step size (cached) and is limited to ``d <= 16``.  ``"stepwise"``
    integrates the matrix ODE with an adaptive 8th-order Runge-Kutta method.
    ``"auto"`` picks the first when allowed.
    """
    h = as_matrix(h_eff)
    b = as_matrix(b_eff)
    rho0 = as_matrix(rho0)
    d = h.shape[0]
    if b.shape != h.shape or rho0.shape != h.shape:
        raise DimensionMismatch("Hc, Bc and rho0 must share one dimension")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    times = np.linspace(0.0, t, steps + 1)
    if method == "auto":
        method = "superoperator" if d <= tol.SUPEROPERATOR_MAX_DIM else "stepwise"
    if method == "superoperator":
        if d > tol.SUPEROPERATOR_MAX_DIM:
            raise DimensionTooLarge(f"superoperator route is capped at dim {tol.SUPEROPERATOR_MAX_DIM}")
        prop = _step_propagator(h, b, gamma, t / steps)
        states = np.empty((steps + 1, d, d), dtype=np.complex128)
        vec = rho0.reshape(-1)
        states[0] = rho0
        for k in range(1, steps + 1):
            vec = prop @ vec
            states[k] = vec.reshape(d, d)
    elif method == "stepwise":
        b2 = b @ b

        def rhs(_, y):
            r = y.view(np.complex128).reshape(d, d)
            dr = -1j * (h @ r - r @ h) - 0.5 * gamma * (b2 @ r + r @ b2 - 2.0 * b @ r @ b)
            return dr.reshape(-1).view(np.float64)

        sol = solve_ivp(
            rhs, (0.0, t), rho0.reshape(-1).view(np.float64).copy(), method="DOP853",
            t_eval=times, rtol=1e-11, atol=1e-13,
        )
        states = sol.y.T.copy().view(np.complex128).reshape(steps + 1, d, d)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TrajectoryResult(times, states, {})


def phase_damped_solution(rho0, omega_a: float, gamma: float, t: float) -> np.ndarray:
    """Closed-form phase-damped oscillator in the Fock basis.

    ``rho_nm(t) = exp(-i omega_a (n-m) t) exp(-(n-m)^2 gamma t / 2) rho_nm(0)``.
    """
    rho0 = np.asarray(rho0, dtype=np.complex128)
    n = np.arange(rho0.shape[0])
    diff = np.subtract.outer(n, n)
    return rho0 * np.exp(-1j * omega_a * diff * t - 0.5 * diff**2 * gamma * t)


def ideal_reference(scenario: Scenario, t: float) -> np.ndarray:
    """Reference pure state ``exp(-i G t) psi0`` of the protected sites."""
    return expm_hermitian_generator(scenario.ideal_generator, t) @ scenario.psi0


def averaged_pulse(noise: NoiseModel, u0, t: float) -> np.ndarray:
    """Ensemble mean ``exp(-gamma/2 B^2 t) u0`` of a noisy pulse."""
    vals, vecs = noise._eig
    damp = np.exp(-0.5 * noise.gamma * vals**2 * t)
    return (vecs * damp) @ adjoint(vecs) @ as_matrix(u0)

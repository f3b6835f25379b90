"""Closed-form convergence bounds and their Monte Carlo counterparts.

All bounds control the operator-norm distance between the states reached
with ``N`` and ``N + L`` pulses.  Each closed form is written as a sum of
``expm1`` terms so that small exponents do not lose precision.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import NoiseModel, Scenario, evolve_state, finite_pulse_unitaries
from .errors import NegativeTime, NotCycleMultiple
from .linalg import operator_norm
from .metrics import ensemble_stats
from .scheme import DecouplingScheme
from .stochastic import RngStream, correlated_pair

__all__ = [
    "BoundInputs",
    "RegimeWarning",
    "REGIME_THRESHOLD",
    "deterministic_cycle_bound",
    "single_step_bound",
    "stochastic_bound_cycle2",
    "stochastic_bound_cycle4",
    "empirical_distance",
    "distance_samples",
    "inputs_from",
]

REGIME_THRESHOLD = 1e-2


class RegimeWarning(UserWarning):
    """The stochastic bounds assume ``t / N^3 << 1``; raised as a warning when violated."""


@dataclass(frozen=True)
class BoundInputs:
    h_norm: float
    b_norm: float
    rho_norm: float
    gamma: float
    t: float
    N: int
    L: int = 1

    def __post_init__(self):
        if min(self.h_norm, self.b_norm, self.rho_norm) < 0:
            raise ValueError("norms must be non-negative")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.t < 0:
            raise NegativeTime(f"t={self.t} < 0")
        if self.N < 1 or self.L < 1:
            raise ValueError("N and L must be >= 1")


def inputs_from(scenario: Scenario, noise: NoiseModel, t: float, N: int, L: int) -> BoundInputs:
    """Collect the operator norms of a scenario into :class:`BoundInputs`."""
    return BoundInputs(
        h_norm=operator_norm(scenario.H),
        b_norm=operator_norm(noise.B),
        rho_norm=operator_norm(scenario.rho0),
        gamma=noise.gamma,
        t=t,
        N=N,
        L=L,
    )


def _require_multiple(N: int, L: int) -> None:
    if N % L:
        raise NotCycleMultiple(f"N={N} is not a multiple of the cycle length {L}")


def deterministic_cycle_bound(inp: BoundInputs) -> float:
    """``|rho| [(e^{2 L |H| t/N} - 1) + L (e^{2 |H| t/N} - 1)]``."""
    _require_multiple(inp.N, inp.L)
    x = 2.0 * inp.h_norm * inp.t / inp.N
    return inp.rho_norm * (math.expm1(inp.L * x) + inp.L * math.expm1(x))


def single_step_bound(inp: BoundInputs, pulse_term: float) -> float:
    """One-pulse bound: the ``L = 1`` cycle bound plus a caller-supplied pulse term.

    ``pulse_term`` is ``|rho_N - u_{N+1} rho_N u_{N+1}^dagger|``.
    """
    if pulse_term < 0:
        raise ValueError("pulse_term must be non-negative")
    one = BoundInputs(inp.h_norm, inp.b_norm, inp.rho_norm, inp.gamma, inp.t, inp.N, 1)
    return deterministic_cycle_bound(one) + pulse_term


def _check_regime(inp: BoundInputs) -> None:
    ratio = inp.t / inp.N**3
    if ratio > REGIME_THRESHOLD:
        warnings.warn(
            f"t/N^3 = {ratio:.3g} exceeds {REGIME_THRESHOLD}; the averaged bound assumes t/N^3 << 1",
            RegimeWarning,
            stacklevel=3,
        )


def _stochastic_bound(inp: BoundInputs, L: int) -> float:
    _require_multiple(inp.N, L)
    _check_regime(inp)
    h, b, g, t, N = inp.h_norm, inp.b_norm, inp.gamma, inp.t, inp.N
    first = math.expm1(2 * L * h * t / N)
    middle = L * math.expm1(2.0 * (h / N + 2.0 * g * b**2 / (N + L) ** 2) * t)
    last = math.expm1(2 * L * math.sqrt(g * t * (N + 1)) * b / (N + L))
    return inp.rho_norm * (first + middle + last)


def stochastic_bound_cycle2(inp: BoundInputs) -> float:
    """Bound on ``E|rho_N - rho_{N+2}|`` for a cycle of length two.

    ``|rho| (e^{4|H|t/N} + 2 e^{2[|H|/N + 2 gamma |B|^2/(N+2)^2] t}
    + e^{4 sqrt(gamma t (N+1)) |B|/(N+2)} - 4)``.
    """
    return _stochastic_bound(inp, 2)


def stochastic_bound_cycle4(inp: BoundInputs) -> float:
    """Bound on ``E|rho_N - rho_{N+4}|`` for a cycle of length four.

    ``|rho| (e^{8|H|t/N} + 4 e^{2[|H|/N + 2 gamma |B|^2/(N+4)^2] t}
    + e^{8 sqrt(gamma t (N+1)) |B|/(N+4)} - 6)``.
    """
    return _stochastic_bound(inp, 4)


def empirical_distance(
    scenario: Scenario,
    scheme: DecouplingScheme,
    noise: NoiseModel,
    t: float,
    N: int,
    trials: int,
    seed: int = 0,
    L: int | None = None,
    first_trial: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate of ``E|rho_N(t) - rho_{N+L}(t)|`` and its population std.

    Trial ``i`` uses the stream ``(seed, first_trial + i)`` and one call to
    :func:`~stochdd.stochastic.correlated_pair`, so ``rho_N`` and
    ``rho_{N+L}`` are driven by two values of the same Wiener path.  ``L``
    defaults to the scheme period (the smallest pulse count after which the
    pulses act trivially).
    """
    samples = distance_samples(scenario, scheme, noise, t, N, trials, seed, L, first_trial)
    return ensemble_stats(samples)


def distance_samples(
    scenario: Scenario,
    scheme: DecouplingScheme,
    noise: NoiseModel,
    t: float,
    N: int,
    trials: int,
    seed: int = 0,
    L: int | None = None,
    first_trial: int = 0,
) -> np.ndarray:
    """Per-trial distances ``|rho_N - rho_{N+L}|`` (see :func:`empirical_distance`)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if L is None:
        L = scheme.period or scheme.length
    _require_multiple(N, L)
    pairs = np.array(
        [correlated_pair(RngStream(seed, first_trial + i), t, N, gap=L) for i in range(trials)]
    )
    w_n = pairs[:, 0] * N
    w_nl = pairs[:, 1] * (N + L)
    rho_n = evolve_state(finite_pulse_unitaries(scheme, scenario.H, noise, t, N, w_n), scenario.rho0)
    rho_nl = evolve_state(finite_pulse_unitaries(scheme, scenario.H, noise, t, N + L, w_nl), scenario.rho0)
    diff = rho_n - rho_nl
    # Hermitian difference: operator norm is the largest |eigenvalue|
    eig = np.linalg.eigvalsh(0.5 * (diff + np.conj(np.swapaxes(diff, -1, -2))))
    return np.max(np.abs(eig), axis=-1)

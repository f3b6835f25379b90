"""Seeded Wiener-process sampling.

Every trajectory owns an :class:`RngStream`.  The stream for
``(master_seed, stream_index)`` is a Philox counter-based bit generator keyed
by ``numpy.random.SeedSequence(master_seed, spawn_key=(stream_index,))``, so
streams are independent of each other and of thread scheduling.  Normal
variates come from numpy's ziggurat sampler (``Generator.standard_normal``);
regression values in the tests are pinned to numpy 2.x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeTime

GAUSSIAN_ALGORITHM = "numpy-2.x Generator(Philox).standard_normal (ziggurat)"


class RngStream:
    """Reproducible normal-variate stream for one trajectory."""

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ValueError("seed and stream index must be non-negative")
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self._gen = np.random.Generator(np.random.Philox(seq))

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


@dataclass(frozen=True)
class WienerPath:
    t_final: float
    n_steps: int
    increments: np.ndarray
    cumulative: np.ndarray = field(repr=False)

    @property
    def terminal(self) -> float:
        return float(self.cumulative[-1])

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_steps + 1)

    def values(self) -> np.ndarray:
        """W at every grid time, starting with W_0 = 0."""
        return np.concatenate(([0.0], self.cumulative))

    def coarsen(self) -> "WienerPath":
        """Same Brownian path on a grid with half as many steps."""
        if self.n_steps % 2:
            raise ValueError("coarsening needs an even number of steps")
        inc = self.increments.reshape(-1, 2).sum(axis=1)
        return _path_from_increments(self.t_final, inc)


def _check_time(t: float) -> None:
    if t < 0:
        raise NegativeTime(f"t={t} < 0")


def _path_from_increments(t: float, increments: np.ndarray) -> WienerPath:
    inc = np.asarray(increments, dtype=float)
    return WienerPath(float(t), len(inc), inc, np.cumsum(inc))


def sample_terminal(stream: RngStream, t: float) -> float:
    """One draw of ``W_t ~ N(0, t)``."""
    _check_time(t)
    z = stream.normal()
    return math.sqrt(t) * float(z) + 0.0


def shared_pulse_value(w_t: float, N: int) -> float:
    """Per-pulse noise argument ``W_{t/N^2} = W_t / N`` shared by all pulses of a run."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return w_t / N


def pair_difference_variance(t: float, N: int, gap: int = 2) -> float:
    """``Var(W_{t/N^2} - W_{t/(N+gap)^2}) = t/N^2 - t/(N+gap)^2``."""
    return t * ((N + gap) ** 2 - N**2) / (N**2 * (N + gap) ** 2)


def correlated_pair(stream: RngStream, t: float, N: int, gap: int = 2) -> tuple[float, float]:
    """Sample ``(W_{t/N^2}, W_{t/(N+gap)^2})`` from a single Wiener path.

    ``t/N^2`` is the later time: its value is the earlier value plus an
    independent increment, so both come from one path.  For ``gap=2`` the increment variance
    is ``4t(N+1)/(N^2 (N+2)^2)``.
    """
    _check_time(t)
    if N < 1 or gap < 1:
        raise ValueError("N and gap must be >= 1")
    z_early, z_inc = stream.normal(2)
    w_early = math.sqrt(t) / (N + gap) * float(z_early)
    w_late = w_early + math.sqrt(pair_difference_variance(t, N, gap)) * float(z_inc)
    return w_late + 0.0, w_early + 0.0


def refine_path(path: WienerPath, stream: RngStream) -> WienerPath:
    """Same Brownian path on a grid with twice as many steps (Brownian bridge).

    Each increment ``dW`` over ``dt`` is split into ``dW/2 + sqrt(dt)/2 z`` and
    its complement, with fresh normals ``z`` drawn from ``stream``.  The result
    coarsens back to ``path`` exactly up to floating-point rounding.
    """
    z = stream.normal(path.n_steps)
    first = 0.5 * path.increments + 0.5 * math.sqrt(path.dt) * z
    inc = np.empty(2 * path.n_steps)
    inc[0::2] = first
    inc[1::2] = path.increments - first
    return _path_from_increments(path.t_final, inc)


def sample_path(stream: RngStream, t: float, steps: int) -> WienerPath:
    """Brownian path on ``[0, t]`` with ``steps`` independent N(0, t/steps) increments."""
    _check_time(t)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    inc = math.sqrt(t / steps) * stream.normal(steps)
    return _path_from_increments(t, inc)

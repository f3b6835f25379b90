"""Fidelity, ensemble statistics and operator-norm distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tolerances as tol
from .errors import DimensionMismatch, EmptyEnsemble
from .linalg import operator_norm

__all__ = ["FidelityCurve", "fidelity", "fidelity_squared_batch", "ensemble_stats", "opnorm_distance"]


@dataclass
class FidelityCurve:
    """Mean and population standard deviation of fidelity along a sweep."""

    abscissa: list
    mean: list
    std: list
    trials: int
    seed: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.abscissa) == len(self.mean) == len(self.std)):
            raise ValueError("abscissa, mean and std must have equal length")


def _clamp_overlap(value: float) -> float:
    if value < tol.FIDELITY_CLAMP:
        raise ValueError(f"<psi|rho|psi> = {value:.3e} is negative beyond tolerance")
    return min(max(value, 0.0), 1.0)


def fidelity(psi, rho) -> float:
    """``sqrt(<psi|rho|psi>)`` between a pure reference and a density matrix."""
    psi = np.asarray(psi, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise DimensionMismatch("state vector and density matrix dimensions differ")
    overlap = float(np.real(np.vdot(psi, rho @ psi)))
    return math.sqrt(_clamp_overlap(overlap))


def fidelity_squared_batch(projector: np.ndarray, states: np.ndarray) -> np.ndarray:
    """``Tr(Pi rho_i)`` for a stack of states and a (reduced-state) projector ``Pi``."""
    vals = np.real(np.einsum("ij,...ji->...", projector, states))
    if np.any(vals < tol.FIDELITY_CLAMP):
        raise ValueError("negative overlap beyond tolerance")
    return np.clip(vals, 0.0, 1.0)


def ensemble_stats(samples: Sequence[float]) -> tuple[float, float]:
    """Mean and population (1/M) standard deviation."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptyEnsemble("no samples")
    mean = float(np.mean(x))
    std = float(np.sqrt(np.mean((x - mean) ** 2)))
    return mean, std


def opnorm_distance(rho1, rho2) -> float:
    rho1 = np.asarray(rho1)
    rho2 = np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise DimensionMismatch("states have different dimensions")
    return operator_norm(rho1 - rho2)

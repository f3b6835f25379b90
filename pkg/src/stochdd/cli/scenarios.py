"""Scenario builders for the three physical models.

* ``two_qubit``: ``H = omega/2 (Z x I + I x Z) + g X x X``.  Qubit 1 starts in
  ``|0>`` or ``(|0> + |1>)/sqrt(2)``, qubit 2 is maximally mixed.
* ``spin_bath``: an electron (site 1) coupled isotropically to ``K`` nuclear
  spins, which start maximally mixed.
* ``oscillator``: two modes truncated at ``D`` Fock levels,
  ``H = omega_a a^dag a + omega_b b^dag b + g (a^dag + a)(b^dag + b)``, mode A
  in a coherent state and mode B in the vacuum.

The protected subsystem is always site 1.  Its reference evolution is
generated by the decoupled form of its own free Hamiltonian: the protected
free term is passed through :func:`~stochdd.scheme.scheme_limit` and reduced
back to site 1.  Under a single ``Z`` pulse this is the free precession;
under a scheme that also averages the precession away the reference is static.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .. import tolerances as tol
from ..dynamics import NoiseModel, Scenario
from ..errors import ConfigError, StochDDError
from ..linalg import operator_norm
from ..operators import (
    BosonicSpace,
    PauliCoefficients,
    boson_ladder,
    coherent_state,
    embed,
    number_operator,
    parity_phase_pulse,
    pauli,
    pauli_string,
    site_operator,
    spin_bath_hamiltonian,
    stretched_exp_couplings,
    tensor,
    top_level_population,
)
from ..scheme import DecouplingScheme, scheme_limit
from .config import ExperimentConfig, Section

__all__ = ["Setup", "build_setup", "LeakageWarning"]

_PULSE = re.compile(r"^\s*(?P<name>[IXYZ]|parity\((?P<phi>[^)]*)\))\s*@\s*(?P<site>\d+)\s*$")


class LeakageWarning(UserWarning):
    """Population in the top Fock levels exceeds the truncation threshold."""


@dataclass
class Setup:
    """Everything a runner needs: scenario, scheme, error operator and time."""

    scenario: Scenario
    scheme: DecouplingScheme
    B: np.ndarray
    t: float
    kind: str  # "qubit" or "boson"

    def noise(self, gamma: float) -> NoiseModel:
        return NoiseModel(self.B, gamma)

    def leakage(self, rho: np.ndarray) -> float:
        """Top-two Fock level population of mode A (0 for qubit models)."""
        if self.kind != "boson":
            return 0.0
        return top_level_population(rho, self.scenario.site_dims, 0)


def _initial_qubit(section: Section) -> np.ndarray:
    which = section.str("initial", default="superposition", choices=("eigenstate", "superposition"))
    if which == "eigenstate":
        return np.array([1.0, 0.0], dtype=np.complex128)
    return np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)


def _parse_pulses(section: Section, site_dims: list[int]) -> list[np.ndarray]:
    text = section.raw("pulses")
    pulses = []
    for item in text.split(","):
        m = _PULSE.match(item)
        if not m:
            raise ConfigError(f"[scheme] pulses: cannot parse pulse {item.strip()!r} (expected e.g. Z@1 or parity(pi)@1)")
        site = int(m.group("site")) - 1
        if not 0 <= site < len(site_dims):
            raise ConfigError(f"[scheme] pulses: site {site + 1} out of range 1..{len(site_dims)}")
        d = site_dims[site]
        if m.group("phi") is not None:
            if d == 2:
                raise ConfigError("[scheme] pulses: parity pulses need a bosonic site")
            try:
                phi = Section("scheme", {"phi": m.group("phi")}).float("phi")
                op = parity_phase_pulse(BosonicSpace(d), phi)
            except StochDDError as exc:
                raise ConfigError(f"[scheme] pulses: {exc}") from None
        else:
            if d != 2:
                raise ConfigError("[scheme] pulses: Pauli pulses need a qubit site")
            op = pauli(m.group("name"))
        pulses.append(embed(op, site, site_dims))
    return pulses


def _qubit_error_operator(section: Section, n_sites: int) -> np.ndarray:
    if section.has("B"):
        spec = section.str("B").upper()
        if len(spec) != n_sites or any(c not in "IXYZ" for c in spec):
            raise ConfigError(f"[noise] B: expected a Pauli string of length {n_sites}, got {spec!r}")
        return pauli_string(spec)
    factors = []
    for k in range(1, n_sites + 1):
        key = f"B.{k}"
        if not section.has(key):
            factors.append(pauli("I"))
            continue
        coeffs = section.floats(key)
        if len(coeffs) != 4:
            raise ConfigError(f"[noise] {key}: expected four coefficients c0, cx, cy, cz")
        factors.append(site_operator(PauliCoefficients(*coeffs)))
    if all(not section.has(f"B.{k}") for k in range(1, n_sites + 1)):
        raise ConfigError("[noise] B: missing (give a Pauli string B = ... or per-site B.k = c0, cx, cy, cz)")
    return tensor(factors)


def _protected_generator(scheme: DecouplingScheme, h_free: np.ndarray, site_dims: list[int]) -> np.ndarray:
    """Reduce the decoupled protected free Hamiltonian back to site 1."""
    full = embed(h_free, 0, site_dims)
    limit = scheme_limit(scheme, full, np.zeros_like(full)).effective_hamiltonian
    d1 = site_dims[0]
    rest = full.shape[0] // d1
    reduced = np.einsum("ajbj->ab", limit.reshape(d1, rest, d1, rest)) / rest
    if operator_norm(limit - np.kron(reduced, np.eye(rest))) > tol.COMMUTATION:
        raise ConfigError("[scheme] pulses: the decoupled free term of site 1 does not act on site 1 alone")
    return 0.5 * (reduced + reduced.conj().T)


def _two_qubit(cfg: ExperimentConfig) -> Setup:
    s = cfg.scenario
    omega = s.float("omega")
    g = s.float("g")
    t = s.float("t", default=0.0, minimum=0.0)
    dims = [2, 2]
    z, x = pauli("Z"), pauli("X")
    h = 0.5 * omega * (tensor([z, pauli("I")]) + tensor([pauli("I"), z])) + g * tensor([x, x])
    psi = _initial_qubit(s)
    rho0 = np.kron(np.outer(psi, psi.conj()), np.eye(2) / 2)
    scheme = DecouplingScheme(_parse_pulses(cfg.scheme, dims))
    gen = _protected_generator(scheme, 0.5 * omega * z, dims)
    scenario = Scenario(h, rho0, dims, [0], psi, gen, {"name": "two_qubit"})
    return Setup(scenario, scheme, _qubit_error_operator(cfg.noise, 2), t, "qubit")


def _spin_bath(cfg: ExperimentConfig) -> Setup:
    s = cfg.scenario
    K = s.int("K", minimum=0)
    t = s.float("t", default=0.0, minimum=0.0)
    if s.has("omegas"):
        omegas = s.floats("omegas")
        if len(omegas) != K + 1:
            raise ConfigError(f"[scenario] omegas: expected {K + 1} values, got {len(omegas)}")
    else:
        omegas = [s.float("omega")] * (K + 1)
    profile = s.str("couplings", default="stretched_exp")
    if profile == "stretched_exp":
        scale = s.float("coupling_scale", default=omegas[0])
        couplings = stretched_exp_couplings(K, scale)
    else:
        couplings = s.floats("couplings")
        if len(couplings) != K:
            raise ConfigError(f"[scenario] couplings: expected {K} values or 'stretched_exp'")
    try:
        h = spin_bath_hamiltonian(K, omegas, couplings)
    except StochDDError as exc:
        raise ConfigError(f"[scenario] K: {exc}") from None
    dims = [2] * (K + 1)
    psi = _initial_qubit(s)
    rest = 2**K
    rho0 = np.kron(np.outer(psi, psi.conj()), np.eye(rest) / rest)
    scheme = DecouplingScheme(_parse_pulses(cfg.scheme, dims))
    gen = _protected_generator(scheme, 0.5 * omegas[0] * pauli("Z"), dims)
    scenario = Scenario(h, rho0, dims, [0], psi, gen, {"name": "spin_bath"})
    return Setup(scenario, scheme, _qubit_error_operator(cfg.noise, K + 1), t, "qubit")


def _oscillator(cfg: ExperimentConfig) -> Setup:
    s = cfg.scenario
    D = s.int("D", minimum=2)
    if D * D > 1024:
        raise ConfigError("[scenario] D: two modes of dimension D must satisfy D^2 <= 1024")
    omega_a = s.float("omega_a")
    omega_b = s.float("omega_b")
    g = s.float("g")
    alpha = s.float("alpha", default=1.0)
    t = s.float("t", default=0.0, minimum=0.0)
    space = BosonicSpace(D)
    a, ad = boson_ladder(space)
    n = number_operator(space)
    eye = np.eye(D)
    h = omega_a * np.kron(n, eye) + omega_b * np.kron(eye, n) + g * np.kron(a + ad, a + ad)
    psi = coherent_state(space, alpha)
    vac = np.zeros(D)
    vac[0] = 1.0
    rho0 = np.kron(np.outer(psi, psi.conj()), np.outer(vac, vac))
    dims = [D, D]
    form = cfg.noise.str("B", default="number+ladder", choices=("number", "number+ladder"))
    b_a = n + (a + ad if form == "number+ladder" else 0)
    scheme = DecouplingScheme(_parse_pulses(cfg.scheme, dims))
    gen = _protected_generator(scheme, omega_a * n, dims)
    scenario = Scenario(h, rho0, dims, [0], psi, gen, {"name": "oscillator"})
    setup = Setup(scenario, scheme, np.kron(b_a, eye), t, "boson")
    leak = setup.leakage(rho0)
    if leak > tol.LEAKAGE_WARN:
        warnings.warn(f"initial top-level population {leak:.3e} exceeds {tol.LEAKAGE_WARN:g}; increase D", LeakageWarning, stacklevel=2)
    return setup


_BUILDERS = {"two_qubit": _two_qubit, "spin_bath": _spin_bath, "oscillator": _oscillator}


def build_setup(cfg: ExperimentConfig) -> Setup:
    try:
        return _BUILDERS[cfg.scenario_name](cfg)
    except ConfigError:
        raise
    except StochDDError as exc:
        if isinstance(exc, ValueError):
            raise ConfigError(f"[{cfg.scenario_name}] {exc}") from None
        raise

"""Experiment runners behind the CLI subcommands.

Every Monte Carlo runner splits the trials into fixed chunks of
:data:`CHUNK` consecutive indices.  Trial ``i`` always draws from
``RngStream(master_seed, i)``, each chunk is computed independently, and the
chunks are reassembled in index order before any reduction.  The results are
therefore identical for every thread count.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import tolerances as tol
from ..bounds import (
    distance_samples,
    inputs_from,
    stochastic_bound_cycle2,
    stochastic_bound_cycle4,
)
from ..dynamics import (
    averaged_lindblad,
    evolve_state,
    finite_pulse_unitaries,
    ideal_reference,
    split_step_unitaries,
)
from ..errors import ConfigError, NoConvergence
from ..linalg import commutator, operator_norm
from ..metrics import FidelityCurve, ensemble_stats, fidelity_squared_batch
from ..scheme import scheme_limit
from ..stochastic import RngStream, refine_path, sample_path, sample_terminal
from .config import ExperimentConfig
from .scenarios import LeakageWarning, Setup, build_setup

__all__ = [
    "CHUNK",
    "Table",
    "run_limits",
    "run_sweep_pulses",
    "run_trajectories",
    "run_bounds",
]

CHUNK = 64
ZERO_TOL = 1e-10


@dataclass
class Table:
    """Column-oriented result with extra header lines."""

    columns: list
    rows: list
    header: dict = field(default_factory=dict)


def _chunks(trials: int) -> list[range]:
    return [range(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]


def _map(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _gamma_list(cfg: ExperimentConfig, t: float) -> list[tuple[float, float]]:
    """``(gamma_t, gamma)`` pairs from ``[noise] gamma`` or ``[noise] gamma_t``."""
    noise = cfg.noise
    if noise.has("gamma") and noise.has("gamma_t"):
        raise ConfigError("[noise] give either gamma or gamma_t, not both")
    if noise.has("gamma_t"):
        values = noise.floats("gamma_t", minimum=0.0)
        if t <= 0:
            if any(v > 0 for v in values):
                raise ConfigError("[noise] gamma_t: needs [scenario] t > 0 to convert into a rate")
            return [(0.0, 0.0) for _ in values]
        return [(gt, gt / t) for gt in values]
    gamma = noise.float("gamma", minimum=0.0)
    return [(gamma * t, gamma)]


def _check_leakage(setup: Setup, states: np.ndarray) -> float:
    if setup.kind != "boson":
        return 0.0
    worst = max(setup.leakage(rho) for rho in states)
    if worst > tol.LEAKAGE_WARN:
        warnings.warn(f"top-level population {worst:.3e} exceeds {tol.LEAKAGE_WARN:g}; increase D", LeakageWarning, stacklevel=2)
    return worst


# ---------------------------------------------------------------- limits


def _matrix_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"real": (m.real + 0.0).tolist(), "imag": (m.imag + 0.0).tolist()}


def run_limits(cfg: ExperimentConfig) -> dict:
    """Continuous-control limits of the configured model."""
    setup = build_setup(cfg)
    sc, scheme = setup.scenario, setup.scheme
    lim = scheme_limit(scheme, sc.H, setup.B)
    u = scheme.cycle_unitary
    h_norm = operator_norm(lim.effective_hamiltonian)
    b_norm = operator_norm(lim.effective_error)
    return {
        "scenario": cfg.scenario_name,
        "dimension": sc.dim,
        "cycle_length": scheme.length,
        "cycle_is_identity": bool(scheme.cycle_is_identity),
        "period": scheme.period,
        "effective_hamiltonian": _matrix_json(lim.effective_hamiltonian),
        "effective_error": _matrix_json(lim.effective_error),
        "effective_hamiltonian_norm": h_norm,
        "effective_error_norm": b_norm,
        "commutator_norm_H_U": operator_norm(commutator(u, lim.effective_hamiltonian)),
        "commutator_norm_B_U": operator_norm(commutator(u, lim.effective_error)),
        "effective_hamiltonian_is_zero": bool(h_norm <= ZERO_TOL),
        "effective_error_is_zero": bool(b_norm <= ZERO_TOL),
        "protected_reference_generator": _matrix_json(sc.ideal_generator),
    }


# ---------------------------------------------------------- sweep-pulses


def _finite_pulse_fidelities(setup: Setup, gamma: float, N: int, w_t: np.ndarray, projector: np.ndarray):
    us = finite_pulse_unitaries(setup.scheme, setup.scenario.H, setup.noise(gamma), setup.t, N, w_t)
    states = evolve_state(us, setup.scenario.rho0)
    return np.sqrt(fidelity_squared_batch(projector, states)), states


def run_sweep_pulses(cfg: ExperimentConfig) -> list[FidelityCurve]:
    """Fidelity after time ``t`` as a function of the pulse count ``N``.

    One curve per configured noise strength.  All curves and all ``N`` share
    the same terminal Wiener draws (trial ``i`` uses stream ``i``).
    """
    setup = build_setup(cfg)
    Ns = cfg.sweep.ints("N", minimum=1)
    bad = [N for N in Ns if N % setup.scheme.length]
    if bad:
        raise ConfigError(f"[sweep] N: {bad} not multiples of the cycle length {setup.scheme.length}")
    gammas = _gamma_list(cfg, setup.t)
    sc = setup.scenario
    projector = sc.protected_projector(ideal_reference(sc, setup.t))
    chunks = _chunks(cfg.trials)
    seed = cfg.master_seed

    def draws(idx: range) -> np.ndarray:
        return np.array([sample_terminal(RngStream(seed, i), setup.t) for i in idx])

    w_chunks = _map(draws, chunks, cfg.threads)
    curves = []
    for gamma_t, gamma in gammas:
        means, stds, leak = [], [], 0.0
        for N in Ns:
            parts = _map(lambda w: _finite_pulse_fidelities(setup, gamma, N, w, projector), w_chunks, cfg.threads)
            f = np.concatenate([p[0] for p in parts])
            if setup.kind == "boson":
                leak = max(leak, _check_leakage(setup, [np.mean(np.concatenate([p[1] for p in parts]), axis=0)]))
            m, s = ensemble_stats(f)
            means.append(m)
            stds.append(s)
        extra = {"gamma_t": gamma_t, "gamma": gamma}
        if setup.kind == "boson":
            extra["max_top_level_population"] = leak
        curves.append(FidelityCurve(list(Ns), means, stds, cfg.trials, seed, extra))
    return curves


def sweep_table(curves: list[FidelityCurve], t: float) -> Table:
    rows = []
    for c in curves:
        for N, m, s in zip(c.abscissa, c.mean, c.std):
            rows.append([N, m, s, c.trials, c.seed, c.extra["gamma_t"]])
    header = {"t": t}
    leaks = [c.extra["max_top_level_population"] for c in curves if "max_top_level_population" in c.extra]
    if leaks:
        header["max_top_level_population"] = max(leaks)
    return Table(["N", "mean_fidelity", "std_fidelity", "trials", "seed", "gamma_t"], rows, header)


# ---------------------------------------------------------- trajectories


def _trajectory_model(setup: Setup, gamma: float):
    """Limit operators and initial state on the space the trajectories run on.

    Small models use the full space.  Larger ones must decouple into the
    protected site and a freely evolving rest; the trajectories then run on
    site 1 alone.
    """
    sc = setup.scenario
    lim = scheme_limit(setup.scheme, sc.H, setup.B)
    hc, bc = lim.effective_hamiltonian, lim.effective_error
    if sc.dim <= tol.SUPEROPERATOR_MAX_DIM:
        return hc, bc, sc.rho0, sc.protected_projector
    d1 = sc.site_dims[0]
    rest = sc.dim // d1

    def split(x):
        t4 = x.reshape(d1, rest, d1, rest)
        a = np.einsum("ajbj->ab", t4) / rest
        r = np.einsum("jajb->ab", t4) / d1
        r = r - np.trace(a) / d1 * np.eye(rest)
        return a, r

    h_a, h_r = split(hc)
    b_a, b_r = split(bc)
    ok_h = operator_norm(hc - np.kron(h_a, np.eye(rest)) - np.kron(np.eye(d1), h_r)) <= tol.COMMUTATION
    ok_b = operator_norm(bc - np.kron(b_a, np.eye(rest))) <= tol.COMMUTATION
    if not (ok_h and ok_b) or d1 > tol.SUPEROPERATOR_MAX_DIM:
        raise ConfigError(
            "[scenario] trajectories need dimension <= 16, or limit operators that leave "
            "site 1 uncoupled with a site-1 dimension <= 16"
        )
    rho_a = sc.reduce(sc.rho0)
    return h_a, b_a, rho_a, lambda psi: np.outer(psi, psi.conj())


def _trial_path(seed: int, i: int, t_final: float, steps0: int, level: int):
    stream = RngStream(seed, i)
    path = sample_path(stream, t_final, steps0)
    for _ in range(level):
        path = refine_path(path, stream)
    return path


def run_trajectories(cfg: ExperimentConfig) -> Table:
    """Continuous-limit trajectories against the averaged master equation.

    The abscissa is ``[sweep] gamma_t`` (or ``[sweep] times`` when
    ``gamma = 0``).  Time steps start at ``steps_per_unit`` per unit of
    ``gamma t`` and are halved, on the same Brownian paths, until the mean
    fidelity changes by less than ``tolerance`` at every abscissa.
    """
    setup = build_setup(cfg)
    gamma = cfg.noise.float("gamma", minimum=0.0)
    sweep = cfg.sweep
    if gamma > 0:
        gts = sweep.floats("gamma_t", minimum=0.0)
        times = [gt / gamma for gt in gts]
        unit = 1.0 / gamma
    else:
        times = sweep.floats("times", minimum=0.0)
        gts = [0.0] * len(times)
        unit = 1.0
    spu = sweep.int("steps_per_unit", default=1000, minimum=1)
    tolerance = sweep.float("tolerance", default=1e-4, minimum=0.0)
    max_ref = sweep.int("max_refinements", default=3, minimum=0)
    t_final = max(times)
    if t_final <= 0:
        raise ConfigError("[sweep] need at least one positive time")
    ticks = [x / unit * spu for x in times]
    idx = [int(round(k)) for k in ticks]
    if any(abs(k - i) > 1e-9 * max(1.0, k) for k, i in zip(ticks, idx)):
        raise ConfigError("[sweep] every abscissa must be a multiple of 1/steps_per_unit")
    steps0 = max(idx)
    rec0 = math.gcd(*idx) if any(idx) else steps0

    hc, bc, rho0, proj_of = _trajectory_model(setup, gamma)
    sc = setup.scenario
    projectors = [proj_of(ideal_reference(sc, x)) for x in times]
    chunks = _chunks(cfg.trials)
    seed = cfg.master_seed

    def level_fidelity_squared(level: int) -> np.ndarray:
        scale = 2**level
        steps, rec = steps0 * scale, rec0 * scale
        dt = t_final / steps
        pick = [i * scale // rec for i in idx]

        def work(chunk: range) -> np.ndarray:
            inc = np.stack([_trial_path(seed, i, t_final, steps0, level).increments for i in chunk])
            us = split_step_unitaries(hc, bc, gamma, inc, dt, rec)[pick]
            states = evolve_state(us, rho0)
            return np.stack([fidelity_squared_batch(projectors[p], states[p]) for p in range(len(pick))])

        return np.concatenate(_map(work, chunks, cfg.threads), axis=1)

    f2 = level_fidelity_squared(0)
    level, change = 0, math.inf
    while level < max_ref:
        finer = level_fidelity_squared(level + 1)
        change = float(np.max(np.abs(np.sqrt(finer).mean(axis=1) - np.sqrt(f2).mean(axis=1))))
        f2, level = finer, level + 1
        if change < tolerance:
            break
    if max_ref and change >= tolerance:
        raise NoConvergence(
            f"mean fidelity still changes by {change:.3e} after {max_ref} step halvings "
            f"(tolerance {tolerance:g})"
        )

    rows = []
    for p, x in enumerate(times):
        lind = averaged_lindblad(hc, bc, gamma, rho0, x, 1).states[-1]
        analytic = math.sqrt(max(float(np.real(np.trace(projectors[p] @ lind))), 0.0))
        fp = np.sqrt(f2[p])
        m, s = ensemble_stats(fp)
        averaged = math.sqrt(float(np.mean(f2[p])))
        rows.append([gts[p], m, s, analytic, float(fp[0]), x, averaged])
    header = {
        "gamma": gamma,
        "steps_per_unit": spu * 2**level,
        "last_refinement_change": change,
    }
    if setup.kind == "boson":
        header["max_top_level_population"] = _check_leakage(setup, [sc.rho0])
    return Table(
        ["gamma_t", "mean_F", "std_F", "analytic_F", "single_realization_F", "t", "averaged_state_F"],
        rows,
        header,
    )


# ---------------------------------------------------------------- bounds


def run_bounds(cfg: ExperimentConfig) -> Table:
    """Closed-form bound against the Monte Carlo distance on a (gamma t, N) grid."""
    setup = build_setup(cfg)
    L = setup.scheme.period
    bound_fn = {2: stochastic_bound_cycle2, 4: stochastic_bound_cycle4}.get(L)
    if bound_fn is None:
        raise ConfigError(f"[scheme] pulses: averaged bounds exist for periods 2 and 4, this scheme has period {L}")
    Ns = cfg.sweep.ints("N", minimum=1)
    bad = [N for N in Ns if N % L]
    if bad:
        raise ConfigError(f"[sweep] N: {bad} not multiples of the period {L}")
    chunks = _chunks(cfg.trials)
    rows = []
    for gamma_t, gamma in _gamma_list(cfg, setup.t):
        noise = setup.noise(gamma)
        for N in Ns:
            bound = bound_fn(inputs_from(setup.scenario, noise, setup.t, N, L))
            parts = _map(
                lambda c: distance_samples(
                    setup.scenario, setup.scheme, noise, setup.t, N, len(c), cfg.master_seed, L, c.start
                ),
                chunks,
                cfg.threads,
            )
            mean, std = ensemble_stats(np.concatenate(parts))
            slack = bound - (mean + 3.0 * std / math.sqrt(cfg.trials))
            rows.append([N, bound, mean, std, slack, gamma_t])
    return Table(
        ["N", "bound", "empirical_mean", "empirical_std", "slack", "gamma_t"],
        rows,
        {"t": setup.t, "period": L},
    )

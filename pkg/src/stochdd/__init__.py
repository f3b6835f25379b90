"""Dynamical decoupling with stochastic pulse imperfections.

Finite-pulse noisy evolution, continuous-control limits through the ergodic
projector, averaged master-equation dynamics and convergence bounds.
"""
__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundInputs,
    RegimeWarning,
    deterministic_cycle_bound,
    empirical_distance,
    single_step_bound,
    stochastic_bound_cycle2,
    stochastic_bound_cycle4,
)
from .dynamics import (  # noqa: E402
    NoiseModel,
    Scenario,
    TrajectoryResult,
    averaged_lindblad,
    averaged_pulse,
    continuous_trajectory,
    ideal_reference,
    phase_damped_solution,
    propagate_finite_pulses,
)
from .metrics import FidelityCurve, ensemble_stats, fidelity, opnorm_distance  # noqa: E402
from .scheme import (  # noqa: E402
    DecouplingScheme,
    SchemeLimits,
    cesaro_oracle,
    ergodic_projector,
    finite_generator_terms,
    partial_products,
    scheme_limit,
)
from .stochastic import RngStream, WienerPath, correlated_pair, sample_path, sample_terminal, shared_pulse_value  # noqa: E402

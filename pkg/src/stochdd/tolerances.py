"""Numerical tolerances shared by library code and tests."""

HERMITICITY = 1e-10
UNITARITY = 1e-10
RECONSTRUCTION = 1e-9
EIGVAL_IMAG = 1e-12
CYCLE_IDENTITY = 1e-8
CLUSTER = 1e-8
COMMUTATION = 1e-8
PROJECTOR_IDEMPOTENCE = 1e-10
STATE_TRACE = 1e-10
STATE_PSD_FLOOR = -1e-10
FIDELITY_CLAMP = -1e-10
LEAKAGE_WARN = 1e-6
# superoperator route is capped at Hilbert dimension 16 (256 x 256 generator)
SUPEROPERATOR_MAX_DIM = 16

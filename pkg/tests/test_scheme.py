import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian, random_unitary
from stochdd.errors import ClusterAmbiguity, DimensionMismatch, NotUnitary
from stochdd.linalg import adjoint, operator_norm
from stochdd.operators import embed, pauli, spin_bath_hamiltonian, stretched_exp_couplings, tensor
from stochdd.scheme import (
    CommutantProjector,
    DecouplingScheme,
    cesaro_oracle,
    ergodic_projector,
    finite_generator_terms,
    partial_products,
    scheme_limit,
    scheme_products,
)

I, X, Y, Z = (pauli(a) for a in "IXYZ")
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_scheme_cycle_unitary_in_application_order(rng):
    u1, u2, u3 = (random_unitary(rng, 3) for _ in range(3))
    s = DecouplingScheme([u1, u2, u3])
    assert np.allclose(s.cycle_unitary, u3 @ u2 @ u1, atol=1e-12)
    assert not s.cycle_is_identity
    assert s.length == 3 and s.dim == 3
    assert np.array_equal(s.pulse(1), s.pulses[0])
    assert np.array_equal(s.pulse(4), s.pulses[0])
    assert np.array_equal(s.pulse(6), s.pulses[2])


def test_scheme_identity_flag_and_period():
    assert DecouplingScheme([X, X]).cycle_is_identity
    zi = tensor([Z, I])
    single = DecouplingScheme([zi])
    assert not single.cycle_is_identity
    assert single.period == 2
    # X then Z: U = ZX is proportional to Y, U^2 = -I
    assert DecouplingScheme([X, Z]).period == 4
    assert DecouplingScheme([X, Z, X, Z]).period == 4
    irrational = np.diag([1, np.exp(1j * np.sqrt(2))])
    assert DecouplingScheme([irrational]).period is None


def test_scheme_validation():
    with pytest.raises(NotUnitary):
        DecouplingScheme([2 * np.eye(2)])
    with pytest.raises(DimensionMismatch):
        DecouplingScheme([X, np.eye(3)])
    with pytest.raises(ValueError):
        DecouplingScheme([])


def test_partial_products_examples(rng):
    zi = tensor([Z, I])
    g = partial_products(DecouplingScheme([zi]))
    assert len(g) == 2 and np.array_equal(g[0], np.eye(4)) and np.array_equal(g[1], zi)
    assert [np.allclose(x, np.eye(2)) for x in partial_products(DecouplingScheme([I]))] == [True, True]
    s = DecouplingScheme([random_unitary(rng, 4) for _ in range(5)])
    for gn in partial_products(s):
        assert operator_norm(adjoint(gn) @ gn - np.eye(4)) <= 1e-10
    assert np.allclose(partial_products(s)[-1], s.cycle_unitary)


def test_scheme_products_repeat_periodically():
    s = DecouplingScheme([X, Z])
    g = scheme_products(s, 6)
    assert len(g) == 6
    assert np.allclose(g[2], Z @ X) and np.allclose(g[4], (Z @ X) @ (Z @ X))
    assert np.allclose(g[5], X @ (Z @ X) @ (Z @ X))


def test_ergodic_projector_sigma_y_example():
    a0, ax = 1.0, 1.0
    assert np.allclose(ergodic_projector(Y, 2 * a0 * I + 2 * ax * X), 2 * a0 * I, atol=1e-14)


def test_ergodic_projector_identity_is_identity_map(rng):
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(ergodic_projector(np.eye(4), x), x)


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from([2, 3, 4, 8]))
def test_ergodic_projector_is_orthogonal_projection(seed, d):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, d)
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    p = CommutantProjector(u)
    px = p(x)
    assert operator_norm(p(px) - px) <= 1e-10 * max(1, operator_norm(x))
    assert operator_norm(u @ px - px @ u) <= 1e-8
    assert abs(np.trace(adjoint(x - px) @ p(y))) <= 1e-9 * max(1, operator_norm(x) * operator_norm(y))
    h = random_hermitian(rng, d)
    ph = p(h)
    assert operator_norm(ph - adjoint(ph)) <= 1e-12


def test_ergodic_projector_degenerate_blocks(rng):
    w = random_unitary(rng, 6)
    u = w @ np.diag([1, 1, 1j, 1j, 1j, -1]) @ adjoint(w)
    x = random_hermitian(rng, 6)
    px = ergodic_projector(u, x)
    xt = adjoint(w) @ x @ w
    mask = np.zeros((6, 6), bool)
    mask[:2, :2] = mask[2:5, 2:5] = mask[5:, 5:] = True
    assert np.allclose(adjoint(w) @ px @ w, np.where(mask, xt, 0), atol=1e-10)


def test_ergodic_projector_clusters_across_the_branch_cut():
    # eigenphases pi - 1e-10 and -pi + 1e-10 are the same eigenvalue
    eps = 1e-10
    u = np.diag([np.exp(1j * (np.pi - eps)), np.exp(-1j * (np.pi - eps)), 1.0])
    x = np.ones((3, 3))
    px = ergodic_projector(u, x)
    assert np.allclose(px, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_ergodic_projector_guard_band():
    u = np.diag([1.0, np.exp(5e-8j)])
    with pytest.raises(ClusterAmbiguity):
        ergodic_projector(u, np.ones((2, 2)))
    # outside the guard band both ways
    assert np.allclose(ergodic_projector(np.diag([1.0, np.exp(1e-9j)]), np.ones((2, 2))), np.ones((2, 2)))
    assert np.allclose(ergodic_projector(np.diag([1.0, np.exp(1e-6j)]), np.ones((2, 2))), np.eye(2))


def test_cesaro_oracle_examples(rng):
    u = random_unitary(rng, 3)
    x = rng.standard_normal((3, 3))
    assert np.allclose(cesaro_oracle(u, x, 1), x)
    assert np.allclose(cesaro_oracle(np.eye(3), x, 37), x)
    brute = sum(np.linalg.matrix_power(u, k) @ x @ np.linalg.matrix_power(adjoint(u), k) for k in range(13)) / 13
    assert np.allclose(cesaro_oracle(u, x, 13), brute, atol=1e-12)
    with pytest.raises(ValueError):
        cesaro_oracle(u, x, 0)


def test_cesaro_oracle_rate_on_range_of_i_minus_u(rng):
    u = random_unitary(rng, 4)
    y = random_hermitian(rng, 4)
    x = y - u @ y @ adjoint(u)
    for N in (10, 100, 1000):
        assert operator_norm(cesaro_oracle(u, x, N)) <= 2 * operator_norm(y) / N + 1e-12
    a, b = cesaro_oracle(u, x, 50), cesaro_oracle(u, x, 100)
    assert operator_norm(a - b) <= 4 * operator_norm(y) / 50


def _two_qubit(omega=1.0, g=0.1):
    return 0.5 * omega * (tensor([Z, I]) + tensor([I, Z])) + g * tensor([X, X])


def test_scheme_limit_commutes_and_is_hermitian(rng):
    s = DecouplingScheme([random_unitary(rng, 4), random_unitary(rng, 4)])
    h, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
    lim = scheme_limit(s, h, b)
    u = s.cycle_unitary
    for op in (lim.effective_hamiltonian, lim.effective_error):
        assert operator_norm(op - adjoint(op)) <= 1e-10
        assert operator_norm(u @ op - op @ u) <= 1e-8


def test_scheme_limit_skips_projection_when_cycle_is_identity(rng):
    s = DecouplingScheme([X, X])
    h = random_hermitian(rng, 2)
    lim = scheme_limit(s, h, h)
    assert np.allclose(lim.effective_hamiltonian, 0.5 * (h + X @ h @ X))


def test_scheme_limit_general_branch_matches_cesaro(rng):
    # a cycle that is not the identity: compare with the brute-force Cesaro mean
    # of the cycle-averaged operator
    u1, u2 = random_unitary(rng, 3), random_unitary(rng, 3)
    s = DecouplingScheme([u1, u2])
    h = random_hermitian(rng, 3)
    lim = scheme_limit(s, h, h)
    avg = 0.5 * (h + u1 @ h @ adjoint(u1))
    assert operator_norm(lim.effective_hamiltonian - cesaro_oracle(s.cycle_unitary, avg, 100_000)) <= 1e-3


def test_x_z_cycle_removes_everything_but_identity(rng):
    a0, ax, ay, az = 0.3, -1.2, 0.7, 2.0
    a = a0 * I + ax * X + ay * Y + az * Z
    for pulses in ([X, Z], [Z, X], [X, Z, X, Z]):
        lim = scheme_limit(DecouplingScheme(pulses), a, a)
        assert np.allclose(lim.effective_hamiltonian, a0 * I, atol=1e-12)


def test_x_z_cycle_order_is_irrelevant_on_spin_bath():
    K = 5
    h = spin_bath_hamiltonian(K, [1.0] * (K + 1), stretched_exp_couplings(K, 1.0))
    dims = [2] * (K + 1)
    xs, zs = embed(X, 0, dims), embed(Z, 0, dims)
    b = tensor([X] * (K + 1))
    one = scheme_limit(DecouplingScheme([xs, zs, xs, zs]), h, b)
    two = scheme_limit(DecouplingScheme([zs, xs, zs, xs]), h, b)
    assert operator_norm(one.effective_hamiltonian - two.effective_hamiltonian) <= 1e-10


def test_finite_generator_terms_single_pulse(rng):
    h, b = random_hermitian(rng, 3), random_hermitian(rng, 3)
    hn, bn, cn = finite_generator_terms([np.eye(3)], h, b, 1)
    assert np.allclose(hn, h) and np.allclose(bn, b) and np.allclose(cn, b @ b)
    with pytest.raises(ValueError):
        finite_generator_terms([np.eye(3)], h, b, 2)


def test_finite_generator_terms_match_double_sum(rng):
    s = DecouplingScheme([random_unitary(rng, 3), random_unitary(rng, 3)])
    b = random_hermitian(rng, 3)
    N = 6
    g = scheme_products(s, N)
    bk = [gk @ b @ adjoint(gk) for gk in g]
    expected = sum(x @ x for x in bk) + 2 * sum(bk[j] @ bk[k] for k in range(N) for j in range(k))
    _, _, cn = finite_generator_terms(g, b, b, N)
    assert np.allclose(cn, expected / N**2, atol=1e-12)


def test_finite_generator_terms_converge_to_limit():
    zi = tensor([Z, I])
    s = DecouplingScheme([zi])
    h = _two_qubit()
    lim = scheme_limit(s, h, h)
    for L in (1, 10, 100):
        hn, _, _ = finite_generator_terms(scheme_products(s, 2 * L), h, h, 2 * L)
        assert operator_norm(hn - lim.effective_hamiltonian) <= 2 * operator_norm(h) / L
    # a single pulse of infinite order converges only in the Cesaro sense
    u = np.diag([1.0, np.exp(1j * np.sqrt(2)), np.exp(1j * np.sqrt(3))])
    s = DecouplingScheme([u])
    x = np.ones((3, 3))
    target = scheme_limit(s, x, x).effective_hamiltonian
    errs = [operator_norm(finite_generator_terms(scheme_products(s, N), x, x, N)[0] - target) for N in (10, 100, 1000)]
    assert errs[2] < errs[0] and errs[2] < 0.02

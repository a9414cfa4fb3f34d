"""Grid, kernel, and Newton solver tests against small dense oracles."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

import hktsolve.elliptic_solver as es
from hktsolve import kernels
from hktsolve.continuity_driver import manufactured_problem, sine_product_field
from hktsolve.elliptic_solver import (
    SolverState,
    TorusGrid,
    bordered_operator,
    check_b_bound,
    density,
    linearized_apply,
    newton_step,
    residual,
    shifted_inverse_preconditioner,
    solve_at_t,
    validate_q,
)
from hktsolve.errors import (
    BPositivityLost,
    ConfigError,
    DampingExhausted,
    LinearSolveFailure,
    MaxItersExceeded,
    ShapeMismatch,
)
import oracles


def bump(grid, amplitude=1.0, width=1.0):
    total = np.zeros(grid.dims)
    for ax, mesh in enumerate(grid.meshes()):
        total += np.cos(2.0 * np.pi * mesh / grid.lengths[ax]) - 1.0
    return amplitude * np.exp(total / width)


# ---------------------------------------------------------------- grid


def test_grid_defaults_and_spacings():
    g = TorusGrid((8, 16))
    assert g.lengths == (2.0 * math.pi, 2.0 * math.pi)
    assert g.spacings[0] == pytest.approx(2.0 * math.pi / 8)
    assert g.ndim == 2 and g.size == 128
    assert g.coords(1)[1] == pytest.approx(g.spacings[1])
    assert g.mean(np.ones(g.dims)) == 1.0


def test_grid_validation():
    with pytest.raises(ConfigError):
        TorusGrid((8, 8, 8))
    with pytest.raises(ConfigError):
        TorusGrid((8, 3))
    with pytest.raises(ConfigError):
        TorusGrid((8, 8), lengths=(1.0,))
    with pytest.raises(ConfigError):
        TorusGrid((8, 8), lengths=(1.0, -2.0))


# ------------------------------------------------------------- kernels


def test_laplacian_kills_constants():
    g = TorusGrid((16, 16))
    lap = kernels.laplacian_nd(np.full(g.dims, 3.7), g.spacings)
    assert np.max(np.abs(lap)) == 0.0


def test_laplacian_eigenfield():
    # a single-axis sine is an exact eigenvector of the 3-point stencil
    g = TorusGrid((32, 32), lengths=(2.0, 2.0))
    n, h = g.dims[0], g.spacings[0]
    x = g.meshes()[0]
    f = np.sin(2.0 * np.pi * x / g.lengths[0])
    lam = -(2.0 - 2.0 * math.cos(2.0 * np.pi / n)) / (h * h)
    assert np.allclose(kernels.laplacian_nd(f, g.spacings), lam * f,
                       rtol=0, atol=1e-11 * abs(lam))


def test_kernels_match_dense_oracle_2d():
    g = TorusGrid((8, 8), lengths=(2.0, 3.0))
    rng = np.random.default_rng(7)
    f = rng.standard_normal(g.dims)
    lap_mat = oracles.dense_laplacian(g)
    assert np.allclose(kernels.laplacian_nd(f, g.spacings).ravel(),
                       lap_mat @ f.ravel(), atol=1e-12)
    grads = kernels.gradient_nd(f, g.spacings)
    for ax in range(2):
        gmat = oracles.dense_gradient(g, ax)
        assert np.allclose(grads[ax].ravel(), gmat @ f.ravel(), atol=1e-12)


def test_kernels_match_dense_oracle_4d():
    g = TorusGrid((4, 4, 4, 4), lengths=(1.0, 2.0, 3.0, 4.0))
    rng = np.random.default_rng(8)
    f = rng.standard_normal(g.dims)
    lap_mat = oracles.dense_laplacian(g)
    assert np.allclose(kernels.laplacian_nd(f, g.spacings).ravel(),
                       lap_mat @ f.ravel(), atol=1e-12)
    for ax in range(4):
        gmat = oracles.dense_gradient(g, ax)
        assert np.allclose(kernels.gradient_nd(f, g.spacings)[ax].ravel(),
                           gmat @ f.ravel(), atol=1e-12)


def test_fast_path_agrees_with_numpy_path():
    rng = np.random.default_rng(9)
    for dims, lengths in (((16, 16), (2.0, 5.0)), ((4, 4, 4, 4), None)):
        g = TorusGrid(dims, lengths=lengths)
        f = rng.standard_normal(g.dims)
        assert np.allclose(kernels.laplacian_nd(f, g.spacings),
                           kernels._laplacian_np(f, g.spacings), atol=1e-11)
        assert np.allclose(kernels.gradient_nd(f, g.spacings),
                           kernels._gradient_np(f, g.spacings), atol=1e-11)


def test_backend_env_override():
    code = "import hktsolve.kernels as k; print(k.backend())"
    env = dict(os.environ, HKTSOLVE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


# ------------------------------------------------- residual and linearization


def test_residual_trivial_zero():
    g = TorusGrid((8, 8))
    r = residual(g, g.zeros(), 1.0, 0.7, g.zeros(), -np.eye(2))
    assert np.max(np.abs(r)) == 0.0


def test_residual_shape_mismatch():
    g = TorusGrid((8, 8))
    with pytest.raises(ShapeMismatch):
        residual(g, np.zeros((8, 4)), 1.0, 0.0, g.zeros(), -np.eye(2))
    with pytest.raises(ShapeMismatch):
        residual(g, g.zeros(), 1.0, 0.0, np.zeros((4, 8)), -np.eye(2))


def test_pernode_q_matches_constant_q():
    g = TorusGrid((8, 8))
    rng = np.random.default_rng(11)
    phi = rng.standard_normal(g.dims)
    qc = np.array([[-2.0, 0.5], [0.5, -1.0]])
    qn = np.broadcast_to(qc, g.dims + (2, 2)).copy()
    F = rng.standard_normal(g.dims)
    rc = residual(g, phi, 1.3, 0.4, F, qc)
    rn = residual(g, phi, 1.3, 0.4, F, qn)
    assert np.allclose(rc, rn, atol=1e-13)


def test_density_monitor():
    g = TorusGrid((16, 16))
    assert np.allclose(density(g, g.zeros(), -np.eye(2)), 1.0)
    phi = sine_product_field(g, 0.05)
    d = density(g, phi, -np.eye(2))
    r = residual(g, phi, 0.0, 0.0, g.zeros(), -np.eye(2))
    assert np.allclose(d, r, atol=1e-13)


def test_linearized_apply_examples():
    g = TorusGrid((8, 8))
    rng = np.random.default_rng(12)
    F = rng.standard_normal(g.dims)
    q = -np.eye(2)
    # eta = 0: only the -c e^{tF} column survives
    out = linearized_apply(g, rng.standard_normal(g.dims), 0.5, F, q,
                           g.zeros(), 1.0)
    assert np.allclose(out, -np.exp(0.5 * F), atol=1e-13)
    # phi = 0: gradient weights vanish, leaving laplacian(eta) - c e^{tF}
    eta = rng.standard_normal(g.dims)
    out = linearized_apply(g, g.zeros(), 0.5, F, q, eta, 2.0)
    want = kernels.laplacian_nd(eta, g.spacings) - 2.0 * np.exp(0.5 * F)
    assert np.allclose(out, want, atol=1e-12)


def test_linearized_apply_matches_finite_differences():
    g = TorusGrid((16, 16))
    rng = np.random.default_rng(13)
    F = rng.standard_normal(g.dims)
    q = np.broadcast_to(-np.eye(2), g.dims + (2, 2)).copy()
    q[..., 0, 1] = q[..., 1, 0] = 0.2 * np.sin(g.meshes()[0])
    validate_q(q, g)
    phi = 0.3 * rng.standard_normal(g.dims)
    t = 0.8

    def res_fn(p, b):
        return residual(g, p, b, t, F, q)

    for trial in range(3):
        eta = rng.standard_normal(g.dims)
        c = float(rng.standard_normal())
        fd = oracles.fd_directional_residual(res_fn, phi, 1.0, eta, c, 1e-6)
        lin = linearized_apply(g, phi, t, F, q, eta, c)
        denom = max(1.0, float(np.max(np.abs(fd))))
        assert np.max(np.abs(fd - lin)) / denom < 1e-6


def test_validate_q_rejects_positive_directions():
    g = TorusGrid((8, 8))
    validate_q(-np.eye(2), g)
    validate_q(np.zeros((2, 2)), g)
    # asymmetric input is fine when the symmetric part is still NSD
    validate_q(np.array([[-1.0, 1.0], [-1.0, -1.0]]), g)
    with pytest.raises(ConfigError):
        validate_q(np.eye(2), g)
    with pytest.raises(ConfigError):
        validate_q(np.array([[-1.0, 2.0], [2.0, -1.0]]), g)
    with pytest.raises(ConfigError):
        validate_q(np.zeros((8, 8, 2, 3)), g)
    with pytest.raises(ShapeMismatch):
        validate_q(-np.eye(4), g)
    with pytest.raises(ShapeMismatch):
        validate_q(np.broadcast_to(-np.eye(2), (4, 8, 2, 2)), g)
    bad = np.broadcast_to(-np.eye(2), g.dims + (2, 2)).copy()
    bad[3, 4] = np.eye(2)
    with pytest.raises(ConfigError):
        validate_q(bad, g)


# ------------------------------------------------------------ newton


def test_newton_step_linear_problem_one_step():
    # Q = 0 and F = 0 make the problem affine, so one undamped step
    # from (0, 2) lands exactly on the solution (0, 1)
    g = TorusGrid((16, 16))
    q = np.zeros((2, 2))
    state = SolverState(phi=g.zeros(), b=2.0, t=1.0, residual_norm=1.0,
                        newton_iters=0, res_history=[1.0])
    new = newton_step(g, state, g.zeros(), q)
    assert new.newton_iters == 1
    assert abs(new.b - 1.0) < 1e-10
    assert np.max(np.abs(new.phi)) < 1e-10
    assert new.residual_norm < 1e-10


def test_newton_step_at_exact_solution_is_stationary():
    g = TorusGrid((8, 8))
    state = SolverState(phi=g.zeros(), b=1.0, t=0.0, residual_norm=0.0,
                        newton_iters=0, res_history=[0.0])
    new = newton_step(g, state, g.zeros(), np.zeros((2, 2)))
    assert new.residual_norm == 0.0
    assert np.max(np.abs(new.phi - state.phi)) == 0.0
    assert new.b == state.b


def test_solve_at_t_zero_time_needs_no_iteration():
    g = TorusGrid((16, 16))
    st = solve_at_t(g, bump(g), -np.eye(2), 0.0)
    assert st.converged and st.newton_iters == 0
    assert st.message == "converged without iterating"


@pytest.mark.parametrize("field", ["bump", "sines"])
def test_poisson_limit_matches_fft_oracle(field):
    g = TorusGrid((16, 16))
    if field == "bump":
        F = bump(g)
    else:
        xs, ys = g.meshes()
        F = 0.4 * np.sin(xs) + 0.3 * np.cos(2.0 * ys)
    st = solve_at_t(g, F, np.zeros((2, 2)), 1.0, tol=1e-12)
    phi_o, b_o = oracles.fft_poisson_oracle(g, F)
    assert abs(st.b - b_o) < 1e-12
    assert np.max(np.abs(st.phi - phi_o)) < 1e-9
    assert st.residual_norm <= 1e-12


def test_newton_history_is_quadratic():
    g = TorusGrid((32, 32))
    q = -np.eye(2)
    F = manufactured_problem(g, sine_product_field(g, 0.3), q)
    st = solve_at_t(g, F, q, 1.0, tol=1e-12)
    rs = st.res_history
    assert all(rs[k + 1] < rs[k] for k in range(len(rs) - 1))
    for k in range(1, len(rs) - 1):
        if rs[k + 1] < 1e-13:
            break
        assert rs[k + 1] <= 10.0 * rs[k] ** 2


def test_same_solution_from_two_starts():
    g = TorusGrid((32, 32))
    q = -np.eye(2)
    F = bump(g)
    a = solve_at_t(g, F, q, 1.0, tol=1e-10)
    b = solve_at_t(g, F, q, 1.0, phi0=sine_product_field(g, 0.05),
                   b0=1.5, tol=1e-10)
    assert np.max(np.abs(a.phi - b.phi)) <= 100 * 1e-10
    assert abs(a.b - b.b) <= 100 * 1e-10


def test_converged_state_satisfies_integral_identity():
    # averaging the equation kills the laplacian term on a periodic grid
    g = TorusGrid((32, 32))
    q = -np.eye(2)
    F = bump(g)
    st = solve_at_t(g, F, q, 1.0, tol=1e-10)
    grads = kernels.gradient_nd(st.phi, g.spacings)
    quad = es.quad_value(np.asarray(q, dtype=float), grads)
    gap = abs(np.mean(quad + 1.0 - st.b * np.exp(st.t * F)))
    assert gap <= 10 * 1e-10


def test_b_bound_holds_and_detects_violations():
    g = TorusGrid((16, 16))
    F = bump(g)
    st = solve_at_t(g, F, -np.eye(2), 1.0, tol=1e-10)
    assert check_b_bound(st, F, 1e-7)
    fake = SolverState(phi=st.phi, b=2.0 * float(np.max(np.exp(-F))),
                       t=1.0, residual_norm=0.0, newton_iters=0)
    assert not check_b_bound(fake, F, 1e-7)


def test_bordered_system_has_full_rank():
    g = TorusGrid((8, 8))
    rng = np.random.default_rng(14)
    phi = 0.1 * rng.standard_normal(g.dims)
    F = rng.standard_normal(g.dims)
    op = bordered_operator(g, phi, 0.7, F, -np.eye(2))
    m = g.size + 1
    dense = np.empty((m, m))
    e = np.zeros(m)
    for col in range(m):
        e[col] = 1.0
        dense[:, col] = op.matvec(e)
        e[col] = 0.0
    assert np.linalg.matrix_rank(dense) == m
    # unbordered block alone is singular: constants are in its kernel
    const = np.concatenate([np.ones(g.size), [0.0]])
    assert np.max(np.abs((dense @ const)[:-1])) < 1e-10


def test_preconditioner_inverts_shifted_laplacian():
    g = TorusGrid((16, 16), lengths=(2.0, 7.0))
    rng = np.random.default_rng(15)
    eta = rng.standard_normal(g.dims)
    shifted = es.PRECOND_SHIFT * eta - kernels.laplacian_nd(eta, g.spacings)
    x = np.concatenate([shifted.ravel(), [4.2]])
    back = shifted_inverse_preconditioner(g).matvec(x)
    assert np.allclose(back[:-1], eta.ravel(), atol=1e-10)
    assert back[-1] == 4.2


# --------------------------------------------------------- failure paths


def test_max_iters_exceeded():
    g = TorusGrid((16, 16))
    q = -np.eye(2)
    F = manufactured_problem(g, sine_product_field(g, 0.3), q)
    with pytest.raises(MaxItersExceeded):
        solve_at_t(g, F, q, 1.0, tol=1e-30, max_iters=2)


def test_initial_b_must_be_positive():
    g = TorusGrid((8, 8))
    with pytest.raises(BPositivityLost):
        solve_at_t(g, g.zeros(), -np.eye(2), 1.0, b0=0.0)
    with pytest.raises(BPositivityLost):
        solve_at_t(g, g.zeros(), -np.eye(2), 1.0, b0=-1.0)


def test_nonpositive_tolerance_rejected():
    g = TorusGrid((8, 8))
    with pytest.raises(ConfigError):
        solve_at_t(g, g.zeros(), -np.eye(2), 1.0, tol=0.0)


def test_accepted_step_crossing_zero_b(monkeypatch):
    # force a descent direction whose full step lands at b < 0
    g = TorusGrid((8, 8))

    def fake_solve(grid, op, rhs, rtol):
        x = np.zeros(grid.size + 1)
        x[-1] = -3.5
        return x

    monkeypatch.setattr(es, "_solve_bordered", fake_solve)
    state = SolverState(phi=g.zeros(), b=3.0, t=1.0, residual_norm=2.0,
                        newton_iters=0, res_history=[2.0])
    with pytest.raises(BPositivityLost):
        newton_step(g, state, g.zeros(), np.zeros((2, 2)))


def test_damping_exhausted_on_ascent_direction(monkeypatch):
    g = TorusGrid((8, 8))

    def fake_solve(grid, op, rhs, rtol):
        x = np.zeros(grid.size + 1)
        x[-1] = 1.0  # pushes b away from the solution
        return x

    monkeypatch.setattr(es, "_solve_bordered", fake_solve)
    state = SolverState(phi=g.zeros(), b=2.0, t=1.0, residual_norm=1.0,
                        newton_iters=0, res_history=[1.0])
    with pytest.raises(DampingExhausted):
        newton_step(g, state, g.zeros(), np.zeros((2, 2)), max_halvings=5)


def test_linear_solve_failure_without_dense_fallback(monkeypatch):
    # stagnating GMRES on a grid too large for the dense path
    g = TorusGrid((128, 128))

    def fake_gmres(op, rhs, precond, rtol, maxiter=200, restart=50):
        return np.zeros_like(rhs), 1

    monkeypatch.setattr(es, "_gmres", fake_gmres)
    with pytest.raises(LinearSolveFailure):
        solve_at_t(g, bump(g), -np.eye(2), 1.0)


def test_dense_fallback_rescues_small_grids(monkeypatch):
    g = TorusGrid((8, 8))

    def fake_gmres(op, rhs, precond, rtol, maxiter=200, restart=50):
        return np.zeros_like(rhs), 1

    monkeypatch.setattr(es, "_gmres", fake_gmres)
    st = solve_at_t(g, bump(g), -np.eye(2), 1.0, tol=1e-10)
    assert st.converged

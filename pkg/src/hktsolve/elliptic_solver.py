"""Newton solver for the reduced scalar equation on periodic grids.

Unknowns are a zero-mean field phi and a constant b > 0 with

    laplacian(phi) + <Q grad phi, grad phi> + 1 = b * exp(t*F).

Each Newton correction (eta, c) solves the linearization augmented with
the constraint mean(eta) = 0, a square bordered system: the kernel of
the plain linearization is spanned by constants and the border removes
it.  The system is nonsymmetric, so it goes to GMRES with an inverse
shifted-Laplacian preconditioner applied by FFT; small systems fall
back to a dense direct solve when the iteration stagnates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    BPositivityLost,
    ConfigError,
    DampingExhausted,
    LinearSolveFailure,
    MaxItersExceeded,
    ShapeMismatch,
)
from .kernels import gradient_nd, laplacian_nd

DENSE_FALLBACK_MAX_NODES = 4096
PRECOND_SHIFT = 1.0
Q_EIGENVALUE_TOL = 1e-12


class TorusGrid:
    """Uniform periodic grid with 2 or 4 axes."""

    def __init__(self, dims, lengths=None):
        dims = tuple(int(d) for d in dims)
        if len(dims) not in (2, 4):
            raise ConfigError("grid needs 2 or 4 axes, got %d" % len(dims))
        if any(d < 4 for d in dims):
            raise ConfigError("every axis needs at least 4 nodes: %r" % (dims,))
        if lengths is None:
            lengths = (2.0 * math.pi,) * len(dims)
        lengths = tuple(float(x) for x in lengths)
        if len(lengths) != len(dims):
            raise ConfigError("lengths %r do not match dims %r" % (lengths, dims))
        if any(x <= 0 for x in lengths):
            raise ConfigError("axis lengths must be positive")
        self.dims = dims
        self.lengths = lengths
        self.spacings = tuple(x / d for x, d in zip(lengths, dims))
        self.size = int(np.prod(dims))

    @property
    def ndim(self):
        return len(self.dims)

    def coords(self, axis):
        return np.arange(self.dims[axis]) * self.spacings[axis]

    def meshes(self):
        return np.meshgrid(*[self.coords(ax) for ax in range(self.ndim)],
                           indexing="ij")

    def mean(self, f):
        return float(np.mean(f))

    def zeros(self):
        return np.zeros(self.dims)


@dataclass
class SolverState:
    phi: np.ndarray
    b: float
    t: float
    residual_norm: float
    newton_iters: int
    converged: bool = False
    message: str = ""
    res_history: list = field(default_factory=list)


def validate_q(q, grid=None):
    """Quadratic form data: symmetric and negative semi-definite per node."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 2:
        if q.shape[0] != q.shape[1]:
            raise ConfigError("quadratic form matrix must be square")
        if grid is not None and q.shape[0] != grid.ndim:
            raise ShapeMismatch("quadratic form is %dx%d on a %d-axis grid"
                                % (q.shape[0], q.shape[1], grid.ndim))
        top = float(np.max(np.linalg.eigvalsh(0.5 * (q + q.T))))
    else:
        d = q.shape[-1]
        if q.shape[-2] != d:
            raise ConfigError("per-node quadratic form must end in (d, d)")
        if grid is not None and (q.shape[:-2] != grid.dims or d != grid.ndim):
            raise ShapeMismatch("per-node quadratic form shape %r does not "
                                "match the grid" % (q.shape,))
        sym = 0.5 * (q + np.swapaxes(q, -1, -2))
        top = float(np.max(np.linalg.eigvalsh(sym)))
    if top > Q_EIGENVALUE_TOL:
        raise ConfigError(
            "quadratic form is not negative semi-definite "
            "(largest eigenvalue %.3e)" % top)
    return q


def _check_field(grid, f, name):
    f = np.asarray(f, dtype=float)
    if f.shape != grid.dims:
        raise ShapeMismatch("%s has shape %r, grid is %r" % (name, f.shape, grid.dims))
    return f


def quad_value(q, g):
    """<Q v, v> per node for a stacked gradient v."""
    if q.ndim == 2:
        return np.einsum("ij,i...,j...->...", q, g, g)
    return np.einsum("...ij,i...,j...->...", q, g, g)


def quad_dir_weights(q, g):
    """Weights w with d/ds <Q grad(phi+s eta)...> = sum_j w_j (grad eta)_j."""
    if q.ndim == 2:
        return np.einsum("ij,i...->j...", q + q.T, g)
    return np.einsum("...ij,i...->j...", q + np.swapaxes(q, -1, -2), g)


def residual(grid, phi, b, t, F, q):
    """Pointwise defect of the equation at (phi, b) and path time t."""
    phi = _check_field(grid, phi, "phi")
    F = _check_field(grid, F, "F")
    g = gradient_nd(phi, grid.spacings)
    return laplacian_nd(phi, grid.spacings) + quad_value(q, g) + 1.0 \
        - b * np.exp(t * F)


def density(grid, phi, q):
    """The positivity monitor 1 + laplacian(phi) + <Q grad phi, grad phi>."""
    phi = _check_field(grid, phi, "phi")
    g = gradient_nd(phi, grid.spacings)
    return 1.0 + laplacian_nd(phi, grid.spacings) + quad_value(q, g)


def linearized_apply(grid, phi, t, F, q, eta, c):
    """Directional derivative of the residual at (phi, b) along (eta, c)."""
    eta = _check_field(grid, eta, "eta")
    F = _check_field(grid, F, "F")
    w = quad_dir_weights(q, gradient_nd(phi, grid.spacings))
    ge = gradient_nd(eta, grid.spacings)
    out = laplacian_nd(eta, grid.spacings) - c * np.exp(t * F)
    for ax in range(grid.ndim):
        out += w[ax] * ge[ax]
    return out


def bordered_operator(grid, phi, t, F, q):
    """The Newton matrix as a LinearOperator on (eta nodes, c)."""
    n = grid.size
    eF = np.exp(t * F)
    w = quad_dir_weights(q, gradient_nd(phi, grid.spacings))
    spacings = grid.spacings
    dims = grid.dims

    def matvec(x):
        eta = x[:n].reshape(dims)
        c = x[n]
        ge = gradient_nd(eta, spacings)
        top = laplacian_nd(eta, spacings) - c * eF
        for ax in range(grid.ndim):
            top += w[ax] * ge[ax]
        return np.concatenate([top.ravel(), [eta.mean()]])

    return spla.LinearOperator((n + 1, n + 1), matvec=matvec, dtype=float)


def shifted_inverse_preconditioner(grid, shift=PRECOND_SHIFT):
    """Apply (shift - laplacian)^{-1} on the field block via FFT."""
    lam = np.zeros(grid.dims)
    for ax, (nax, h) in enumerate(zip(grid.dims, grid.spacings)):
        k = np.arange(nax)
        mu = -4.0 * np.sin(np.pi * k / nax) ** 2 / (h * h)
        shape = [1] * grid.ndim
        shape[ax] = nax
        lam = lam + mu.reshape(shape)
    denom = shift - lam
    n = grid.size

    def apply(x):
        eta = x[:n].reshape(grid.dims)
        sol = np.fft.ifftn(np.fft.fftn(eta) / denom).real
        return np.concatenate([sol.ravel(), x[n:]])

    return spla.LinearOperator((n + 1, n + 1), matvec=apply, dtype=float)


def _gmres(op, rhs, precond, rtol, maxiter=200, restart=50):
    try:
        return spla.gmres(op, rhs, M=precond, rtol=rtol, atol=0.0,
                          maxiter=maxiter, restart=restart)
    except TypeError:
        # older scipy spells the relative tolerance "tol"
        return spla.gmres(op, rhs, M=precond, tol=rtol, atol=0.0,
                          maxiter=maxiter, restart=restart)


def _solve_bordered(grid, op, rhs, rtol):
    precond = shifted_inverse_preconditioner(grid)
    x, info = _gmres(op, rhs, precond, rtol)
    rhs_norm = float(np.linalg.norm(rhs))
    ok = info == 0
    if ok and rhs_norm > 0:
        ok = float(np.linalg.norm(op.matvec(x) - rhs)) <= 10.0 * rtol * rhs_norm
    if ok:
        return x
    if grid.size > DENSE_FALLBACK_MAX_NODES:
        raise LinearSolveFailure(
            "GMRES stagnated (info=%s) and the grid is too large for the "
            "dense fallback" % info)
    m = grid.size + 1
    dense = np.empty((m, m))
    e = np.zeros(m)
    for col in range(m):
        e[col] = 1.0
        dense[:, col] = op.matvec(e)
        e[col] = 0.0
    try:
        return np.linalg.solve(dense, rhs)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveFailure("dense fallback failed: %s" % exc)


def newton_step(grid, state, F, q, gmres_rtol=None, max_halvings=20):
    """One damped Newton update of (phi, b); returns the new state."""
    n = grid.size
    res = residual(grid, state.phi, state.b, state.t, F, q)
    res_norm = float(np.max(np.abs(res)))
    if gmres_rtol is None:
        gmres_rtol = min(1e-2, res_norm)
    op = bordered_operator(grid, state.phi, state.t, F, q)
    rhs = np.concatenate([(-res).ravel(), [0.0]])
    x = _solve_bordered(grid, op, rhs, gmres_rtol)
    eta = x[:n].reshape(grid.dims)
    c = float(x[n])

    scale = 1.0
    for _ in range(max_halvings + 1):
        phi_new = state.phi + scale * eta
        phi_new = phi_new - np.mean(phi_new)
        b_new = state.b + scale * c
        new_res = residual(grid, phi_new, b_new, state.t, F, q)
        new_norm = float(np.max(np.abs(new_res)))
        if new_norm <= (1.0 - 1e-4) * res_norm:
            if b_new <= 0.0:
                raise BPositivityLost("b dropped to %.3e" % b_new)
            hist = list(state.res_history) + [new_norm]
            return SolverState(phi=phi_new, b=b_new, t=state.t,
                               residual_norm=new_norm,
                               newton_iters=state.newton_iters + 1,
                               res_history=hist)
        scale *= 0.5
    raise DampingExhausted(
        "no residual decrease after %d halvings (residual %.3e)"
        % (max_halvings, res_norm))


def solve_at_t(grid, F, q, t, phi0=None, b0=1.0, tol=1e-10, max_iters=30):
    """Newton-iterate to a converged SolverState at path time t."""
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    if b0 <= 0:
        raise BPositivityLost("initial b must be positive, got %g" % b0)
    F = _check_field(grid, F, "F")
    q = np.asarray(q, dtype=float)
    phi = grid.zeros() if phi0 is None else _check_field(grid, phi0, "phi0").copy()
    phi = phi - np.mean(phi)
    res = residual(grid, phi, b0, t, F, q)
    res_norm = float(np.max(np.abs(res)))
    state = SolverState(phi=phi, b=float(b0), t=float(t),
                        residual_norm=res_norm, newton_iters=0,
                        res_history=[res_norm])
    if res_norm <= tol:
        state.converged = True
        state.message = "converged without iterating"
        return state
    for _ in range(max_iters):
        state = newton_step(grid, state, F, q)
        if state.residual_norm <= tol:
            state.converged = True
            state.message = "converged in %d iterations" % state.newton_iters
            return state
    raise MaxItersExceeded(
        "residual %.3e after %d Newton iterations (tol %.1e)"
        % (state.residual_norm, state.newton_iters, tol))


def check_b_bound(state, F, slack):
    """Discrete analog of the constant-bound b <= max exp(-t F) + slack."""
    bound = float(np.max(np.exp(-state.t * np.asarray(F)))) + slack
    return state.b <= bound

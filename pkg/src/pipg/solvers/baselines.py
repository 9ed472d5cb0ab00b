"""Baseline first-order methods: ADMM, PIPGeq and two PDHG variants."""

from __future__ import annotations

import math

import numba
import numpy as np
import scipy.sparse as sp

from ..linalg import BlockOperator
from ..problem import ConicProblem
from .schedules import ConstantConvex, PdhgAccelerated, default_beta, effective_sigma
from .trace import Ergodic, Recorder, SolverConfig, SolveTrace, initial_draws


def _colnorm(x):
    return np.sqrt(np.sum(x * x, axis=0))


@numba.njit(cache=True)
def _gradient_step(indptr, indices, data, y, q, inv_l, out):
    """``out = y - (M y + q) / L`` for CSR ``M``."""
    n, T = y.shape
    for i in range(n):
        for t in range(T):
            out[i, t] = q[i, t]
        for k in range(indptr[i], indptr[i + 1]):
            a = data[k]
            j = indices[k]
            for t in range(T):
                out[i, t] += a * y[j, t]
        for t in range(T):
            out[i, t] = y[i, t] - out[i, t] * inv_l
    return out


@numba.njit(cache=True)
def _momentum_update(y, x, x_new, mom, lip, gm):
    """Gradient-mapping norms at ``y``, then ``y <- x_new + mom (x_new - x)``, ``x <- x_new``."""
    n, T = y.shape
    for t in range(T):
        gm[t] = 0.0
    for i in range(n):
        for t in range(T):
            xn = x_new[i, t]
            d = y[i, t] - xn
            gm[t] += d * d
            y[i, t] = xn + mom * (xn - x[i, t])
            x[i, t] = xn
    for t in range(T):
        gm[t] = lip * math.sqrt(gm[t])
    return gm


class SubproblemHessian:
    """Applies ``P + alpha H'H`` for the ADMM subproblem.

    The product is assembled once as a CSR matrix when that has fewer
    nonzeros than applying ``H`` and ``H'`` separately; otherwise the two
    factors are applied in turn.
    """

    def __init__(self, prob: ConicProblem, alpha: float):
        self.prob = prob
        self.alpha = alpha
        P = prob.P.csr if isinstance(prob.P, BlockOperator) else sp.csr_matrix(prob.P)
        H = prob.H.csr
        M = (P + alpha * (H.T @ H)).tocsr()
        M.sort_indices()
        self.matrix = M if M.nnz <= 2 * H.nnz + P.nnz else None

    def gradient_step(self, y, lin, inv_l):
        """``y - (P y + alpha H'H y + lin) / L``."""
        if self.matrix is not None:
            M = self.matrix
            return _gradient_step(M.indptr, M.indices, M.data, y, lin, inv_l, np.empty_like(y))
        prob = self.prob
        grad = prob.Pz(y) + self.alpha * prob.Ht(prob.Hz(y)) + lin
        return y - grad * inv_l


def admm_subproblem(prob: ConicProblem, c, z_start, alpha: float, tol: float, max_iters: int,
                    hessian: SubproblemHessian | None = None):
    """Minimize ``f(z) + alpha/2 ||Hz - c||^2`` over ``D`` column by column.

    Accelerated projected gradient started at ``z_start``, with constant
    momentum when ``f`` is strongly convex and the FISTA sequence otherwise.
    A column stops once its gradient-mapping norm is ``<= tol``. Pass a
    :class:`SubproblemHessian` to reuse it across calls.

    Returns ``(z, iterations, converged)`` with per-column counts.
    """
    L = prob.lam + alpha * prob.sigma
    if L <= 0:
        L = 1.0
    if hessian is None:
        hessian = SubproblemHessian(prob, alpha)
    mu = prob.mu
    momentum = None
    if mu > 0:
        q = math.sqrt(mu / L)
        momentum = (1 - q) / (1 + q)
    T = z_start.shape[1]
    lin = np.ascontiguousarray(prob.p[:, None] - alpha * prob.Ht(c))
    x = np.ascontiguousarray(z_start, dtype=float).copy()
    y = x.copy()
    iters = np.zeros(T, dtype=int)
    done = np.zeros(T, dtype=bool)
    act = np.arange(T)
    full = True
    t_k = 1.0
    for it in range(1, max_iters + 1):
        if full:
            ya, xa, la = y, x, lin
        else:
            ya, xa, la = y[:, act], x[:, act], lin[:, act]
        u = hessian.gradient_step(ya, la, 1.0 / L)
        x_new = np.ascontiguousarray(prob.D._project(u))
        if momentum is None:
            t_next = 0.5 * (1 + math.sqrt(1 + 4 * t_k * t_k))
            mom = (t_k - 1) / t_next
            t_k = t_next
        else:
            mom = momentum
        gm = _momentum_update(ya, xa, x_new, mom, L, np.empty(ya.shape[1]))
        if not full:
            y[:, act] = ya
            x[:, act] = xa
        iters[act] = it
        fin = gm <= tol
        if np.any(fin):
            done[act[fin]] = True
            act = act[~fin]
            full = False
            if act.size == 0:
                break
    return x, iters, done


def admm_solve(prob: ConicProblem, alpha: float = 1.0,
               config: SolverConfig | None = None) -> SolveTrace:
    """Alternating direction method of multipliers on ``Hz - y = g, y in K``.

    ``w`` is the scaled dual. The ``z`` subproblem is solved inexactly; the
    trace's ``inner_iters`` holds projections onto ``D`` per trial and
    ``inner_unconverged`` counts outer steps whose inner loop hit its cap.
    """
    config = config or SolverConfig()
    if not alpha > 0:
        raise ValueError("ADMM penalty alpha must be positive")
    z0, v0, y0 = initial_draws(prob, config)
    z = prob.D.project(z0)
    y = prob.K.project(y0)
    w = v0.copy()
    z1 = z.copy()
    g = prob.g[:, None]
    T = z.shape[1]
    inner_total = np.zeros(T, dtype=int)
    unconverged = np.zeros(T, dtype=int)
    erg = Ergodic("uniform")
    rec = Recorder(prob, config, "admm", f"alpha={alpha:g}")
    hessian = SubproblemHessian(prob, alpha)
    hz = prob.Hz(z)
    rec.record(1, z, hz, w, None, erg)
    for j in range(1, config.max_iters):
        c = y + g - w
        z_new, its, ok = admm_subproblem(prob, c, z, alpha, config.inner_tolerance,
                                         config.inner_max_iters, hessian)
        inner_total += its
        unconverged += ~ok
        hz = prob.Hz(z_new)
        y = prob.K._project(hz - g + w)
        w = w + hz - y - g
        erg.add(j, z, z_new, None)
        z = z_new
        if config.is_logged(j + 1):
            rec.record(j + 1, z, hz, w, None, erg)
    trace = rec.finish(z=z, w=w, v=None, z1=z1, v1=None, erg=erg, n_iters=config.max_iters,
                       inner_iters=inner_total, inner_unconverged=unconverged)
    trace.metadata.update({"alpha": alpha, "inner_tolerance": config.inner_tolerance,
                           "inner_max_iters": config.inner_max_iters, "y": y})
    return trace


def pipgeq_steps(prob: ConicProblem, alpha=None, beta=None):
    """Defaults ``beta = sqrt(lam/sigma)``, ``alpha = 1/(lam + beta max(2 sigma, sigma + 1))``.

    ``sigma + 1`` bounds ``||[H, -I]||^2`` for the slack formulation.
    """
    if beta is None:
        beta = default_beta(prob)
    if alpha is None:
        s = effective_sigma(prob)
        alpha = 1.0 / (prob.lam + beta * max(2 * s, s + 1))
    return alpha, beta


def pipgeq_solve(prob: ConicProblem, alpha: float | None = None, beta: float | None = None,
                 config: SolverConfig | None = None) -> SolveTrace:
    """Proportional-integral projected gradient on the slack form ``Hz - y = g``."""
    config = config or SolverConfig()
    alpha, beta = pipgeq_steps(prob, alpha, beta)
    z0, v0, y0 = initial_draws(prob, config)
    z = prob.D.project(z0)
    y = prob.K.project(y0)
    w = v0.copy()
    z1 = z.copy()
    g = prob.g[:, None]
    erg = Ergodic("uniform")
    rec = Recorder(prob, config, "pipgeq", f"alpha={alpha:g},beta={beta:g}")
    hz = prob.Hz(z)
    rec.record(1, z, hz, w, None, erg)
    for j in range(1, config.max_iters):
        v = w + beta * (hz - y - g)
        z_new = prob.D._project(z - alpha * (prob.grad(z) + prob.Ht(v)))
        y = prob.K._project(y + alpha * v)
        hz_new = prob.Hz(z_new)
        w = w + beta * (hz_new - y - g)
        erg.add(j, z, z_new, None)
        z, hz = z_new, hz_new
        if config.is_logged(j + 1):
            rec.record(j + 1, z, hz, w, None, erg)
    trace = rec.finish(z=z, w=w, v=None, z1=z1, v1=None, erg=erg, n_iters=config.max_iters)
    trace.metadata.update({"alpha": alpha, "beta": beta, "y": y})
    return trace


def pdhg_steps(prob: ConicProblem, alpha=None, beta=None):
    """Defaults matching the constant PIPG schedule."""
    if beta is None:
        beta = default_beta(prob)
    if alpha is None:
        alpha = 1.0 / (beta * prob.sigma + prob.lam)
    return alpha, beta


def pdhg_const_solve(prob: ConicProblem, alpha: float | None = None, beta: float | None = None,
                     config: SolverConfig | None = None) -> SolveTrace:
    """PDHG with constant steps: primal step first, then an extrapolated dual step.

    ``config.v1`` seeds ``w^1`` (projected onto the polar cone).
    """
    config = config or SolverConfig()
    alpha, beta = pdhg_steps(prob, alpha, beta)
    z0, v0, _ = initial_draws(prob, config)
    z = prob.D.project(z0)
    w = prob.K_polar.project(v0)
    z1, w1 = z.copy(), w.copy()
    g = prob.g[:, None]
    erg = Ergodic("uniform")
    rec = Recorder(prob, config, "pdhg", ConstantConvex(beta))
    hz = prob.Hz(z)
    rec.record(1, z, hz, w, None, erg)
    for j in range(1, config.max_iters):
        z_new = prob.D._project(z - alpha * (prob.grad(z) + prob.Ht(w)))
        hz_new = prob.Hz(z_new)
        w = prob.K_polar._project(w + beta * (2 * hz_new - hz - g))
        erg.add(j, z, z_new, w)
        z, hz = z_new, hz_new
        if config.is_logged(j + 1):
            rec.record(j + 1, z, hz, w, None, erg)
    trace = rec.finish(z=z, w=w, v=None, z1=z1, v1=w1, erg=erg, n_iters=config.max_iters)
    trace.metadata.update({"alpha": alpha, "beta": beta})
    return trace


def pdhg_varying_solve(prob: ConicProblem, config: SolverConfig | None = None,
                       schedule: PdhgAccelerated | None = None) -> SolveTrace:
    """Accelerated PDHG for strongly convex objectives.

    Each step::

        w+ = proj_Kpolar[w + beta^j (H (z + gamma^j (z - z_prev)) - g)]
        z+ = proj_D[z - alpha^j / (mu alpha^j + 1) (grad f(z) + H' w+)]

    with ``z_prev = z`` on the first step, so the extrapolation starts null.
    """
    config = config or SolverConfig()
    schedule = schedule or PdhgAccelerated()
    schedule.check(prob)
    mu = prob.mu
    z0, v0, _ = initial_draws(prob, config)
    z = prob.D.project(z0)
    w = prob.K_polar.project(v0)
    z1, w1 = z.copy(), w.copy()
    g = prob.g[:, None]
    erg = Ergodic("uniform")
    rec = Recorder(prob, config, "pdhg-acc", schedule)
    hz = prob.Hz(z)
    hz_prev = hz
    rec.record(1, z, hz, w, None, erg)
    period = config.restart_period
    jj = 0
    alpha = beta = None
    for j in range(1, config.max_iters):
        jj += 1
        if jj == 1:
            alpha, beta = schedule.initial(prob)
            gamma = 0.0
            hz_prev = hz
        else:
            alpha, beta, gamma = schedule.advance(alpha, beta, prob)
        w = prob.K_polar._project(w + beta * (hz + gamma * (hz - hz_prev) - g))
        step = alpha / (mu * alpha + 1.0)
        z_new = prob.D._project(z - step * (prob.grad(z) + prob.Ht(w)))
        erg.add(jj, z, z_new, w)
        hz_prev, hz = hz, prob.Hz(z_new)
        z = z_new
        if config.is_logged(j + 1):
            rec.record(j + 1, z, hz, w, None, erg)
        if period and jj == period:
            jj = 0
            erg.reset()
            rec.restarts.append(j + 1)
    trace = rec.finish(z=z, w=w, v=None, z1=z1, v1=w1, erg=erg, n_iters=config.max_iters)
    trace.metadata.update(schedule.metadata())
    trace.metadata.update({"final_alpha": alpha, "final_beta": beta})
    return trace

"""Runtime-checkable convergence bounds for PIPG's ergodic averages.

For a saddle point ``(z*, w*)`` and initial ``(z^1, v^1)``:

constant schedule (``beta``, ``alpha = 1/(beta sigma + lam)``)::

    V1 = ||z1 - z*||^2 / (2 alpha) + ||v1 - w*||^2 / (2 beta)
    d_K(H zt^k - g)               <= V1 / (beta k)
    L(zb^k, w*) - L(z*, wb^k)     <= V1 / k

strongly convex schedule::

    V1 = (mu + 2 lam)/4 ||z1 - z*||^2 + sigma/mu ||v1 - w*||^2
    d_K(H zt^k - g)               <= 12 lam sigma V1 / (mu^2 k (k^2 + 6k + 11))
    L(zb^k, w*) - L(z*, wb^k)     <= 4 lam V1 / (mu k (k + 5))
"""

from __future__ import annotations

import numpy as np

from .schedules import effective_sigma

__all__ = ["initial_energy", "bounds", "certificate_values", "bound_certificates", "holds"]


def _sqdist(a, b):
    d = a - (b[:, None] if a.ndim == 2 and b.ndim == 1 else b)
    return np.sum(d * d, axis=0)


def initial_energy(prob, schedule, z1, v1, z, w):
    """``V^1(z, w)`` for the schedule's bound family."""
    if schedule.theorem == "convex":
        alpha, beta = schedule.steps(1, prob)
        return _sqdist(z1, z) / (2 * alpha) + _sqdist(v1, w) / (2 * beta)
    if schedule.theorem == "strongly_convex":
        mu, lam = prob.mu, prob.lam
        return (mu + 2 * lam) / 4 * _sqdist(z1, z) + effective_sigma(prob) / mu * _sqdist(v1, w)
    raise ValueError(f"schedule {schedule.name!r} carries no convergence bound")


def bounds(prob, schedule, k: int, v1_energy):
    """Right-hand sides ``(feasibility, gap)`` at ergodic index ``k``."""
    if schedule.theorem == "convex":
        _, beta = schedule.steps(1, prob)
        return v1_energy / (beta * k), v1_energy / k
    mu, lam, sigma = prob.mu, prob.lam, effective_sigma(prob)
    fea = 12 * lam * sigma * v1_energy / (mu ** 2 * k * (k * k + 6 * k + 11))
    gap = 4 * lam * v1_energy / (mu * k * (k + 5))
    return fea, gap


def certificate_values(prob, ref, schedule, k, z1, v1, z_tilde, z_bar, w_bar, *,
                       fea_lhs=None, f_star=None, hz_star_res=None, ht_wstar=None, g_wstar=None):
    """``(lhs_fea, rhs_fea, lhs_gap, rhs_gap)`` per trial column at ergodic index ``k``."""
    if fea_lhs is None:
        fea_lhs = prob.feasibility(z_tilde)
    if f_star is None:
        f_star = float(prob.f(ref.z_star))
    if hz_star_res is None:
        hz_star_res = prob.residual(ref.z_star)
    if ht_wstar is None:
        ht_wstar = prob.Ht(ref.w_star)
    if g_wstar is None:
        g_wstar = float(prob.g @ ref.w_star)
    l_zbar_wstar = prob.f(z_bar) + ht_wstar @ z_bar - g_wstar
    l_zstar_wbar = f_star + hz_star_res @ w_bar
    gap_lhs = l_zbar_wstar - l_zstar_wbar
    energy = initial_energy(prob, schedule, z1, v1, ref.z_star, ref.w_star)
    fea_rhs, gap_rhs = bounds(prob, schedule, k, energy)
    return fea_lhs, fea_rhs, gap_lhs, gap_rhs


def bound_certificates(prob, ref, trace, schedule):
    """Evaluate the bounds on every logged row of a trace with stored averages.

    Returns a dict of ``(L, T)`` arrays keyed like the trace's ``cert_*``
    fields, with NaN on rows that have no ergodic average yet.
    """
    if trace.stored is None:
        raise ValueError("trace has no stored iterates; solve with store_iterates=True")
    L, T = len(trace.iters), trace.trials
    out = {key: np.full((L, T), np.nan) for key in
           ("cert_lhs_fea", "cert_rhs_fea", "cert_lhs_gap", "cert_rhs_gap")}
    for row, k in enumerate(trace.ergodic_k):
        zt = trace.stored["z_tilde"][row]
        if k == 0 or zt is None:
            continue
        vals = certificate_values(prob, ref, schedule, int(k), trace.z1, trace.v1, zt,
                                  trace.stored["z_bar"][row], trace.stored["w_bar"][row])
        for key, val in zip(out, vals):
            out[key][row] = val
    return out


def holds(lhs, rhs, rel: float = 1e-6, abs_tol: float = 1e-8) -> np.ndarray:
    """Elementwise ``lhs <= rhs (1 + rel) + abs_tol``, treating NaN rows as vacuous."""
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    ok = lhs <= rhs * (1 + rel) + abs_tol
    return ok | np.isnan(lhs)

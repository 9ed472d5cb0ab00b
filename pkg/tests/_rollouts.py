"""Dynamics-consistent rollouts that satisfy every constraint of a builtin OCP."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from pipg import geometry as geo
from pipg.ocp import ObstacleSpec, QuadrotorParams, build_masses, build_quadrotor, rollout, stack_ocp
from pipg.solvers import SolverConfig, StronglyConvex, pipg_solve

MARGIN = 0.05


def constraint_slack(spec, z):
    """Smallest slack over the inequality rows and the stage sets (negative if violated)."""
    tau, nx, nu = spec.horizon, spec.nx, spec.nu
    x = z[:tau * nx].reshape(tau, nx)
    u = z[tau * nx:].reshape(tau, nu)
    slack = [np.inf]
    if spec.gamma is not None:
        slack.append(spec.gamma - np.max(np.abs(np.diff(u, axis=0))))
    for t in range(tau):
        if spec.C is not None:
            slack.append(np.min(spec.C[t] @ x[t] - spec.a[t]))
        if spec.D is not None:
            slack.append(np.min(spec.D[t] @ u[t] - spec.b[t]))
        slack.append(-set_excess(spec.X, x[t]))
        slack.append(-set_excess(spec.U, u[t]))
    return float(min(slack))


def set_excess(s, y):
    """Positive amount by which ``y`` leaves ``s``; a negative value is an inner margin."""
    if isinstance(s, geo.Cartesian):
        out, i = -np.inf, 0
        for f in s.factors:
            out = max(out, set_excess(f, y[i:i + f.dim]))
            i += f.dim
        return out
    if isinstance(s, geo.InfBall):
        return float(np.max(np.abs(y)) - s.radius)
    if isinstance(s, geo.Ball):
        return float(np.linalg.norm(y - s.center) - s.radius)
    if isinstance(s, geo.ConeIntersectBall):
        cone = s.cone
        axial = float(y @ cone.axis)
        cone_gap = np.linalg.norm(y) * math.cos(cone.half_angle) - axial
        return max(float(np.linalg.norm(y) - s.radius), float(cone_gap))
    raise TypeError(type(s).__name__)


def masses_rollouts(count=10, seed=0):
    spec = build_masses()
    rng = np.random.default_rng([31, seed])
    out = []
    while len(out) < count:
        u = rng.uniform(-0.2, 0.2, (spec.horizon, spec.nu))
        z = rollout(spec, u)
        if constraint_slack(spec, z) > MARGIN:
            out.append(z)
    return spec, out


@lru_cache(maxsize=None)
def _quadrotor_inputs():
    """Inputs from a solve with every constraint tightened by a margin."""
    p = QuadrotorParams()
    tight = QuadrotorParams(gamma=p.gamma - 4 * MARGIN, half_angle=p.half_angle - 4 * MARGIN,
                            delta1=p.delta1 - 4 * MARGIN, delta2=p.delta2 - 4 * MARGIN,
                            rho1=p.rho1 - 4 * MARGIN, rho2=p.rho2 + 4 * MARGIN)
    obs = ObstacleSpec()
    tight_obs = ObstacleSpec(obs.centers, obs.radii + 4 * MARGIN)
    spec = build_quadrotor(tight, tight_obs, x_ref=build_quadrotor().x_ref)
    prob = stack_ocp(spec)
    tr = pipg_solve(prob, StronglyConvex(), SolverConfig(max_iters=20_000))
    n_x = spec.horizon * spec.nx
    return tr.z[n_x:, 0].reshape(spec.horizon, spec.nu).copy()


def quadrotor_rollouts(count=10, seed=0, scale=0.05):
    spec = build_quadrotor()
    base = _quadrotor_inputs()
    rng = np.random.default_rng([37, seed])
    out = []
    for _ in range(100 * count):
        z = rollout(spec, base + scale * rng.standard_normal(base.shape))
        if constraint_slack(spec, z) > MARGIN:
            out.append(z)
            if len(out) == count:
                return spec, out
    raise RuntimeError("could not draw feasible quadrotor rollouts")

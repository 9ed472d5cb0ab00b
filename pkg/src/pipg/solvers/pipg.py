"""Proportional-integral projected gradient method."""

from __future__ import annotations

import numpy as np

from ..problem import ConicProblem
from .schedules import StepSchedule, StronglyConvex
from .trace import Ergodic, Recorder, SolverConfig, SolveTrace, initial_draws


def pipg_solve(prob: ConicProblem, schedule: StepSchedule | None = None,
               config: SolverConfig | None = None) -> SolveTrace:
    """Run PIPG for ``config.max_iters`` iterates.

    Each step::

        w+ = proj_Kpolar[v + beta (H z - g)]
        z+ = proj_D[z - alpha (grad f(z) + H' w+)]
        v+ = w+ + beta H (z+ - z)

    The strongly convex schedule keeps cubic-weighted ergodic averages;
    every other schedule keeps uniform ones. With ``restart_period > 0``
    the schedule index and the averages reset every ``restart_period``
    steps while ``z`` and ``v`` carry over.
    """
    config = config or SolverConfig()
    schedule = schedule or (StronglyConvex() if prob.mu > 0 else None)
    if schedule is None:
        from .schedules import ConstantConvex
        schedule = ConstantConvex()
    schedule.check(prob)

    z0, v0, _ = initial_draws(prob, config)
    z = prob.D.project(z0)
    v = prob.K_polar.project(v0)
    z1, v1 = z.copy(), v.copy()
    w = None
    g = prob.g[:, None]

    erg = Ergodic("cubic" if schedule.theorem == "strongly_convex" else "uniform")
    period = config.restart_period
    rec = Recorder(prob, config, "pipg", schedule,
                   certify=schedule.theorem is not None and period == 0)
    hz = prob.Hz(z)
    rec.record(1, z, hz, w, v, erg, z1, v1)

    jj = 0
    for j in range(1, config.max_iters):
        jj += 1
        alpha, beta = schedule.steps(jj, prob)
        w = prob.K_polar._project(v + beta * (hz - g))
        z_new = prob.D._project(z - alpha * (prob.grad(z) + prob.Ht(w)))
        hz_new = prob.Hz(z_new)
        v = w + beta * (hz_new - hz)
        erg.add(jj, z, z_new, w)
        z, hz = z_new, hz_new
        if config.is_logged(j + 1):
            rec.record(j + 1, z, hz, w, v, erg, z1, v1)
        if period and jj == period:
            jj = 0
            erg.reset()
            rec.restarts.append(j + 1)

    trace = rec.finish(z=z, w=w, v=v, z1=z1, v1=v1, erg=erg, n_iters=config.max_iters)
    trace.metadata.update({"restart_period": period, "sigma": prob.sigma,
                           "mu": prob.mu, "lam": prob.lam})
    return trace


def restart_wrap(solver, restart_period: int):
    """Return ``solver`` with its step index reset every ``restart_period`` steps.

    A period ``<= 0`` gives back the solver unchanged.
    """
    if restart_period <= 0:
        return solver

    def wrapped(prob, *args, config: SolverConfig | None = None, **kwargs):
        config = config or SolverConfig()
        cfg = SolverConfig(**{**config.__dict__, "restart_period": restart_period})
        return solver(prob, *args, config=cfg, **kwargs)

    wrapped.__name__ = f"{getattr(solver, '__name__', 'solver')}_restart{restart_period}"
    return wrapped

"""Iterative conic solvers, step schedules and convergence certificates."""

from .baselines import (
    admm_solve,
    admm_subproblem,
    pdhg_const_solve,
    pdhg_varying_solve,
    pipgeq_solve,
)
from .certificates import bound_certificates, holds
from .pipg import pipg_solve, restart_wrap
from .schedules import ConstantConvex, Explicit, PdhgAccelerated, StepSchedule, StronglyConvex
from .trace import SolverConfig, SolveTrace

__all__ = [
    "admm_solve",
    "admm_subproblem",
    "pdhg_const_solve",
    "pdhg_varying_solve",
    "pipgeq_solve",
    "pipg_solve",
    "restart_wrap",
    "bound_certificates",
    "holds",
    "ConstantConvex",
    "Explicit",
    "PdhgAccelerated",
    "StepSchedule",
    "StronglyConvex",
    "SolverConfig",
    "SolveTrace",
]

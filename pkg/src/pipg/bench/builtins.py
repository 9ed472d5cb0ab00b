"""Named benchmark problems."""

from __future__ import annotations

import numpy as np

from .. import geometry as geo
from ..ocp import build_masses, build_quadrotor, stack_ocp
from ..problem import ConicProblem

BUILTINS = ("masses", "quadrotor", "toy")


def toy_problem() -> ConicProblem:
    """``min z^2/2  s.t.  z - 1 >= 0``; the saddle point is ``z* = 1, w* = -1``."""
    return ConicProblem(np.eye(1), np.zeros(1), np.ones((1, 1)), np.ones(1),
                        geo.NonnegOrthant(1), geo.Reals(1), name="toy")


def builtin_problem(name: str) -> ConicProblem:
    if name == "masses":
        return stack_ocp(build_masses(), name="masses")
    if name == "quadrotor":
        return stack_ocp(build_quadrotor(), name="quadrotor")
    if name == "toy":
        return toy_problem()
    raise ValueError(f"unknown builtin problem {name!r}; choose from {', '.join(BUILTINS)}")

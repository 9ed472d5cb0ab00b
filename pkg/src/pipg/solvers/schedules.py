"""Step-size schedules ``(alpha^j, beta^j)`` for the primal-dual iterations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

SIGMA_FLOOR = 1e-12


def effective_sigma(prob) -> float:
    """``prob.sigma`` with a positive floor (``H = 0`` leaves the dual inert)."""
    return prob.sigma if prob.sigma > 0 else SIGMA_FLOOR


def default_beta(prob) -> float:
    """``sqrt(lam / sigma)``, balancing the primal and dual terms of the bounds."""
    lam, sigma = prob.lam, prob.sigma
    if lam > 0 and sigma > 0:
        return math.sqrt(lam / sigma)
    if sigma > 0:
        return 1.0 / math.sqrt(sigma)
    return 1.0


class StepSchedule:
    name = "schedule"
    #: which bound family applies ("convex", "strongly_convex" or None)
    theorem: str | None = None

    def check(self, prob) -> None:
        pass

    def steps(self, j: int, prob) -> tuple[float, float]:
        raise NotImplementedError


@dataclass
class ConstantConvex(StepSchedule):
    """``beta^j = beta``, ``alpha^j = 1 / (beta sigma + lam)``."""

    beta: float | None = None
    name = "constant"
    theorem = "convex"

    def beta_for(self, prob) -> float:
        return default_beta(prob) if self.beta is None else self.beta

    def check(self, prob):
        if not self.beta_for(prob) > 0:
            raise ValueError("beta must be positive")
        if prob.lam == 0 and prob.sigma == 0:
            raise ValueError("constant schedule needs lam > 0 or sigma > 0")

    def steps(self, j, prob):
        beta = self.beta_for(prob)
        return 1.0 / (beta * prob.sigma + prob.lam), beta


@dataclass
class StronglyConvex(StepSchedule):
    """``alpha^j = 2 / ((j+1) mu + 2 lam)``, ``beta^j = (j+1) mu / (2 sigma)``."""

    name = "strongly_convex"
    theorem = "strongly_convex"

    def check(self, prob):
        if not prob.mu > 0:
            raise ValueError("strongly convex schedule requires mu > 0")

    def steps(self, j, prob):
        mu = prob.mu
        return 2.0 / ((j + 1) * mu + 2.0 * prob.lam), (j + 1) * mu / (2.0 * effective_sigma(prob))


@dataclass
class PdhgAccelerated(StepSchedule):
    """Accelerated PDHG recursion for ``mu``-strongly convex objectives.

    ``alpha^1 = 1 / (lam + beta^1 sigma)`` with ``beta^1 = sqrt(lam / sigma)``;
    then ``gamma^j = 1 / sqrt(1 + 2 mu alpha^{j-1})``, ``alpha^j = gamma^j alpha^{j-1}``,
    ``beta^j = beta^{j-1} / gamma^j``. The product ``alpha^j beta^j`` stays fixed,
    so ``alpha^j (lam + sigma beta^j) <= 1`` for every ``j``.
    """

    beta1: float | None = None
    name = "pdhg_accelerated"

    def check(self, prob):
        if not prob.mu > 0:
            raise ValueError("accelerated PDHG requires mu > 0")

    def initial(self, prob) -> tuple[float, float]:
        beta = default_beta(prob) if self.beta1 is None else self.beta1
        return 1.0 / (prob.lam + beta * prob.sigma), beta

    def advance(self, alpha: float, beta: float, prob) -> tuple[float, float, float]:
        gamma = 1.0 / math.sqrt(1.0 + 2.0 * prob.mu * alpha)
        return gamma * alpha, beta / gamma, gamma

    def metadata(self) -> dict:
        return {"recursion": "gamma=1/sqrt(1+2*mu*alpha_prev); alpha=gamma*alpha_prev; beta=beta_prev/gamma"}


@dataclass
class Explicit(StepSchedule):
    """User-supplied sequences; index ``j`` past the end repeats the last entry."""

    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    name = "explicit"

    def check(self, prob):
        if not self.alphas or len(self.alphas) != len(self.betas):
            raise ValueError("explicit schedule needs equal-length, nonempty alpha/beta lists")
        if min(self.alphas) <= 0 or min(self.betas) <= 0:
            raise ValueError("explicit step sizes must be positive")

    def steps(self, j, prob):
        i = min(j, len(self.alphas)) - 1
        return float(self.alphas[i]), float(self.betas[i])

"""Conic quadratic programs.

A :class:`ConicProblem` is::

    minimize    0.5 z'Pz + <p, z>
    subject to  Hz - g in K,  z in D

with ``K`` a closed convex cone and ``D`` a closed convex set. Evaluation
helpers accept ``(n,)`` vectors or ``(n, T)`` batches and return scalars or
per-column arrays accordingly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import geometry as geo
from .errors import FormatError
from .linalg import BlockOperator, csr_matmul, curvature_bounds, spectral_norm_sq, to_dense

__all__ = [
    "ConicProblem",
    "KKTResiduals",
    "SaddleReference",
    "objective",
    "gradient",
    "bregman",
    "lagrangian",
    "error_metrics",
    "kkt_certificate",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
]

SIGMA_POWER_ITERS = 2000


def _cdot(a, b):
    """Column-wise inner product; scalar for 1-D inputs."""
    return np.sum(a * b, axis=0)


def _bc(v, x):
    return v if x.ndim == 1 else v.reshape(-1, *([1] * (x.ndim - 1)))


class ConicProblem:
    """Problem data plus cached curvature (``mu``, ``lam``) and ``sigma >= ||H||^2``."""

    def __init__(self, P, p, H, g, K: geo.ConvexSet, D: geo.ConvexSet, *,
                 sigma: float | None = None, name: str = ""):
        self.P = P if isinstance(P, BlockOperator) else np.array(P, dtype=float)
        self.p = np.array(p, dtype=float)
        self.H = H if isinstance(H, BlockOperator) else BlockOperator.from_dense(H)
        self.g = np.array(g, dtype=float)
        self.K = K
        self.D = D
        self.name = name
        n = self.p.shape[0]
        m = self.g.shape[0]
        if self.P.shape != (n, n):
            raise ValueError(f"P has shape {self.P.shape}, expected {(n, n)}")
        if self.H.shape != (m, n):
            raise ValueError(f"H has shape {self.H.shape}, expected {(m, n)}")
        if K.dim != m:
            raise ValueError(f"K has dim {K.dim}, expected {m}")
        if D.dim != n:
            raise ValueError(f"D has dim {D.dim}, expected {n}")
        if not K.is_cone:
            raise ValueError("K must be a cone")
        self.mu, self.lam = curvature_bounds(self.P)
        if isinstance(self.P, BlockOperator) and self.P.is_diagonal():
            self._pdiag = self.P.csr.diagonal().copy()
            self._pmat = None
        else:
            self._pdiag = None
            self._pmat = self.P.csr if isinstance(self.P, BlockOperator) else self.P
        self._h = self.H.csr
        self._ht = self.H.csr_t
        self._sigma_given = sigma is not None
        self.sigma = float(sigma) if sigma is not None else spectral_norm_sq(self.H, iters=SIGMA_POWER_ITERS)
        self.K_polar = geo.Polar(K)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def m(self) -> int:
        return self.g.shape[0]

    def Pz(self, z):
        if self._pdiag is not None:
            return _bc(self._pdiag, z) * z
        return csr_matmul(self._pmat, z) if sp.issparse(self._pmat) else self._pmat @ z

    def Hz(self, z):
        return csr_matmul(self._h, z)

    def Ht(self, w):
        return csr_matmul(self._ht, w)

    def residual(self, z):
        """``Hz - g``."""
        return self.Hz(z) - _bc(self.g, z)

    def grad(self, z):
        return self.Pz(z) + _bc(self.p, z)

    def f(self, z):
        return 0.5 * _cdot(z, self.Pz(z)) + _cdot(_bc(self.p, z), z)

    def feasibility(self, z):
        """``d_K(Hz - g)``."""
        return geo.dist_sq_half(self.K, self.residual(z))

    def __repr__(self):
        return f"ConicProblem(n={self.n}, m={self.m}, mu={self.mu:g}, lam={self.lam:g}, sigma={self.sigma:g})"


def _check_z(prob: ConicProblem, z):
    z = np.asarray(z, dtype=float)
    if z.shape[0] != prob.n:
        raise ValueError(f"expected leading dim {prob.n}, got {z.shape}")
    return z


def objective(prob: ConicProblem, z):
    return prob.f(_check_z(prob, z))


def gradient(prob: ConicProblem, z):
    return prob.grad(_check_z(prob, z))


def bregman(prob: ConicProblem, z, z_prime):
    """``f(z) - f(z') - <grad f(z'), z - z'>`` (equals ``0.5 ||z - z'||_P^2``)."""
    z, z_prime = _check_z(prob, z), _check_z(prob, z_prime)
    return prob.f(z) - prob.f(z_prime) - _cdot(prob.grad(z_prime), z - z_prime)


def lagrangian(prob: ConicProblem, z, w):
    z = _check_z(prob, z)
    w = np.asarray(w, dtype=float)
    return prob.f(z) + _cdot(prob.residual(z), w)


@dataclass(frozen=True)
class KKTResiduals:
    fixed_point: float
    feasibility: float
    complementarity: float
    polar_membership: float

    def as_dict(self) -> dict:
        return {
            "fixed_point": self.fixed_point,
            "feasibility": self.feasibility,
            "complementarity": self.complementarity,
            "polar_membership": self.polar_membership,
        }


@dataclass(frozen=True, eq=False)
class SaddleReference:
    z_star: np.ndarray
    w_star: np.ndarray
    residuals: KKTResiduals
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.linalg.norm(self.z_star) > 0:
            raise ValueError("reference z* must be nonzero (error metrics divide by ||z*||^2)")

    @property
    def z_norm_sq(self) -> float:
        return float(self.z_star @ self.z_star)

    def to_dict(self) -> dict:
        return {
            "z_star": self.z_star.tolist(),
            "w_star": self.w_star.tolist(),
            "residuals": self.residuals.as_dict(),
            "tolerances": dict(self.tolerances),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SaddleReference":
        return cls(np.array(d["z_star"], dtype=float), np.array(d["w_star"], dtype=float),
                   KKTResiduals(**d["residuals"]), dict(d.get("tolerances", {})))


def error_metrics(prob: ConicProblem, z, ref: SaddleReference):
    """Return ``(error_opt, error_fea)``, both normalized by ``||z*||^2``."""
    z = _check_z(prob, z)
    zs = _bc(ref.z_star, z)
    d = z - zs
    nz = ref.z_norm_sq
    return _cdot(d, d) / nz, prob.feasibility(z) / nz


def kkt_certificate(prob: ConicProblem, z, w, step_probe: float | None = None) -> KKTResiduals:
    """Residuals certifying ``(z, w)`` as a saddle point.

    fixed_point
        ``||z - proj_D[z - s (grad f(z) + H'w)]||`` with ``s = step_probe``
        (default ``1 / lam``).
    feasibility
        ``d_K(Hz - g)``.
    complementarity
        ``|<Hz - g, w>|``.
    polar_membership
        distance from ``w`` to the polar cone.
    """
    z = _check_z(prob, z)
    w = np.asarray(w, dtype=float)
    if step_probe is None:
        step_probe = 1.0 / prob.lam if prob.lam > 0 else 1.0
    if not step_probe > 0:
        raise ValueError("step_probe must be positive")
    moved = prob.D.project(z - step_probe * (prob.grad(z) + prob.Ht(w)))
    r = prob.residual(z)
    return KKTResiduals(
        fixed_point=float(np.linalg.norm(z - moved)),
        feasibility=float(geo.dist_sq_half(prob.K, r)),
        complementarity=float(abs(r @ w)),
        polar_membership=float(geo.distance(prob.K_polar, w)),
    )


# -- file format ---------------------------------------------------------------

def _matrix_to_dict(a) -> dict:
    if isinstance(a, BlockOperator):
        return {"kind": "block", **a.to_dict()}
    return {"kind": "dense", "data": np.asarray(a).tolist()}


def _matrix_from_dict(d, path):
    if not isinstance(d, dict) or "kind" not in d:
        raise FormatError(path, "expected a matrix record with a 'kind' field")
    if d["kind"] == "block":
        return BlockOperator.from_dict(d, path)
    if d["kind"] == "dense":
        if "data" not in d:
            raise FormatError(path, "missing field 'data'")
        try:
            a = np.array(d["data"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}.data", f"not a numeric matrix ({exc})") from exc
        if a.ndim != 2:
            raise FormatError(f"{path}.data", "expected a 2-D matrix")
        return a
    raise FormatError(f"{path}.kind", f"unknown matrix kind {d['kind']!r}")


def problem_to_dict(prob: ConicProblem) -> dict:
    out = {
        "format": "pipg-problem/1",
        "name": prob.name,
        "n": prob.n,
        "m": prob.m,
        "P": _matrix_to_dict(prob.P),
        "p": prob.p.tolist(),
        "H": _matrix_to_dict(prob.H),
        "g": prob.g.tolist(),
        "K": geo.set_to_dict(prob.K),
        "D": geo.set_to_dict(prob.D),
    }
    if prob._sigma_given:
        out["sigma"] = prob.sigma
    return out


def problem_from_dict(d, path: str = "$") -> ConicProblem:
    if not isinstance(d, dict):
        raise FormatError(path, "expected an object")
    for key in ("n", "m", "P", "p", "H", "g", "K", "D"):
        if key not in d:
            raise FormatError(path, f"missing field '{key}'")
    P = _matrix_from_dict(d["P"], f"{path}.P")
    H = _matrix_from_dict(d["H"], f"{path}.H")
    p = geo._vec(d["p"], f"{path}.p")
    g = geo._vec(d["g"], f"{path}.g")
    n, m = geo._int(d["n"], f"{path}.n"), geo._int(d["m"], f"{path}.m")
    if p.shape[0] != n:
        raise FormatError(f"{path}.p", f"length {p.shape[0]} does not match n={n}")
    if g.shape[0] != m:
        raise FormatError(f"{path}.g", f"length {g.shape[0]} does not match m={m}")
    K = geo.set_from_dict(d["K"], f"{path}.K")
    D = geo.set_from_dict(d["D"], f"{path}.D")
    sigma = d.get("sigma")
    try:
        return ConicProblem(P, p, H, g, K, D, sigma=sigma, name=str(d.get("name", "")))
    except ValueError as exc:
        raise FormatError(path, str(exc)) from exc


def save_problem(prob: ConicProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(prob), indent=1) + "\n", encoding="utf-8")


def load_problem(path) -> ConicProblem:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return problem_from_dict(data)

"""Linear MPC problems and their stacking into conic programs.

An :class:`OcpSpec` describes::

    minimize    0.5 sum_t ||x_{t+1} - xr_{t+1}||_Q^2 + ||u_t - ur_t||_R^2
    subject to  x_{t+1} = A x_t + B u_t + h
                ||u_{t+1} - u_t||_inf <= gamma
                C_t x_t - a_t >= 0,  x_t in X     (t = 1..tau)
                D_t u_t - b_t >= 0,  u_t in U     (t = 0..tau-1)

:func:`stack_ocp` turns it into a :class:`~pipg.problem.ConicProblem` over
``z = (x_1, ..., x_tau, u_0, ..., u_{tau-1})``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from .errors import FormatError
from .linalg import Block, BlockOperator, Identity, zoh_discretize
from .problem import ConicProblem

__all__ = [
    "OcpSpec",
    "ObstacleSpec",
    "QuadrotorParams",
    "stack_ocp",
    "rollout",
    "build_masses",
    "build_quadrotor",
    "linearize_obstacles",
    "quadrotor_reference",
    "tridiagonal_laplacian",
    "ocp_to_dict",
    "ocp_from_dict",
    "save_ocp",
    "load_ocp",
]


def _arr(a, ndim):
    out = np.array(a, dtype=float)
    if out.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {out.shape}")
    return out


@dataclass(eq=False)
class OcpSpec:
    """Time-invariant linear MPC problem (see module docstring).

    ``C``/``a`` and ``D``/``b`` are per-stage lists of length ``horizon`` or
    ``None`` when that family of stage constraints is absent. ``C[t-1]``
    constrains ``x_t``; ``D[t]`` constrains ``u_t``. ``gamma=None`` drops the
    input-rate rows.
    """

    horizon: int
    A: np.ndarray
    B: np.ndarray
    h: np.ndarray
    x0: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x_ref: np.ndarray
    u_ref: np.ndarray
    X: geo.ConvexSet
    U: geo.ConvexSet
    gamma: float | None = None
    C: list | None = None
    a: list | None = None
    D: list | None = None
    b: list | None = None
    name: str = ""

    def __post_init__(self):
        self.A = _arr(self.A, 2)
        self.B = _arr(self.B, 2)
        self.h = _arr(self.h, 1)
        self.x0 = _arr(self.x0, 1)
        self.Q = _arr(self.Q, 2)
        self.R = _arr(self.R, 2)
        self.x_ref = _arr(self.x_ref, 2)
        self.u_ref = _arr(self.u_ref, 2)
        for name in ("C", "D"):
            mats = getattr(self, name)
            if mats is not None:
                setattr(self, name, [_arr(m, 2) for m in mats])
        for name in ("a", "b"):
            vecs = getattr(self, name)
            if vecs is not None:
                setattr(self, name, [_arr(v, 1) for v in vecs])
        self.validate()

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    def validate(self):
        tau, nx, nu = self.horizon, self.nx, self.nu
        if tau < 1:
            raise ValueError("horizon must be >= 1")
        checks = [
            ("A", self.A.shape, (nx, nx)),
            ("B", self.B.shape, (nx, nu)),
            ("h", self.h.shape, (nx,)),
            ("x0", self.x0.shape, (nx,)),
            ("Q", self.Q.shape, (nx, nx)),
            ("R", self.R.shape, (nu, nu)),
            ("x_ref", self.x_ref.shape, (tau, nx)),
            ("u_ref", self.u_ref.shape, (tau, nu)),
        ]
        for name, got, want in checks:
            if got != want:
                raise ValueError(f"{name} has shape {got}, expected {want}")
        if self.X.dim != nx:
            raise ValueError(f"X has dim {self.X.dim}, expected {nx}")
        if self.U.dim != nu:
            raise ValueError(f"U has dim {self.U.dim}, expected {nu}")
        for w, label in ((self.Q, "Q"), (self.R, "R")):
            if np.max(np.abs(w - w.T)) > 1e-12 or np.linalg.eigvalsh(w)[0] <= 0:
                raise ValueError(f"{label} must be symmetric positive definite")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        for mats, vecs, width, label in ((self.C, self.a, nx, "C"), (self.D, self.b, nu, "D")):
            if (mats is None) != (vecs is None):
                raise ValueError(f"{label} and its offsets must both be given or both omitted")
            if mats is None:
                continue
            if len(mats) != tau or len(vecs) != tau:
                raise ValueError(f"{label} needs {tau} stages, got {len(mats)}/{len(vecs)}")
            rows = mats[0].shape[0]
            for t, (mt, vt) in enumerate(zip(mats, vecs)):
                if mt.shape != (rows, width) or vt.shape != (rows,):
                    raise ValueError(
                        f"stage {t}: {label} block has shape {mt.shape} / offset {vt.shape}, "
                        f"expected {(rows, width)} / {(rows,)}"
                    )


def stack_ocp(spec: OcpSpec, name: str | None = None) -> ConicProblem:
    """Stack an MPC problem into ``minimize f(z) s.t. Hz - g in K, z in D``.

    The linear term is ``p = -P z_ref`` so that ``grad f(z) = P (z - z_ref)``;
    the constant ``0.5 ||z_ref||_P^2`` is dropped.
    """
    spec.validate()
    tau, nx, nu = spec.horizon, spec.nx, spec.nu
    n_x, n_u = tau * nx, tau * nu
    n = n_x + n_u

    P = BlockOperator.block_diag([spec.Q] * tau + [spec.R] * tau)
    z_ref = np.concatenate([spec.x_ref.ravel(), spec.u_ref.ravel()])
    p = -P.apply(z_ref)

    blocks = [Block(0, 0, Identity(n_x))]
    for t in range(1, tau):
        blocks.append(Block(t * nx, (t - 1) * nx, spec.A, -1.0))
    for t in range(tau):
        blocks.append(Block(t * nx, n_x + t * nu, spec.B, -1.0))
    hbar = np.tile(spec.h, tau)
    hbar[:nx] += spec.A @ spec.x0
    g_parts = [hbar]
    row = n_x

    if spec.gamma is not None and tau >= 2 and nu > 0:
        k = (tau - 1) * nu
        for sign in (1.0, -1.0):
            blocks.append(Block(row, n_x, Identity(k), sign))
            blocks.append(Block(row, n_x + nu, Identity(k), -sign))
            g_parts.append(np.full(k, -spec.gamma))
            row += k

    if spec.C is not None:
        for t, ct in enumerate(spec.C):
            blocks.append(Block(row, t * nx, ct))
            row += ct.shape[0]
        g_parts.append(np.concatenate(spec.a))
    if spec.D is not None:
        for t, dt in enumerate(spec.D):
            blocks.append(Block(row, n_x + t * nu, dt))
            row += dt.shape[0]
        g_parts.append(np.concatenate(spec.b))

    m = row
    H = BlockOperator(m, n, blocks)
    g = np.concatenate(g_parts)
    K = geo.cones_product([geo.Zero(n_x), geo.NonnegOrthant(m - n_x)])
    D = geo.Cartesian(tuple([spec.X] * tau + [spec.U] * tau))
    return ConicProblem(P, p, H, g, K, D, name=spec.name if name is None else name)


def rollout(spec: OcpSpec, u) -> np.ndarray:
    """Simulate the dynamics from ``x0`` and return the stacked ``z``."""
    u = np.asarray(u, dtype=float).reshape(spec.horizon, spec.nu)
    xs, x = [], spec.x0
    for t in range(spec.horizon):
        x = spec.A @ x + spec.B @ u[t] + spec.h
        xs.append(x)
    return np.concatenate([np.concatenate(xs), u.ravel()])


def tridiagonal_laplacian(N: int) -> np.ndarray:
    """Symmetric tridiagonal matrix with 2 on the diagonal and -1 off it."""
    return 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)


def build_masses(N: int = 4, horizon: int = 30, dt: float = 0.25, gamma: float = 0.5,
                 delta1: float = 2.0, delta2: float = 2.0, rho: float = 2.0,
                 Q=None, R=None, x_ref=None, u_ref=None) -> OcpSpec:
    """Chain of ``N`` unit masses joined by unit springs to each other and the walls."""
    L = tridiagonal_laplacian(N)
    a_c = np.block([[np.zeros((N, N)), np.eye(N)], [-L, np.zeros((N, N))]])
    b_c = np.vstack([np.zeros((N, N)), np.eye(N)])
    A, B, h = zoh_discretize(a_c, b_c, np.zeros(2 * N), dt)
    if x_ref is None:
        x_ref = np.tile(np.concatenate([np.ones(N), np.zeros(N)]), (horizon, 1))
    if u_ref is None:
        u_ref = np.zeros((horizon, N))
    X = geo.Cartesian((geo.InfBall(N, delta1), geo.InfBall(N, delta2)))
    return OcpSpec(
        horizon=horizon, A=A, B=B, h=h, x0=np.zeros(2 * N),
        Q=np.eye(2 * N) if Q is None else Q, R=np.eye(N) if R is None else R,
        x_ref=x_ref, u_ref=u_ref, X=X, U=geo.InfBall(N, rho), gamma=gamma,
        name="masses",
    )


@dataclass
class QuadrotorParams:
    mass: float = 0.35
    gravity: float = 9.8
    horizon: int = 30
    dt: float = 0.25
    gamma: float = 3.0
    half_angle: float = math.pi / 4
    delta1: float = 3.0
    delta2: float = 5.0
    rho1: float = 5.0
    rho2: float = 2.0
    Q: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1, 1, 2.5, 2.5, 2.5]))
    R: np.ndarray = field(default_factory=lambda: 0.5 * np.eye(3))
    start: tuple = (-1.5, -2.5, 0.0)
    target: tuple = (2.5, 1.5, 0.0)


@dataclass(eq=False)
class ObstacleSpec:
    """Vertical cylinders ``||M x - center|| >= radius`` with ``M = [I_2 0]``."""

    centers: np.ndarray = field(
        default_factory=lambda: np.array([[-1.5, -1.5], [1.2, -1.2], [1.5, 1.5]]))
    radii: np.ndarray = field(default_factory=lambda: np.array([0.8, 1.2, 0.8]))

    def __post_init__(self):
        self.centers = np.atleast_2d(np.array(self.centers, dtype=float))
        self.radii = np.atleast_1d(np.array(self.radii, dtype=float))
        if self.centers.shape != (self.radii.shape[0], 2):
            raise ValueError("centers must have shape (k, 2) matching k radii")
        if np.any(self.radii <= 0):
            raise ValueError("obstacle radii must be positive")

    @property
    def selector(self) -> np.ndarray:
        return np.hstack([np.eye(2), np.zeros((2, 4))])


def quadrotor_reference(params: QuadrotorParams) -> np.ndarray:
    """Straight-line positions ``r_0, ..., r_tau`` from start to target."""
    tau = params.horizon
    s = np.arange(tau + 1)[:, None] / tau
    return s * np.asarray(params.target) + (1 - s) * np.asarray(params.start)


def linearize_obstacles(obstacles: ObstacleSpec, r_hat) -> tuple[np.ndarray, np.ndarray]:
    """Halfspace rows ``<c^i, x> >= a^i`` replacing the cylinder constraints at ``r_hat``.

    If ``r_hat`` (horizontal position) lies inside an obstacle, it is pushed
    radially to that obstacle's boundary first; every row is then built at the
    resulting point.
    """
    r_hat = np.asarray(r_hat, dtype=float)[:2]
    diffs = r_hat - obstacles.centers
    dists = np.linalg.norm(diffs, axis=1)
    if np.any(dists == 0):
        raise ValueError("reference position coincides with an obstacle center")
    r_tilde = r_hat
    inside = np.nonzero(dists < obstacles.radii)[0]
    if inside.size:
        i = inside[0]
        r_tilde = obstacles.centers[i] + obstacles.radii[i] / dists[i] * diffs[i]
    M = obstacles.selector
    C = 2.0 * (r_tilde - obstacles.centers) @ M
    a = r_tilde @ r_tilde + obstacles.radii ** 2 - np.sum(obstacles.centers ** 2, axis=1)
    return C, a


def build_quadrotor(params: QuadrotorParams | None = None,
                    obstacles: ObstacleSpec | None = None,
                    x_ref=None, u_ref=None, x0=None) -> OcpSpec:
    """3-DoF point-mass quadrotor flying past cylindrical obstacles."""
    params = params or QuadrotorParams()
    obstacles = obstacles or ObstacleSpec()
    tau = params.horizon
    a_c = np.block([[np.zeros((3, 3)), np.eye(3)], [np.zeros((3, 3)), np.zeros((3, 3))]])
    b_c = np.vstack([np.zeros((3, 3)), np.eye(3)]) / params.mass
    h_c = np.concatenate([np.zeros(5), [-params.gravity]])
    A, B, h = zoh_discretize(a_c, b_c, h_c, params.dt)

    positions = quadrotor_reference(params)
    if x_ref is None:
        x_ref = np.hstack([positions[1:], np.zeros((tau, 3))])
    if u_ref is None:
        u_ref = np.zeros((tau, 3))
    if x0 is None:
        x0 = np.concatenate([positions[0], np.zeros(3)])
    x_ref = np.asarray(x_ref, dtype=float)

    C, a = [], []
    for t in range(tau):
        ct, at = linearize_obstacles(obstacles, x_ref[t, :2])
        C.append(ct)
        a.append(at)
    e = np.array([[0.0, 0.0, 1.0]])
    U = geo.ConeIntersectBall(geo.IceCream(3, params.half_angle, np.array([0.0, 0, 1])), params.rho1)
    X = geo.Cartesian((geo.InfBall(3, params.delta1), geo.Ball(3, params.delta2)))
    return OcpSpec(
        horizon=tau, A=A, B=B, h=h, x0=x0, Q=params.Q, R=params.R,
        x_ref=x_ref, u_ref=u_ref, X=X, U=U, gamma=params.gamma,
        C=C, a=a, D=[e] * tau, b=[np.array([params.rho2])] * tau,
        name="quadrotor",
    )


# -- file format ---------------------------------------------------------------

def ocp_to_dict(spec: OcpSpec) -> dict:
    def lst(v):
        return None if v is None else [np.asarray(e).tolist() for e in v]

    return {
        "format": "pipg-ocp/1",
        "name": spec.name,
        "horizon": spec.horizon,
        "A": spec.A.tolist(), "B": spec.B.tolist(), "h": spec.h.tolist(),
        "x0": spec.x0.tolist(), "Q": spec.Q.tolist(), "R": spec.R.tolist(),
        "x_ref": spec.x_ref.tolist(), "u_ref": spec.u_ref.tolist(),
        "gamma": spec.gamma,
        "C": lst(spec.C), "a": lst(spec.a), "D": lst(spec.D), "b": lst(spec.b),
        "X": geo.set_to_dict(spec.X), "U": geo.set_to_dict(spec.U),
    }


def ocp_from_dict(d, path: str = "$") -> OcpSpec:
    if not isinstance(d, dict):
        raise FormatError(path, "expected an object")
    required = ("horizon", "A", "B", "h", "x0", "Q", "R", "x_ref", "u_ref", "X", "U")
    for key in required:
        if key not in d:
            raise FormatError(path, f"missing field '{key}'")
    kwargs = {}
    for key in ("A", "B", "h", "x0", "Q", "R", "x_ref", "u_ref"):
        try:
            kwargs[key] = np.array(d[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}.{key}", f"not numeric ({exc})") from exc
    for key in ("C", "a", "D", "b"):
        kwargs[key] = d.get(key)
    kwargs["X"] = geo.set_from_dict(d["X"], f"{path}.X")
    kwargs["U"] = geo.set_from_dict(d["U"], f"{path}.U")
    try:
        return OcpSpec(horizon=geo._int(d["horizon"], f"{path}.horizon"), gamma=d.get("gamma"),
                       name=str(d.get("name", "")), **kwargs)
    except ValueError as exc:
        raise FormatError(path, str(exc)) from exc


def save_ocp(spec: OcpSpec, path) -> None:
    Path(path).write_text(json.dumps(ocp_to_dict(spec), indent=1) + "\n", encoding="utf-8")


def load_ocp(path) -> OcpSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return ocp_from_dict(data)

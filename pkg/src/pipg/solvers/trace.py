"""Solver configuration, traces, and the shared logging machinery.

All solvers iterate on ``(n, T)`` arrays: ``T`` independent trials advance in
lock-step. Histories in :class:`SolveTrace` are ``(L, T)`` arrays over the
``L`` logged iterations.

Indexing follows the algorithms: iterate ``z^1`` is the initialization and
``max_iters = k`` runs the loop for ``j = 1..k-1``. At logged row ``j`` the
error metrics refer to ``z^j`` and the ergodic quantities to averages over
the ``j - 1`` completed loop steps (NaN on row 1).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo
from ..problem import ConicProblem, SaddleReference
from . import certificates as cert


@dataclass
class SolverConfig:
    max_iters: int = 1000
    log_stride: int | None = None
    restart_period: int = 0
    inner_tolerance: float = 1e-8
    inner_max_iters: int = 500
    seed: int = 0
    trials: int = 1
    first_trial: int = 0
    z1: np.ndarray | None = None
    v1: np.ndarray | None = None
    y1: np.ndarray | None = None
    reference: SaddleReference | None = None
    store_iterates: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restart_period < 0:
            raise ValueError("restart_period must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.first_trial < 0:
            raise ValueError("first_trial must be >= 0")

    @property
    def stride(self) -> int:
        return self.log_stride or max(1, math.ceil(self.max_iters / 1000))

    def is_logged(self, j: int) -> bool:
        return j == 1 or j == self.max_iters or j % self.stride == 0


def initial_draws(prob: ConicProblem, config: SolverConfig):
    """Seeded standard-normal ``(z, v, y)`` draws, one column per trial.

    Trial ``t`` uses ``numpy.random.default_rng([seed, t])`` and draws ``z``
    (``n``), then ``v`` (``m``), then ``y`` (``m``). Columns cover trials
    ``first_trial .. first_trial + trials - 1``, so any slice of a batch can
    be rerun on its own.
    """
    T = config.trials
    z = np.empty((prob.n, T))
    v = np.empty((prob.m, T))
    y = np.empty((prob.m, T))
    for t in range(T):
        rng = np.random.default_rng([config.seed, config.first_trial + t])
        z[:, t] = rng.standard_normal(prob.n)
        v[:, t] = rng.standard_normal(prob.m)
        y[:, t] = rng.standard_normal(prob.m)

    def given(arr, dim):
        if arr is None:
            return None
        arr = np.asarray(arr, dtype=float)
        arr = arr.reshape(dim, -1)
        if arr.shape[1] == 1 and T > 1:
            arr = np.repeat(arr, T, axis=1)
        if arr.shape != (dim, T):
            raise ValueError(f"initial value has shape {arr.shape}, expected ({dim}, {T})")
        return arr.copy()

    z = given(config.z1, prob.n) if config.z1 is not None else z
    v = given(config.v1, prob.m) if config.v1 is not None else v
    y = given(config.y1, prob.m) if config.y1 is not None else y
    return z, v, y


class Ergodic:
    """Running weighted sums for ergodic averages.

    ``uniform`` weights every term by 1. ``cubic`` weights ``z^j`` by
    ``(j+1)(j+2)`` and ``z^{j+1}``, ``w^{j+1}`` by ``(j+2)``; the running
    weight totals equal ``k(k^2+6k+11)/3`` and ``k(k+5)/2``.
    """

    def __init__(self, kind: str):
        self.kind = kind
        self.reset()

    def reset(self):
        self.k = 0
        self.s_tilde = self.s_zbar = self.s_wbar = None
        self.c_tilde = self.c_bar = 0.0

    def add(self, j: int, z_j, z_next, w_next):
        if self.kind == "cubic":
            a, b = float((j + 1) * (j + 2)), float(j + 2)
        else:
            a = b = 1.0
        if self.s_tilde is None:
            self.s_tilde = a * z_j
            self.s_zbar = b * z_next
            self.s_wbar = b * w_next if w_next is not None else None
        else:
            self.s_tilde += a * z_j
            self.s_zbar += b * z_next
            if w_next is not None:
                self.s_wbar += b * w_next
        self.c_tilde += a
        self.c_bar += b
        self.k += 1

    def averages(self):
        if self.k == 0:
            return None, None, None
        wbar = self.s_wbar / self.c_bar if self.s_wbar is not None else None
        return self.s_tilde / self.c_tilde, self.s_zbar / self.c_bar, wbar


@dataclass
class SolveTrace:
    method: str
    schedule: str
    iters: np.ndarray
    ergodic_k: np.ndarray
    feas: np.ndarray
    erg_feas: np.ndarray
    error_opt: np.ndarray | None
    error_fea: np.ndarray | None
    cert_lhs_fea: np.ndarray | None
    cert_rhs_fea: np.ndarray | None
    cert_lhs_gap: np.ndarray | None
    cert_rhs_gap: np.ndarray | None
    z: np.ndarray
    w: np.ndarray | None
    v: np.ndarray | None
    z1: np.ndarray
    v1: np.ndarray | None
    z_tilde: np.ndarray | None
    z_bar: np.ndarray | None
    w_bar: np.ndarray | None
    n_iters: int
    wall_time: float
    restart_epochs: list = field(default_factory=list)
    inner_iters: np.ndarray | None = None
    inner_unconverged: np.ndarray | None = None
    stored: dict | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return self.z.shape[1]

    def column(self, name: str, t: int = 0) -> np.ndarray:
        arr = getattr(self, name)
        return None if arr is None else arr[..., t]


class Recorder:
    """Collects histories on the logging grid while a solve runs."""

    def __init__(self, prob: ConicProblem, config: SolverConfig, method: str,
                 schedule=None, certify: bool = False):
        self.prob = prob
        self.config = config
        self.method = method
        self.schedule = schedule
        self.ref = config.reference
        self.certify = bool(certify and self.ref is not None)
        self.rows: dict[str, list] = {k: [] for k in (
            "iters", "ergodic_k", "feas", "erg_feas", "error_opt", "error_fea",
            "cert_lhs_fea", "cert_rhs_fea", "cert_lhs_gap", "cert_rhs_gap")}
        self.stored = {"z": [], "w": [], "v": [], "z_tilde": [], "z_bar": [], "w_bar": []} \
            if config.store_iterates else None
        self.t0 = time.perf_counter()
        self.restarts: list[int] = []
        if self.certify:
            ref = self.ref
            self._hz_star = prob.residual(ref.z_star)
            self._ht_wstar = prob.Ht(ref.w_star)
            self._f_star = float(prob.f(ref.z_star))
            self._g_wstar = float(prob.g @ ref.w_star)

    def record(self, j: int, z, hz, w, v, erg: Ergodic, z1=None, v1=None):
        prob, T = self.prob, z.shape[1]
        nan = np.full(T, np.nan)
        r = hz - prob.g[:, None]
        feas = geo.dist_sq_half(prob.K, r)
        self.rows["iters"].append(j)
        self.rows["ergodic_k"].append(erg.k)
        self.rows["feas"].append(feas)
        zt, zb, wb = erg.averages()
        if zt is not None:
            self.rows["erg_feas"].append(prob.feasibility(zt))
        else:
            self.rows["erg_feas"].append(nan)
        if self.ref is not None:
            d = z - self.ref.z_star[:, None]
            nz = self.ref.z_norm_sq
            self.rows["error_opt"].append(np.sum(d * d, axis=0) / nz)
            self.rows["error_fea"].append(feas / nz)
        if self.certify and zt is not None and wb is not None:
            vals = cert.certificate_values(
                prob, self.ref, self.schedule, erg.k, z1, v1, zt, zb, wb,
                fea_lhs=prob.feasibility(zt), f_star=self._f_star,
                hz_star_res=self._hz_star, ht_wstar=self._ht_wstar, g_wstar=self._g_wstar)
            for key, val in zip(("cert_lhs_fea", "cert_rhs_fea", "cert_lhs_gap", "cert_rhs_gap"), vals):
                self.rows[key].append(val)
        elif self.certify:
            for key in ("cert_lhs_fea", "cert_rhs_fea", "cert_lhs_gap", "cert_rhs_gap"):
                self.rows[key].append(nan)
        if self.stored is not None:
            self.stored["z"].append(z.copy())
            self.stored["w"].append(None if w is None else w.copy())
            self.stored["v"].append(None if v is None else v.copy())
            self.stored["z_tilde"].append(None if zt is None else zt.copy())
            self.stored["z_bar"].append(None if zb is None else zb.copy())
            self.stored["w_bar"].append(None if wb is None else wb.copy())

    def finish(self, *, z, w, v, z1, v1, erg: Ergodic, n_iters: int, **extra) -> SolveTrace:
        rows = self.rows

        def stack(key):
            return np.array(rows[key]) if rows[key] else None

        zt, zb, wb = erg.averages()
        return SolveTrace(
            method=self.method,
            schedule=getattr(self.schedule, "name", str(self.schedule)),
            iters=np.array(rows["iters"], dtype=int),
            ergodic_k=np.array(rows["ergodic_k"], dtype=int),
            feas=stack("feas"),
            erg_feas=stack("erg_feas"),
            error_opt=stack("error_opt"),
            error_fea=stack("error_fea"),
            cert_lhs_fea=stack("cert_lhs_fea"),
            cert_rhs_fea=stack("cert_rhs_fea"),
            cert_lhs_gap=stack("cert_lhs_gap"),
            cert_rhs_gap=stack("cert_rhs_gap"),
            z=z, w=w, v=v, z1=z1, v1=v1,
            z_tilde=zt, z_bar=zb, w_bar=wb,
            n_iters=n_iters,
            wall_time=time.perf_counter() - self.t0,
            restart_epochs=list(self.restarts),
            stored=self.stored,
            **extra,
        )

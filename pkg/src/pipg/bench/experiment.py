"""Randomized multi-trial comparisons of the solvers.

One experiment runs every requested solver on one problem for ``trials``
seeded initializations, sharing a single certified reference. Trials run in
batches of columns; a batch that raises is retried trial by trial so one
failing initialization does not take the others down with it.

Outputs (all deterministic for a fixed configuration):

``<series>.csv``
    one row per logged iteration and trial: iter, trial, errorOpt, errorFea
    and the four certificate columns (empty where they do not apply).
``envelope.csv``
    min/median/max of errorOpt and errorFea across trials per logged iteration.
``errorOpt.svg``, ``errorFea.svg``
    log-log envelope plots.
``reference.json``, ``summary.json``
    the reference bundle and per-series statistics.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..problem import ConicProblem, load_problem
from ..solvers import (
    SolverConfig,
    admm_solve,
    pdhg_const_solve,
    pdhg_varying_solve,
    pipg_solve,
    pipgeq_solve,
    restart_wrap,
)
from .builtins import BUILTINS, builtin_problem
from .plot import envelope_svg
from .reference import ReferenceBundle, compute_reference

SOLVERS = ("pipg", "admm", "pipgeq", "pdhg", "pdhg-acc")
CSV_COLUMNS = ("iter", "trial", "errorOpt", "errorFea",
               "certLhsFea", "certRhsFea", "certLhsGap", "certRhsGap")
_TRACE_FIELDS = ("error_opt", "error_fea", "cert_lhs_fea", "cert_rhs_fea",
                 "cert_lhs_gap", "cert_rhs_gap")

# ADMM's inner loop is warm-started from the previous outer iterate, so a short
# cap keeps long benchmark runs affordable; see the decisions ledger.
DEFAULT_OPTIONS = {"admm": {"inner_max_iters": 10}}


@dataclass
class ExperimentConfig:
    problem: str = "masses"
    solvers: tuple = SOLVERS
    options: dict = field(default_factory=dict)
    trials: int = 100
    seed: int = 0
    max_iters: int = 100_000
    out_dir: str | os.PathLike | None = None
    restarts: tuple = (100, 1000)
    batch: int = 20
    reference: ReferenceBundle | None = None
    reference_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.solvers:
            raise ValueError("solver list is empty")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ValueError(f"unknown solver(s) {unknown}; choose from {', '.join(SOLVERS)}")
        if any(int(p) <= 0 for p in self.restarts):
            raise ValueError("restart periods must be positive")
        self.batch = max(1, int(self.batch))


@dataclass
class SeriesResult:
    name: str
    solver: str
    iters: np.ndarray
    data: dict
    failures: dict
    inner_iters: np.ndarray | None = None
    inner_unconverged: np.ndarray | None = None
    wall_time: float = 0.0

    def median_at(self, key: str, k: int) -> float:
        """Median of ``key`` across trials at logged iteration ``k``."""
        rows = np.nonzero(self.iters == k)[0]
        if rows.size == 0:
            raise KeyError(f"iteration {k} is not on the logging grid")
        return float(np.nanmedian(self.data[key][rows[0]]))

    def final_median(self, key: str) -> float:
        return float(np.nanmedian(self.data[key][-1]))


@dataclass
class ExperimentResult:
    problem: ConicProblem
    reference: ReferenceBundle
    series: dict
    files: list

    def __getitem__(self, name: str) -> SeriesResult:
        return self.series[name]


def load_source(name_or_path: str) -> ConicProblem:
    """A builtin name or a problem file."""
    if name_or_path in BUILTINS:
        return builtin_problem(name_or_path)
    return load_problem(name_or_path)


def solver_runs(cfg: ExperimentConfig) -> list:
    """``(series name, solver name, callable(prob, config), options)`` per series."""
    runs = []
    for s in cfg.solvers:
        opts = {**DEFAULT_OPTIONS.get(s, {}), **cfg.options.get(s, {})}
        if s == "pipg":
            runs.append(("pipg", s, pipg_solve, opts))
            for p in cfg.restarts:
                runs.append((f"pipg-restart{int(p)}", s, restart_wrap(pipg_solve, int(p)), opts))
        elif s == "admm":
            runs.append((s, s, admm_solve, opts))
        elif s == "pipgeq":
            runs.append((s, s, pipgeq_solve, opts))
        elif s == "pdhg":
            runs.append((s, s, pdhg_const_solve, opts))
        else:
            runs.append((s, s, pdhg_varying_solve, opts))
    return runs


_CONFIG_KEYS = {"inner_tolerance", "inner_max_iters", "log_stride"}


def _call(fn, prob, opts, config):
    kwargs = {k: v for k, v in opts.items() if k not in _CONFIG_KEYS}
    return fn(prob, config=config, **kwargs)


def _run_series(prob, ref, cfg, fn, opts) -> tuple:
    base = {k: v for k, v in opts.items() if k in _CONFIG_KEYS}
    T = cfg.trials
    columns: dict = {}
    failures: dict = {}
    inner = np.zeros(T, dtype=int)
    unconv = np.zeros(T, dtype=int)
    has_inner = False
    iters = None
    wall = 0.0

    def config(first, count):
        return SolverConfig(max_iters=cfg.max_iters, seed=cfg.seed, trials=count,
                            first_trial=first, reference=ref.reference, **base)

    def take(tr, first):
        nonlocal iters, has_inner, wall
        iters = tr.iters
        wall += tr.wall_time
        for key in _TRACE_FIELDS:
            arr = getattr(tr, key)
            for t in range(tr.trials):
                columns.setdefault(key, {})[first + t] = None if arr is None else arr[:, t]
        if tr.inner_iters is not None:
            has_inner = True
            inner[first:first + tr.trials] = tr.inner_iters
            unconv[first:first + tr.trials] = tr.inner_unconverged

    for first in range(0, T, cfg.batch):
        count = min(cfg.batch, T - first)
        try:
            take(_call(fn, prob, opts, config(first, count)), first)
        except Exception:
            for t in range(first, first + count):
                try:
                    take(_call(fn, prob, opts, config(t, 1)), t)
                except Exception as exc:  # recorded, the experiment continues
                    failures[t] = f"{type(exc).__name__}: {exc}"
    if iters is None:
        iters = np.array([], dtype=int)
    L = len(iters)
    data = {}
    for key in _TRACE_FIELDS:
        arr = np.full((L, T), np.nan)
        for t, col in columns.get(key, {}).items():
            if col is not None:
                arr[:, t] = col
        data[key] = arr
    return iters, data, failures, (inner if has_inner else None), (unconv if has_inner else None), wall


def format_number(v) -> str:
    """Full-precision decimal; empty for NaN or missing."""
    return "" if not np.isfinite(v) else repr(float(v))


def write_series_csv(path: Path, res: SeriesResult) -> None:
    keys = _TRACE_FIELDS
    T = res.data["error_opt"].shape[1]
    ok = [t for t in range(T) if t not in res.failures]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row, it in enumerate(res.iters):
            for t in ok:
                w.writerow([int(it), t] + [format_number(res.data[k][row, t]) for k in keys])


def _envelope(arr):
    # all-NaN rows (no ergodic average yet, failed trials) stay NaN
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmin(arr, axis=1), np.nanmedian(arr, axis=1), np.nanmax(arr, axis=1)


def write_envelope_csv(path: Path, series: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["solver", "iter", "errorOpt_min", "errorOpt_median", "errorOpt_max",
                    "errorFea_min", "errorFea_median", "errorFea_max"])
        for name, res in series.items():
            eo, ef = _envelope(res.data["error_opt"]), _envelope(res.data["error_fea"])
            for row, it in enumerate(res.iters):
                w.writerow([name, int(it)] + [format_number(a[row]) for a in eo] + [format_number(a[row]) for a in ef])


def _summary(cfg, prob, ref, series) -> dict:
    out = {"problem": prob.name or str(cfg.problem), "n": prob.n, "m": prob.m,
           "mu": prob.mu, "lam": prob.lam, "sigma": prob.sigma,
           "trials": cfg.trials, "seed": cfg.seed, "max_iters": cfg.max_iters,
           "reference": {"iterations": ref.iterations, "schedule": ref.schedule,
                         "residuals": ref.residuals.as_dict()},
           "series": {}}
    for name, res in series.items():
        entry = {"solver": res.solver,
                 "failures": {str(k): v for k, v in sorted(res.failures.items())}}
        if len(res.iters):
            entry["final_median_errorOpt"] = _json_num(res.final_median("error_opt"))
            entry["final_median_errorFea"] = _json_num(res.final_median("error_fea"))
        if 10_000 in set(res.iters.tolist()):
            entry["median_errorOpt_at_1e4"] = _json_num(res.median_at("error_opt", 10_000))
            entry["median_errorFea_at_1e4"] = _json_num(res.median_at("error_fea", 10_000))
        if res.inner_iters is not None:
            entry["mean_inner_iters_per_step"] = float(res.inner_iters.mean() / max(1, cfg.max_iters - 1))
            entry["inner_unconverged_steps"] = int(res.inner_unconverged.sum())
        out["series"][name] = entry
    return out


def _json_num(v):
    return None if not math.isfinite(v) else v


def run_experiment(cfg: ExperimentConfig, prob: ConicProblem | None = None,
                   log=None) -> ExperimentResult:
    """Run all series of ``cfg`` and write the result files to ``cfg.out_dir``.

    ``prob`` overrides ``cfg.problem``. ``log`` is an optional callable
    receiving one progress line per finished series.
    """
    out = Path(cfg.out_dir) if cfg.out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    prob = prob if prob is not None else load_source(cfg.problem)
    ref = cfg.reference or compute_reference(prob, seed=cfg.reference_seed)
    series = {}
    for name, solver, fn, opts in solver_runs(cfg):
        iters, data, failures, inner, unconv, wall = _run_series(prob, ref, cfg, fn, opts)
        series[name] = SeriesResult(name, solver, iters, data, failures, inner, unconv, wall)
        if log is not None:
            log(f"{name}: {wall:.1f}s, {len(failures)} failed trial(s)")
    files = []
    if out is not None:
        for name, res in series.items():
            path = out / f"{name}.csv"
            write_series_csv(path, res)
            files.append(path)
        path = out / "envelope.csv"
        write_envelope_csv(path, series)
        files.append(path)
        for key, label in (("error_opt", "errorOpt"), ("error_fea", "errorFea")):
            env = {name: (res.iters,) + _envelope(res.data[key]) for name, res in series.items()}
            path = out / f"{label}.svg"
            path.write_text(envelope_svg(env, f"{prob.name or cfg.problem}: {label}", label),
                            encoding="utf-8")
            files.append(path)
        path = out / "reference.json"
        path.write_text(json.dumps(ref.to_dict(), indent=1) + "\n", encoding="utf-8")
        files.append(path)
        path = out / "summary.json"
        path.write_text(json.dumps(_summary(cfg, prob, ref, series), indent=1) + "\n",
                        encoding="utf-8")
        files.append(path)
    return ExperimentResult(prob, ref, series, files)

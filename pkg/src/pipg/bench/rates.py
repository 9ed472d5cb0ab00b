"""Empirical convergence rates from traces."""

from __future__ import annotations

import numpy as np

_ERGODIC = {"erg_feas"}


def fit_slope(k, values, k_range) -> float:
    """Least-squares slope of ``log(values)`` against ``log(k)`` for ``k`` in ``k_range``.

    Points with non-positive or non-finite values are dropped.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = k_range
    keep = (k >= lo) & (k <= hi) & np.isfinite(v) & (v > 0)
    if np.count_nonzero(keep) < 2:
        raise ValueError(f"need at least two positive samples in k range {k_range}")
    slope, _ = np.polyfit(np.log(k[keep]), np.log(v[keep]), 1)
    return float(slope)


def rate_fit(trace, metric: str = "erg_feas", k_range=(1e2, 1e4), trial: int | None = None) -> float:
    """Slope of ``metric`` on a log-log scale.

    Ergodic metrics are indexed by the number of averaged steps, the others
    by iteration. With several trials the fit uses the per-row median unless
    ``trial`` picks one column.
    """
    values = getattr(trace, metric)
    if values is None:
        raise ValueError(f"trace has no {metric!r} history")
    values = values[:, trial] if trial is not None else np.median(values, axis=1)
    k = trace.ergodic_k if metric in _ERGODIC else trace.iters
    return fit_slope(k, values, k_range)

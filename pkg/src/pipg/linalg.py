"""Dense and block-structured linear algebra.

Matrices are plain 2-D numpy arrays. :class:`BlockOperator` places dense or
identity blocks at offsets inside a larger ``rows x cols`` operator; its
products run through a cached CSR matrix so that stacked optimal-control
operators with mostly-zero structure stay cheap to apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numba
import numpy as np
import scipy.sparse as sp

from .errors import FormatError

__all__ = [
    "Identity",
    "Block",
    "BlockOperator",
    "csr_matmul",
    "apply",
    "apply_transpose",
    "to_dense",
    "spectral_norm_sq",
    "curvature_bounds",
    "expm",
    "zoh_discretize",
]

SIGMA_INFLATION = 1e-3


@numba.njit(cache=True)
def _csr_mm(indptr, indices, data, x, out):
    rows, cols = out.shape
    for i in range(rows):
        for t in range(cols):
            out[i, t] = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            a = data[k]
            j = indices[k]
            for t in range(cols):
                out[i, t] += a * x[j, t]
    return out


def csr_matmul(a: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    """``a @ x`` for a CSR matrix and a 1-D or C-ordered 2-D float array.

    Batched columns are the common case here, and scipy's generic kernel for
    that shape is several times slower than this row-major loop.
    """
    if x.dtype != np.float64 or x.ndim > 2:
        return a @ x
    x2 = np.ascontiguousarray(x.reshape(x.shape[0], -1))
    out = np.empty((a.shape[0], x2.shape[1]))
    _csr_mm(a.indptr, a.indices, a.data, x2, out)
    return out.reshape((a.shape[0],) + x.shape[1:])


@dataclass(frozen=True)
class Identity:
    dim: int


@dataclass(frozen=True, eq=False)
class Block:
    row: int
    col: int
    data: Union[np.ndarray, Identity]
    scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.data, Identity):
            arr = np.array(self.data, dtype=float)
            if arr.ndim != 2:
                raise ValueError("dense block must be 2-D")
            arr.setflags(write=False)
            object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        if isinstance(self.data, Identity):
            return self.data.dim, self.data.dim
        return self.data.shape

    def to_sparse(self) -> sp.spmatrix:
        if isinstance(self.data, Identity):
            return self.scale * sp.identity(self.data.dim, format="coo")
        return sp.coo_matrix(self.scale * self.data)


class BlockOperator:
    """A ``rows x cols`` linear map assembled from placed blocks.

    Overlapping blocks add. Products accept ``(cols,)`` vectors or
    ``(cols, T)`` batches.
    """

    def __init__(self, rows: int, cols: int, blocks=()):
        self.rows = int(rows)
        self.cols = int(cols)
        self.blocks = tuple(blocks)
        for i, b in enumerate(self.blocks):
            r, c = b.shape
            if b.row < 0 or b.col < 0 or b.row + r > self.rows or b.col + c > self.cols:
                raise ValueError(
                    f"block {i} of shape {(r, c)} at ({b.row}, {b.col}) "
                    f"exceeds operator shape {(self.rows, self.cols)}"
                )

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @classmethod
    def from_dense(cls, a) -> "BlockOperator":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls(a.shape[0], a.shape[1], [Block(0, 0, a)])

    @classmethod
    def block_diag(cls, mats) -> "BlockOperator":
        blocks, r, c = [], 0, 0
        for m in mats:
            b = Block(r, c, m) if not isinstance(m, Block) else m
            blocks.append(Block(r, c, b.data, b.scale))
            r += b.shape[0]
            c += b.shape[1]
        return cls(r, c, blocks)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        acc = sp.coo_matrix((self.rows, self.cols))
        parts = []
        for b in self.blocks:
            s = b.to_sparse()
            parts.append(sp.coo_matrix((s.data, (s.row + b.row, s.col + b.col)), shape=self.shape))
        if parts:
            acc = sum(parts[1:], parts[0])
        out = sp.csr_matrix(acc)
        out.sum_duplicates()
        out.eliminate_zeros()
        return out

    @cached_property
    def csr_t(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.csr.T)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.cols:
            raise ValueError(f"apply: expected leading dim {self.cols}, got {x.shape}")
        return csr_matmul(self.csr, x)

    def apply_transpose(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.rows:
            raise ValueError(f"apply_transpose: expected leading dim {self.rows}, got {y.shape}")
        return csr_matmul(self.csr_t, y)

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def is_diagonal(self) -> bool:
        m = self.csr.tocoo()
        return self.rows == self.cols and bool(np.all(m.row == m.col))

    def to_dict(self) -> dict:
        blocks = []
        for b in self.blocks:
            rec = {"row": b.row, "col": b.col, "scale": b.scale}
            if isinstance(b.data, Identity):
                rec["kind"] = "identity"
                rec["dim"] = b.data.dim
            else:
                rec["kind"] = "dense"
                rec["data"] = b.data.tolist()
            blocks.append(rec)
        return {"rows": self.rows, "cols": self.cols, "blocks": blocks}

    @classmethod
    def from_dict(cls, d, path: str = "$") -> "BlockOperator":
        if not isinstance(d, dict):
            raise FormatError(path, "expected an object")
        for key in ("rows", "cols", "blocks"):
            if key not in d:
                raise FormatError(path, f"missing field '{key}'")
        blocks = []
        for i, rec in enumerate(d["blocks"]):
            bp = f"{path}.blocks[{i}]"
            if not isinstance(rec, dict):
                raise FormatError(bp, "expected an object")
            for key in ("row", "col", "kind"):
                if key not in rec:
                    raise FormatError(bp, f"missing field '{key}'")
            scale = float(rec.get("scale", 1.0))
            if rec["kind"] == "identity":
                if "dim" not in rec:
                    raise FormatError(bp, "missing field 'dim'")
                data = Identity(int(rec["dim"]))
            elif rec["kind"] == "dense":
                if "data" not in rec:
                    raise FormatError(bp, "missing field 'data'")
                try:
                    data = np.array(rec["data"], dtype=float)
                except (TypeError, ValueError) as exc:
                    raise FormatError(f"{bp}.data", f"not a numeric matrix ({exc})") from exc
                if data.ndim != 2:
                    raise FormatError(f"{bp}.data", "expected a 2-D matrix")
            else:
                raise FormatError(f"{bp}.kind", f"unknown block kind {rec['kind']!r}")
            blocks.append(Block(int(rec["row"]), int(rec["col"]), data, scale))
        try:
            return cls(int(d["rows"]), int(d["cols"]), blocks)
        except ValueError as exc:
            raise FormatError(path, str(exc)) from exc

    def __repr__(self):
        return f"BlockOperator({self.rows}x{self.cols}, {len(self.blocks)} blocks)"


Operator = Union[np.ndarray, BlockOperator, sp.spmatrix]


def apply(op: Operator, x):
    """``op @ x`` for dense, sparse or block operators."""
    if isinstance(op, BlockOperator):
        return op.apply(x)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != op.shape[1]:
        raise ValueError(f"apply: expected leading dim {op.shape[1]}, got {x.shape}")
    return op @ x


def apply_transpose(op: Operator, y):
    """``op.T @ y`` for dense, sparse or block operators."""
    if isinstance(op, BlockOperator):
        return op.apply_transpose(y)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != op.shape[0]:
        raise ValueError(f"apply_transpose: expected leading dim {op.shape[0]}, got {y.shape}")
    return op.T @ y


def to_dense(op: Operator) -> np.ndarray:
    if isinstance(op, BlockOperator):
        return op.to_dense()
    if sp.issparse(op):
        return op.toarray()
    return np.asarray(op, dtype=float)


def spectral_norm_sq(op: Operator, iters: int = 200, seed: int = 0) -> float:
    """Estimate ``||op||^2`` by power iteration on ``x -> op.T (op x)``.

    The Rayleigh quotient approaches the true value from below, so the
    returned estimate is inflated by a factor ``1 + 1e-3``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    n = op.shape[1]
    if n == 0 or op.shape[0] == 0:
        return 0.0
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = apply(op, x)
        est = float(y @ y)
        x = apply_transpose(op, y)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return 0.0
        x /= nx
    y = apply(op, x)
    est = max(est, float(y @ y))
    return est * (1.0 + SIGMA_INFLATION)


def curvature_bounds(P: Operator) -> tuple[float, float]:
    """Return ``(mu, lam)``, the extreme eigenvalues of a symmetric PSD ``P``."""
    a = to_dense(P)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("P must be square")
    if a.size == 0:
        return 0.0, 0.0
    if np.max(np.abs(a - a.T)) > 1e-10:
        raise ValueError("P is not symmetric")
    ev = np.linalg.eigvalsh(a)
    if ev[0] < -1e-8:
        raise ValueError(f"P is indefinite (min eigenvalue {ev[0]:.3e})")
    mu = float(ev[0]) if ev[0] > 1e-12 else 0.0
    return mu, max(float(ev[-1]), 0.0)


_PADE6 = [
    math.factorial(12 - k) * math.factorial(6)
    / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
    for k in range(7)
]


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a (6, 6) Pade core."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expm needs a square matrix")
    n = m.shape[0]
    norm1 = np.max(np.sum(np.abs(m), axis=0)) if n else 0.0
    s = max(0, math.ceil(math.log2(norm1 / 0.5))) if norm1 > 0.5 else 0
    a = m / (2.0 ** s)
    eye = np.eye(n)
    num = _PADE6[0] * eye
    den = _PADE6[0] * eye
    power = eye
    for k in range(1, 7):
        power = power @ a
        num = num + _PADE6[k] * power
        den = den + (-1) ** k * _PADE6[k] * power
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r


def zoh_discretize(a_c, b_c, h_c, dt: float):
    """Zero-order-hold discretization of ``dx/ds = a_c x + b_c u + h_c``.

    Returns ``(A, B, h)`` with ``A = exp(a_c dt)`` and ``B``, ``h`` scaled by
    the integral of ``exp(a_c s)`` over ``[0, dt]``, read off the top-right
    block of ``exp([[a_c, I], [0, 0]] dt)``.
    """
    if not dt > 0:
        raise ValueError("sampling period must be positive")
    a_c = np.atleast_2d(np.asarray(a_c, dtype=float))
    nx = a_c.shape[0]
    if a_c.shape != (nx, nx):
        raise ValueError("a_c must be square")
    b_c = np.asarray(b_c, dtype=float).reshape(nx, -1)
    h_c = np.asarray(h_c, dtype=float)
    if h_c.shape != (nx,):
        raise ValueError(f"h_c must have shape ({nx},)")
    aug = np.zeros((2 * nx, 2 * nx))
    aug[:nx, :nx] = a_c
    aug[:nx, nx:] = np.eye(nx)
    e = expm(aug * dt)
    a = e[:nx, :nx]
    integral = e[:nx, nx:]
    return a, integral @ b_c, integral @ h_c

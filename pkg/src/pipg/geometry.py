"""Closed convex sets and cones with exact projections.

Every set is an immutable value. Projections accept arrays whose leading
axis is the set dimension; any trailing axes are treated as a batch, so a
``(dim, T)`` array projects ``T`` points at once.

Cartesian products are flattened and compiled on first use into a handful
of slice operations: runs of elementwise factors (zero, reals, orthants,
boxes, l-infinity balls) become one clip per run, and repeated factors of the
same kind are projected together through a strided view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numba
import numpy as np

from .errors import FormatError

__all__ = [
    "ConvexSet",
    "Zero",
    "Reals",
    "NonnegOrthant",
    "SecondOrderCone",
    "Ball",
    "InfBall",
    "Box",
    "Halfspace",
    "ConeIntersectBall",
    "IceCream",
    "Cartesian",
    "Polar",
    "repeat",
    "project",
    "moreau_polar_project",
    "dist_sq_half",
    "distance",
    "set_to_dict",
    "set_from_dict",
]


def _bc(v: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Reshape a per-coordinate vector to broadcast against ``x``."""
    return v.reshape(v.shape + (1,) * (x.ndim - 1))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


# Kernels act on a 2-D array whose rows hold ``count`` blocks of ``dim`` rows
# each, block ``b`` starting at row ``start + b * step``; every column is an
# independent point. Plain ``(dim, N)`` input is the case count = 1.

@numba.njit(cache=True)
def _cone_kernel(x, out, start, step, count, axis, c, halfspace, radius):
    """Projection onto ``{u : ||u - <u,a> a|| <= c <u,a>}``, then onto ``||u|| <= radius``."""
    d = axis.shape[0]
    n = x.shape[1]
    for b in range(count):
        r0 = start + b * step
        for k in range(n):
            t = 0.0
            for i in range(d):
                t += axis[i] * x[r0 + i, k]
            if halfspace:
                s = min(t, 0.0)
                for i in range(d):
                    out[r0 + i, k] = x[r0 + i, k] - axis[i] * s
            else:
                rn2 = 0.0
                for i in range(d):
                    r = x[r0 + i, k] - axis[i] * t
                    rn2 += r * r
                rn = math.sqrt(rn2)
                if rn <= c * t:
                    for i in range(d):
                        out[r0 + i, k] = x[r0 + i, k]
                elif c * rn <= -t:
                    for i in range(d):
                        out[r0 + i, k] = 0.0
                else:
                    s = (t + c * rn) / (1.0 + c * c)
                    scale = s * c / rn
                    for i in range(d):
                        out[r0 + i, k] = axis[i] * s + (x[r0 + i, k] - axis[i] * t) * scale
            if radius < math.inf:
                ny2 = 0.0
                for i in range(d):
                    ny2 += out[r0 + i, k] * out[r0 + i, k]
                if ny2 > radius * radius:
                    scale = radius / math.sqrt(ny2)
                    for i in range(d):
                        out[r0 + i, k] *= scale
    return out


@numba.njit(cache=True)
def _ball_kernel(x, out, start, step, count, center, radius):
    d = center.shape[0]
    n = x.shape[1]
    for b in range(count):
        r0 = start + b * step
        for k in range(n):
            nd2 = 0.0
            for i in range(d):
                e = x[r0 + i, k] - center[i]
                nd2 += e * e
            if nd2 <= radius * radius:
                for i in range(d):
                    out[r0 + i, k] = x[r0 + i, k]
            else:
                scale = radius / math.sqrt(nd2)
                for i in range(d):
                    out[r0 + i, k] = center[i] + (x[r0 + i, k] - center[i]) * scale
    return out


@numba.njit(cache=True)
def _clip_kernel(x, out, start, step, count, lo, hi):
    d = lo.shape[0]
    n = x.shape[1]
    for b in range(count):
        r0 = start + b * step
        for i in range(d):
            for k in range(n):
                out[r0 + i, k] = min(max(x[r0 + i, k], lo[i]), hi[i])
    return out


def _by_kernel(leaf, x):
    """Project a ``(dim, ...)`` array through the leaf's kernel."""
    fn, args = leaf._kernel()
    x2 = np.ascontiguousarray(x.reshape(x.shape[0], -1))
    out = np.empty_like(x2)
    fn(x2, out, 0, leaf.dim, 1, *args)
    return out.reshape(x.shape)


class ConvexSet:
    """Base class. Subclasses implement ``dim``, ``is_cone`` and ``_project``."""

    dim: int

    @property
    def is_cone(self) -> bool:
        return False

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _bounds(self):
        """(lower, upper) if the projection is an elementwise clip, else None."""
        return None

    def _kernel(self):
        """``(kernel, extra_args)`` for a compiled projection, or None."""
        b = self._bounds()
        if b is None:
            return None
        return _clip_kernel, (np.array(b[0], dtype=float), np.array(b[1], dtype=float))

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[0] != self.dim:
            raise ValueError(
                f"dimension mismatch: {type(self).__name__} has dim {self.dim}, "
                f"got array of shape {x.shape}"
            )
        return self._project(x)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(distance(self, x) <= tol))

    def leaves(self):
        """Flattened (offset, set) pairs; non-products yield themselves."""
        yield 0, self


@dataclass(frozen=True, eq=False)
class Zero(ConvexSet):
    dim: int

    @property
    def is_cone(self):
        return True

    def _bounds(self):
        z = np.zeros(self.dim)
        return z, z

    def _project(self, x):
        return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class Reals(ConvexSet):
    dim: int

    @property
    def is_cone(self):
        return True

    def _bounds(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def _project(self, x):
        return x.copy()


@dataclass(frozen=True, eq=False)
class NonnegOrthant(ConvexSet):
    dim: int

    @property
    def is_cone(self):
        return True

    def _bounds(self):
        return np.zeros(self.dim), np.full(self.dim, np.inf)

    def _project(self, x):
        return np.maximum(x, 0.0)


@dataclass(frozen=True, eq=False)
class SecondOrderCone(ConvexSet):
    """``{x : ||x without x[axis_index]|| <= x[axis_index]}``."""

    dim: int
    axis_index: int = 0

    def __post_init__(self):
        if self.dim < 1 or not 0 <= self.axis_index < self.dim:
            raise ValueError(f"invalid SecondOrderCone(dim={self.dim}, axis_index={self.axis_index})")

    @property
    def is_cone(self):
        return True

    @cached_property
    def _axis(self):
        return np.eye(self.dim)[self.axis_index]

    def _kernel(self):
        return _cone_kernel, (self._axis, 1.0, False, math.inf)

    def _project(self, x):
        return _by_kernel(self, x)


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    dim: int
    radius: float
    center: np.ndarray = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Ball radius must be positive")
        c = np.zeros(self.dim) if self.center is None else self.center
        c = _frozen(c)
        if c.shape != (self.dim,):
            raise ValueError(f"Ball center must have shape ({self.dim},)")
        object.__setattr__(self, "center", c)

    def _kernel(self):
        return _ball_kernel, (self.center, float(self.radius))

    def _project(self, x):
        return _by_kernel(self, x)


@dataclass(frozen=True, eq=False)
class InfBall(ConvexSet):
    dim: int
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("InfBall radius must be positive")

    def _bounds(self):
        return np.full(self.dim, -self.radius), np.full(self.dim, self.radius)

    def _project(self, x):
        return np.clip(x, -self.radius, self.radius)


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lower), _frozen(self.upper)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("Box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("Box requires lower <= upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def _bounds(self):
        return self.lower, self.upper

    def _project(self, x):
        return np.clip(x, _bc(self.lower, x), _bc(self.upper, x))


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = _frozen(self.normal)
        if n.ndim != 1 or not np.any(n != 0):
            raise ValueError("Halfspace normal must be a nonzero 1-D array")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.shape[0]

    def _project(self, x):
        n = self.normal
        viol = np.maximum(0.0, np.tensordot(n, x, axes=(0, 0)) - self.offset)
        return x - _bc(n, x) * (viol / (n @ n))


@dataclass(frozen=True, eq=False)
class IceCream(ConvexSet):
    """``{u : ||u|| cos(half_angle) <= <u, axis>}`` with a unit ``axis``."""

    dim: int
    half_angle: float
    axis: np.ndarray = None

    def __post_init__(self):
        if not 0 < self.half_angle <= math.pi / 2:
            raise ValueError("IceCream half_angle must lie in (0, pi/2]")
        a = np.eye(self.dim)[-1] if self.axis is None else np.asarray(self.axis, dtype=float)
        if a.shape != (self.dim,) or abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise ValueError(f"IceCream axis must be a unit vector of length {self.dim}")
        object.__setattr__(self, "axis", _frozen(a / np.linalg.norm(a)))

    @property
    def is_cone(self):
        return True

    def _kernel(self):
        flat = self.half_angle >= math.pi / 2 - 1e-15
        return _cone_kernel, (self.axis, 0.0 if flat else math.tan(self.half_angle), flat, math.inf)

    def _project(self, x):
        return _by_kernel(self, x)


@dataclass(frozen=True, eq=False)
class ConeIntersectBall(ConvexSet):
    """A closed convex cone intersected with an origin-centered Euclidean ball."""

    cone: ConvexSet
    radius: float

    def __post_init__(self):
        if not self.cone.is_cone:
            raise ValueError("ConeIntersectBall requires a cone")
        if not self.radius > 0:
            raise ValueError("ConeIntersectBall radius must be positive")

    @property
    def dim(self):
        return self.cone.dim

    def _kernel(self):
        inner = self.cone._kernel()
        if inner is None or inner[0] is not _cone_kernel:
            return None
        return _cone_kernel, inner[1][:3] + (float(self.radius),)

    def _project(self, x):
        if self._kernel() is not None:
            return _by_kernel(self, x)
        y = self.cone._project(x)
        ny = np.sqrt(np.sum(y * y, axis=0))
        with np.errstate(divide="ignore"):
            return y * np.minimum(1.0, self.radius / ny)


@dataclass(frozen=True, eq=False)
class Polar(ConvexSet):
    """The polar cone of ``inner``; projected through the Moreau decomposition."""

    inner: ConvexSet

    def __post_init__(self):
        if not self.inner.is_cone:
            raise ValueError(f"Polar requires a cone, got {type(self.inner).__name__}")

    @property
    def dim(self):
        return self.inner.dim

    @property
    def is_cone(self):
        return True

    def _bounds(self):
        inner = self.inner
        if isinstance(inner, Zero):
            return Reals(inner.dim)._bounds()
        if isinstance(inner, Reals):
            return Zero(inner.dim)._bounds()
        if isinstance(inner, NonnegOrthant):
            return np.full(inner.dim, -np.inf), np.zeros(inner.dim)
        if isinstance(inner, Polar):
            return inner.inner._bounds()
        return None

    def leaves(self):
        if isinstance(self.inner, Polar):
            yield from self.inner.inner.leaves()
        elif isinstance(self.inner, Cartesian):
            for off, leaf in self.inner.leaves():
                yield off, (leaf.inner if isinstance(leaf, Polar) else Polar(leaf))
        else:
            yield 0, self

    @cached_property
    def _plan(self):
        return _compile(self.dim, self.leaves()) if isinstance(self.inner, Cartesian) else None

    def _project(self, x):
        if isinstance(self.inner, Polar):
            return self.inner.inner._project(x)
        if self._plan is not None:
            return _run_plan(self._plan, x)
        return x - self.inner._project(x)


@dataclass(frozen=True, eq=False)
class Cartesian(ConvexSet):
    factors: tuple = field(default=())

    def __post_init__(self):
        fs = tuple(self.factors)
        if not fs:
            raise ValueError("Cartesian needs at least one factor")
        object.__setattr__(self, "factors", fs)

    @cached_property
    def dim(self):
        return sum(f.dim for f in self.factors)

    @property
    def is_cone(self):
        return all(f.is_cone for f in self.factors)

    def leaves(self):
        off = 0
        for f in self.factors:
            for o, leaf in f.leaves():
                yield off + o, leaf
            off += f.dim

    def _bounds(self):
        parts = [f._bounds() for f in self.factors]
        if any(p is None for p in parts):
            return None
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    @cached_property
    def _plan(self):
        return _compile(self.dim, self.leaves())

    def _project(self, x):
        return _run_plan(self._plan, x)


def _leaf_key(leaf: ConvexSet):
    parts = [type(leaf).__name__, leaf.dim]
    for name, value in sorted(vars(leaf).items()):
        if isinstance(value, np.ndarray):
            parts.append((name, value.tobytes()))
        elif isinstance(value, ConvexSet):
            parts.append((name, _leaf_key(value)))
        elif not name.startswith("_"):
            parts.append((name, value))
    return tuple(parts)


def _compile(dim: int, leaves):
    """Compile flattened leaves into a short list of slice operations.

    Leaves are grouped by kind and parameters. A group at evenly spaced
    offsets becomes one compiled ``kernel`` call over all its blocks (or a
    ``strided`` op projecting a ``(dim, count, ...)`` view for leaves without
    a kernel), unless it is elementwise and contiguous, in which case its
    coordinates join the clip runs. Each maximal run of clip coordinates
    becomes ``copy``, ``zero`` or ``clip`` with scalar bounds when they are
    constant; irregular groups fall back to a gather.
    """
    groups: dict = {}
    for off, leaf in leaves:
        groups.setdefault(_leaf_key(leaf), (leaf, []))[1].append(off)
    lo = np.full(dim, np.nan)
    hi = np.full(dim, np.nan)
    clipped = np.zeros(dim, dtype=bool)
    ops = []
    for leaf, offs in groups.values():
        offs = np.asarray(offs)
        steps = np.diff(offs)
        regular = offs.size == 1 or (np.all(steps == steps[0]) and steps[0] >= leaf.dim)
        b = leaf._bounds()
        if b is not None and (not regular or offs.size == 1 or steps[0] == leaf.dim):
            for o in offs:
                lo[o:o + leaf.dim], hi[o:o + leaf.dim] = b
                clipped[o:o + leaf.dim] = True
        elif regular:
            step = int(steps[0]) if offs.size > 1 else leaf.dim
            kernel = leaf._kernel()
            if kernel is not None:
                ops.append(("kernel", kernel[0], kernel[1], int(offs[0]), step, int(offs.size)))
            else:
                ops.append(("strided", leaf, int(offs[0]), step, int(offs.size)))
        else:
            ops.append(("gather", leaf, np.arange(leaf.dim)[:, None] + offs[None, :]))
    runs = []
    i = 0
    while i < dim:
        if not clipped[i]:
            i += 1
            continue
        j = i + 1
        while j < dim and clipped[j]:
            j += 1
        runs.append((i, j))
        i = j
    clips = []
    for i, j in runs:
        cuts = [i] + [k for k in range(i + 1, j) if lo[k] != lo[k - 1] or hi[k] != hi[k - 1]] + [j]
        pieces = list(zip(cuts[:-1], cuts[1:]))
        if len(pieces) > 1 and min(b - a for a, b in pieces) < 32:
            clips.append(("clip", i, j, lo[i:j].copy(), hi[i:j].copy()))
            continue
        for a, b in pieces:
            l, h = float(lo[a]), float(hi[a])
            if l == -np.inf and h == np.inf:
                clips.append(("copy", a, b))
            elif l == 0 and h == 0:
                clips.append(("zero", a, b))
            else:
                clips.append(("clip", a, b, None if l == -np.inf else l, None if h == np.inf else h))
    return clips + ops


def _run_plan(ops, x):
    out = np.empty(x.shape)
    x2 = o2 = None
    for op in ops:
        kind = op[0]
        if kind == "copy":
            out[op[1]:op[2]] = x[op[1]:op[2]]
        elif kind == "zero":
            out[op[1]:op[2]] = 0.0
        elif kind == "clip":
            _, s, e, l, h = op
            if l is None:
                np.minimum(x[s:e], h, out=out[s:e])
            elif h is None:
                np.maximum(x[s:e], l, out=out[s:e])
            elif isinstance(l, float):
                np.clip(x[s:e], l, h, out=out[s:e])
            else:
                np.clip(x[s:e], _bc(l, x), _bc(h, x), out=out[s:e])
        elif kind == "kernel":
            _, fn, args, s, step, count = op
            if x2 is None:
                x2 = np.ascontiguousarray(x.reshape(x.shape[0], -1))
                o2 = out.reshape(x2.shape)
            fn(x2, o2, s, step, count, *args)
        elif kind == "strided":
            _, leaf, s, step, count = op
            e = s + step * count
            tail = x.shape[1:]
            xs = x[s:e].reshape((count, step) + tail)[:, :leaf.dim]
            os_ = out[s:e].reshape((count, step) + tail)[:, :leaf.dim]
            os_[...] = np.moveaxis(leaf._project(np.moveaxis(xs, 0, 1)), 1, 0)
        else:
            idx = op[2]
            out[idx] = op[1]._project(x[idx])
    return out


def repeat(s: ConvexSet, count: int) -> Cartesian:
    """Cartesian product of ``count`` copies of ``s``."""
    return Cartesian(tuple([s] * count))


def project(s: ConvexSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``s``."""
    return s.project(x)


def moreau_polar_project(cone: ConvexSet, x) -> np.ndarray:
    """Projection onto the polar cone, computed as ``x - project(cone, x)``."""
    if not cone.is_cone:
        raise ValueError(f"{type(cone).__name__} is not a cone; its polar is undefined here")
    x = np.asarray(x, dtype=float)
    return x - cone.project(x)


def distance(s: ConvexSet, x) -> np.ndarray:
    """Euclidean distance from ``x`` (per batch column) to ``s``."""
    x = np.asarray(x, dtype=float)
    d = x - s.project(x)
    return np.sqrt(np.sum(d * d, axis=0))


def dist_sq_half(cone: ConvexSet, w) -> np.ndarray:
    """Quadratic distance ``0.5 * ||w - proj(w)||^2``; a float for 1-D input."""
    w = np.asarray(w, dtype=float)
    d = w - cone.project(w)
    return 0.5 * np.sum(d * d, axis=0)


# -- serialization -----------------------------------------------------------

def set_to_dict(s: ConvexSet) -> dict:
    if isinstance(s, Zero):
        return {"type": "zero", "dim": s.dim}
    if isinstance(s, Reals):
        return {"type": "reals", "dim": s.dim}
    if isinstance(s, NonnegOrthant):
        return {"type": "nonneg", "dim": s.dim}
    if isinstance(s, SecondOrderCone):
        return {"type": "soc", "dim": s.dim, "axis_index": s.axis_index}
    if isinstance(s, Ball):
        return {"type": "ball", "dim": s.dim, "radius": s.radius, "center": s.center.tolist()}
    if isinstance(s, InfBall):
        return {"type": "infball", "dim": s.dim, "radius": s.radius}
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    if isinstance(s, Halfspace):
        return {"type": "halfspace", "normal": s.normal.tolist(), "offset": s.offset}
    if isinstance(s, IceCream):
        return {"type": "icecream", "dim": s.dim, "half_angle": s.half_angle, "axis": s.axis.tolist()}
    if isinstance(s, ConeIntersectBall):
        return {"type": "cone_ball", "cone": set_to_dict(s.cone), "radius": s.radius}
    if isinstance(s, Polar):
        return {"type": "polar", "inner": set_to_dict(s.inner)}
    if isinstance(s, Cartesian):
        return {"type": "cartesian", "factors": [set_to_dict(f) for f in s.factors]}
    raise TypeError(f"cannot serialize {type(s).__name__}")


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise FormatError(path, "expected an object")
    if key not in d:
        raise FormatError(path, f"missing field '{key}'")
    return d[key]


def _num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(path, f"expected a number, got {type(v).__name__}")
    return float(v)


def _int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(path, f"expected an integer, got {type(v).__name__}")
    return v


def _vec(v, path: str) -> np.ndarray:
    if not isinstance(v, list):
        raise FormatError(path, "expected a list of numbers")
    return np.array([_num(e, f"{path}[{i}]") for i, e in enumerate(v)], dtype=float)


def set_from_dict(d: dict, path: str = "$") -> ConvexSet:
    kind = _need(d, "type", path)
    try:
        if kind == "zero":
            return Zero(_int(_need(d, "dim", path), f"{path}.dim"))
        if kind == "reals":
            return Reals(_int(_need(d, "dim", path), f"{path}.dim"))
        if kind == "nonneg":
            return NonnegOrthant(_int(_need(d, "dim", path), f"{path}.dim"))
        if kind == "soc":
            return SecondOrderCone(
                _int(_need(d, "dim", path), f"{path}.dim"),
                _int(d.get("axis_index", 0), f"{path}.axis_index"),
            )
        if kind == "ball":
            dim = _int(_need(d, "dim", path), f"{path}.dim")
            center = _vec(d["center"], f"{path}.center") if "center" in d else None
            return Ball(dim, _num(_need(d, "radius", path), f"{path}.radius"), center)
        if kind == "infball":
            return InfBall(
                _int(_need(d, "dim", path), f"{path}.dim"),
                _num(_need(d, "radius", path), f"{path}.radius"),
            )
        if kind == "box":
            return Box(_vec(_need(d, "lower", path), f"{path}.lower"),
                       _vec(_need(d, "upper", path), f"{path}.upper"))
        if kind == "halfspace":
            return Halfspace(_vec(_need(d, "normal", path), f"{path}.normal"),
                             _num(_need(d, "offset", path), f"{path}.offset"))
        if kind == "icecream":
            dim = _int(_need(d, "dim", path), f"{path}.dim")
            axis = _vec(d["axis"], f"{path}.axis") if "axis" in d else None
            return IceCream(dim, _num(_need(d, "half_angle", path), f"{path}.half_angle"), axis)
        if kind == "cone_ball":
            return ConeIntersectBall(set_from_dict(_need(d, "cone", path), f"{path}.cone"),
                                     _num(_need(d, "radius", path), f"{path}.radius"))
        if kind == "polar":
            return Polar(set_from_dict(_need(d, "inner", path), f"{path}.inner"))
        if kind == "cartesian":
            factors = _need(d, "factors", path)
            if not isinstance(factors, list):
                raise FormatError(f"{path}.factors", "expected a list")
            return Cartesian(tuple(set_from_dict(f, f"{path}.factors[{i}]")
                                   for i, f in enumerate(factors)))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(path, str(exc)) from exc
    raise FormatError(f"{path}.type", f"unknown set type {kind!r}")


def cones_product(factors: Sequence[ConvexSet]) -> ConvexSet:
    """Product of factors, collapsing a single factor to itself."""
    factors = [f for f in factors if f.dim > 0]
    return factors[0] if len(factors) == 1 else Cartesian(tuple(factors))

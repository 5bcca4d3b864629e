"""Grids, rectangle and box volumes, survival transform and Frechet envelopes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Copula3 = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """``m`` equispaced points per axis, endpoints included."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise ValueError(f"grid needs at least 3 points per axis, got {self.m}")

    @classmethod
    def of(cls, grid: "GridSpec | int") -> "GridSpec":
        return grid if isinstance(grid, GridSpec) else cls(int(grid))

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m)

    def mesh(self, dim: int) -> tuple[np.ndarray, ...]:
        """Row-major ('ij') coordinate arrays of the full grid."""
        return tuple(np.meshgrid(*([self.points] * dim), indexing="ij"))


@dataclass(frozen=True)
class Rect2:
    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        _check_corners(self.lo, self.hi, 2)
        object.__setattr__(self, "lo", tuple(np.clip(self.lo, 0.0, 1.0).tolist()))
        object.__setattr__(self, "hi", tuple(np.clip(self.hi, 0.0, 1.0).tolist()))


@dataclass(frozen=True)
class Box3:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        _check_corners(self.lo, self.hi, 3)
        object.__setattr__(self, "lo", tuple(np.clip(self.lo, 0.0, 1.0).tolist()))
        object.__setattr__(self, "hi", tuple(np.clip(self.hi, 0.0, 1.0).tolist()))


def _check_corners(lo, hi, dim):
    if len(lo) != dim or len(hi) != dim:
        raise ValueError(f"corners must have {dim} coordinates")
    if any(a > b for a, b in zip(lo, hi)):
        raise ValueError("lower corner must not exceed upper corner")


def _volume(fn, lo, hi) -> float:
    dim = len(lo)
    total = 0.0
    for choice in itertools.product((0, 1), repeat=dim):
        z = [hi[k] if c else lo[k] for k, c in enumerate(choice)]
        n_low = dim - sum(choice)
        total += (-1) ** n_low * float(fn(*z))
    return total


def volume2(c, r: Rect2) -> float:
    return _volume(c, r.lo, r.hi)


def volume3(d: Copula3, b: Box3) -> float:
    return _volume(d, b.lo, b.hi)


def grid_volumes(values: np.ndarray) -> np.ndarray:
    """Volumes of every box spanned by pairs of grid points on each axis.

    ``values`` holds the function on a full grid (one axis per argument).
    Returns an array with one axis of length ``m*(m-1)/2`` per dimension.
    """
    m = values.shape[0]
    i, j = np.triu_indices(m, k=1)
    out = values
    for axis in range(values.ndim):
        out = np.take(out, j, axis=axis) - np.take(out, i, axis=axis)
    return out


def cell_volumes(values: np.ndarray) -> np.ndarray:
    """Volumes of the elementary grid cells."""
    out = values
    for axis in range(values.ndim):
        out = np.diff(out, axis=axis)
    return out


def M3(u1, u2, u3):
    return np.minimum(np.minimum(u1, u2), u3)


def Pi3(u1, u2, u3):
    return np.asarray(u1) * u2 * u3


def W3(u1, u2, u3):
    return np.maximum(np.asarray(u1) + u2 + u3 - 2.0, 0.0)


def survival3(d: Copula3, u1, u2, u3):
    """Probability that every coordinate exceeds its threshold."""
    u1, u2, u3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u2, u3)))
    one = np.ones_like(u1)
    out = (
        1.0 - u1 - u2 - u3
        + np.asarray(d(u1, u2, one))
        + np.asarray(d(u1, one, u3))
        + np.asarray(d(one, u2, u3))
        - np.asarray(d(u1, u2, u3))
    )
    return out[()]


def _check_perm(sigma: Sequence[int]) -> tuple[int, int, int]:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != [1, 2, 3]:
        raise ValueError(f"not a permutation of (1, 2, 3): {sigma}")
    return sigma


def permute3(d: Copula3, sigma: Sequence[int]) -> Copula3:
    """``D^sigma(u1, u2, u3) = D(u_sigma1, u_sigma2, u_sigma3)``."""
    s = _check_perm(sigma)

    def permuted(u1, u2, u3):
        u = (u1, u2, u3)
        return d(u[s[0] - 1], u[s[1] - 1], u[s[2] - 1])

    return permuted


@dataclass
class OrderReport:
    """Outcome of a pointwise ``lower <= upper + tol`` scan."""

    holds: bool
    n_points: int
    n_violations: int
    worst_excess: float
    worst_point: tuple[float, ...] | None

    def __bool__(self):
        return self.holds


def compare_on_grid(lower, upper, points, tol: float) -> OrderReport:
    lower = np.asarray(lower, dtype=float)
    excess = lower - np.asarray(upper, dtype=float)
    viol = excess > tol
    k = int(np.argmax(excess))
    pt = tuple(float(np.asarray(p).reshape(-1)[k]) for p in points)
    return OrderReport(
        holds=not viol.any(),
        n_points=int(excess.size),
        n_violations=int(viol.sum()),
        worst_excess=float(excess.reshape(-1)[k]),
        worst_point=pt,
    )


@dataclass
class EnvelopeReport:
    holds: bool
    n_points: int
    n_violations: int
    worst_violation: float
    worst_point: tuple[float, ...]
    max_upper_gap: float
    max_lower_gap: float

    def __bool__(self):
        return self.holds


def frechet_envelope_check(c, grid: GridSpec | int, dim: int = 2, tol: float = 1e-12) -> EnvelopeReport:
    """Scans ``W_n <= C <= M_n`` over a grid.

    ``max_upper_gap`` is the largest ``M_n - C``; zero means the upper bound is
    attained everywhere.
    """
    g = GridSpec.of(grid)
    pts = g.mesh(dim)
    vals = np.asarray(c(*pts), dtype=float)
    stack = np.stack(pts)
    lower = np.maximum(stack.sum(axis=0) - dim + 1, 0.0)
    upper = stack.min(axis=0)
    over = np.maximum(vals - upper, lower - vals)
    k = int(np.argmax(over))
    return EnvelopeReport(
        holds=bool((over <= tol).all()),
        n_points=int(vals.size),
        n_violations=int((over > tol).sum()),
        worst_violation=float(max(over.reshape(-1)[k], 0.0)),
        worst_point=tuple(float(p.reshape(-1)[k]) for p in pts),
        max_upper_gap=float((upper - vals).max()),
        max_lower_gap=float((vals - lower).max()),
    )


@dataclass
class Order3Report:
    """Trivariate concordance check: plain values and survival values."""

    holds: bool
    plain: OrderReport
    survival: OrderReport

    def __bool__(self):
        return self.holds


def concordance_leq2(c, c2, grid: GridSpec | int = 21, tol: float = 1e-12) -> OrderReport:
    """``C <= C'`` pointwise on a grid."""
    pts = GridSpec.of(grid).mesh(2)
    return compare_on_grid(c(*pts), c2(*pts), pts, tol)


def concordance_leq3(d: Copula3, d2: Copula3, grid: GridSpec | int = 11, tol: float = 1e-12) -> Order3Report:
    """``D <= D'`` and ``survival(D) <= survival(D')`` on a grid."""
    pts = GridSpec.of(grid).mesh(3)
    plain = compare_on_grid(d(*pts), d2(*pts), pts, tol)
    surv = compare_on_grid(survival3(d, *pts), survival3(d2, *pts), pts, tol)
    return Order3Report(plain.holds and surv.holds, plain, surv)

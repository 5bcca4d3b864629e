"""Bivariate copula families with closed-form values and conditional partials.

Every family exposes the same small surface, vectorised over numpy arrays:

* ``cdf(u, v)``: the copula value, with groundedness and uniform margins pinned
  exactly at the boundary of the unit square.
* ``d1(u, v)`` / ``d2(u, v)``: partial derivatives in the first / second
  argument.  ``d2(u, t)`` is the conditional df of the first coordinate given
  the second equals ``t``; ``d1(t, v)`` the conditional df of the second given
  the first.
* ``d1_jumps(v)`` / ``d2_jumps(u)``: abscissae ``t`` where ``t -> d1(t, v)``
  (resp. ``t -> d2(u, t)``) jumps.  Quadrature splits there.
* ``kinks()``: functions ``g(p, q)`` whose zero sets are the non-smooth loci of
  the copula when it is used as a mixing family.
* ``inv_d2(t, p)`` / ``inv_d1(t, p)``: generalised inverses of the conditional
  dfs (smallest argument whose conditional df reaches ``p``).

Partials of M and W are step functions; at the step the left limit in ``t`` is
returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

FD_STEP = 1e-6
BISECT_TOL = 1e-10

KinkFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class InvalidSpecError(ValueError):
    """A copula description is malformed or has inadmissible parameters."""


def _as_arrays(*xs):
    return np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in xs))


def _no_jumps(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.empty((x.size, 0))


def bisect_inverse(fn, p, *, tol: float = BISECT_TOL) -> np.ndarray:
    """Smallest ``x`` in [0, 1] with ``fn(x) >= p`` for a nondecreasing ``fn``.

    ``fn`` is evaluated elementwise on arrays shaped like ``p``.
    """
    p = np.asarray(p, dtype=float)
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    n_iter = int(math.ceil(math.log2(1.0 / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        above = fn(mid) >= p
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.where(p <= 0.0, 0.0, hi)


class Copula2:
    """Base class for bivariate copulas."""

    family: str = ""
    has_steps = False
    # conditional dfs behave like t**a near t = 0 (non-integer a)
    graded_at_zero = False

    def _cdf(self, u, v):
        raise NotImplementedError

    def cdf(self, u, v):
        u, v = _as_arrays(u, v)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = self._cdf(u, v)
        out = np.where(v >= 1.0, u, out)
        out = np.where(u >= 1.0, v, out)
        out = np.where((u <= 0.0) | (v <= 0.0), 0.0, out)
        return out[()]

    __call__ = cdf

    def raw(self, u, v):
        """Formula value without boundary pinning, for arguments already in [0, 1]."""
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self._cdf(u, v)

    def d1(self, u, v):
        """Partial derivative in the first argument (central differences)."""
        return fd_partial(self.cdf, u, v, axis=0)

    def d2(self, u, v):
        """Partial derivative in the second argument (central differences)."""
        return fd_partial(self.cdf, u, v, axis=1)

    def d1_jumps(self, v) -> np.ndarray:
        return _no_jumps(v)

    def d2_jumps(self, u) -> np.ndarray:
        return _no_jumps(u)

    def kinks(self) -> list[KinkFn]:
        return []

    def inv_d2(self, t, p):
        t, p = _as_arrays(t, p)
        return bisect_inverse(lambda x: self.d2(x, t), p)

    def inv_d1(self, t, p):
        t, p = _as_arrays(t, p)
        return bisect_inverse(lambda x: self.d1(t, x), p)

    def sample_given(self, p, w):
        """Second coordinate of a pair given the first is ``p``, driven by ``w``."""
        return self.inv_d1(p, w)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family}


def fd_partial(fn, u, v, axis: int, h: float = FD_STEP):
    """Central finite difference of ``fn(u, v)``, one-sided at the boundary."""
    u, v = _as_arrays(u, v)
    x = u if axis == 0 else v
    lo = np.clip(x - h, 0.0, 1.0)
    hi = np.clip(x + h, 0.0, 1.0)
    if axis == 0:
        diff = np.asarray(fn(hi, v)) - np.asarray(fn(lo, v))
    else:
        diff = np.asarray(fn(u, hi)) - np.asarray(fn(u, lo))
    return (diff / (hi - lo))[()]


@dataclass(frozen=True)
class Pi(Copula2):
    family = "pi"

    def _cdf(self, u, v):
        return u * v

    def d1(self, u, v):
        u, v = _as_arrays(u, v)
        return v.copy()[()]

    def d2(self, u, v):
        u, v = _as_arrays(u, v)
        return u.copy()[()]

    def inv_d2(self, t, p):
        t, p = _as_arrays(t, p)
        return p.copy()[()]

    inv_d1 = inv_d2


@dataclass(frozen=True)
class M(Copula2):
    family = "m"
    has_steps = True

    def _cdf(self, u, v):
        return np.minimum(u, v)

    def d1(self, u, v):
        u, v = _as_arrays(u, v)
        return np.where(u <= v, 1.0, 0.0)[()]

    def d2(self, u, v):
        u, v = _as_arrays(u, v)
        return np.where(v <= u, 1.0, 0.0)[()]

    def d1_jumps(self, v):
        return np.asarray(v, dtype=float).reshape(-1, 1)

    def d2_jumps(self, u):
        return np.asarray(u, dtype=float).reshape(-1, 1)

    def kinks(self):
        return [lambda p, q: p - q]

    def inv_d2(self, t, p):
        t, p = _as_arrays(t, p)
        return np.where(p <= 0.0, 0.0, t)[()]

    inv_d1 = inv_d2


@dataclass(frozen=True)
class W(Copula2):
    family = "w"
    has_steps = True

    def _cdf(self, u, v):
        return np.maximum(u + v - 1.0, 0.0)

    def d1(self, u, v):
        u, v = _as_arrays(u, v)
        return np.where(u > 1.0 - v, 1.0, 0.0)[()]

    def d2(self, u, v):
        u, v = _as_arrays(u, v)
        return np.where(v > 1.0 - u, 1.0, 0.0)[()]

    def d1_jumps(self, v):
        return 1.0 - np.asarray(v, dtype=float).reshape(-1, 1)

    def d2_jumps(self, u):
        return 1.0 - np.asarray(u, dtype=float).reshape(-1, 1)

    def kinks(self):
        return [lambda p, q: p + q - 1.0]

    def inv_d2(self, t, p):
        t, p = _as_arrays(t, p)
        return np.where(p <= 0.0, 0.0, 1.0 - t)[()]

    inv_d1 = inv_d2


@dataclass(frozen=True)
class FGM(Copula2):
    """Farlie-Gumbel-Morgenstern copula ``uv + theta uv(1-u)(1-v)``."""

    theta: float
    family = "fgm"

    def __post_init__(self):
        if not (-1.0 <= self.theta <= 1.0):
            raise InvalidSpecError(f"FGM theta must lie in [-1, 1], got {self.theta}")

    def _cdf(self, u, v):
        return u * v + self.theta * u * v * (1.0 - u) * (1.0 - v)

    def d1(self, u, v):
        u, v = _as_arrays(u, v)
        return (v + self.theta * v * (1.0 - v) * (1.0 - 2.0 * u))[()]

    def d2(self, u, v):
        u, v = _as_arrays(u, v)
        return (u + self.theta * u * (1.0 - u) * (1.0 - 2.0 * v))[()]

    def inv_d2(self, t, p):
        # root in [0, 1] of b x^2 - (1 + b) x + p = 0, b = theta (1 - 2t)
        t, p = _as_arrays(t, p)
        b = self.theta * (1.0 - 2.0 * t)
        disc = np.maximum((1.0 + b) ** 2 - 4.0 * b * p, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * p / ((1.0 + b) + np.sqrt(disc))
        out = np.where(p <= 0.0, 0.0, np.where(p >= 1.0, 1.0, out))
        return np.clip(out, 0.0, 1.0)[()]

    inv_d1 = inv_d2

    def to_dict(self):
        return {"family": self.family, "theta": float(self.theta)}


@dataclass(frozen=True)
class Clayton(Copula2):
    """Clayton copula ``(u^-a + v^-a - 1)^(-1/a)`` for ``a > 0``."""

    alpha: float
    family = "clayton"
    graded_at_zero = True

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise InvalidSpecError(f"Clayton alpha must be > 0, got {self.alpha}")

    def _cdf(self, u, v):
        a = self.alpha
        return (u**-a + v**-a - 1.0) ** (-1.0 / a)

    def _cond(self, x, t):
        # d/dt C(x, t) = (1 + (t/x)^a - t^a)^(-1 - 1/a)
        a = self.alpha
        x, t = _as_arrays(x, t)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            core = 1.0 + (t / x) ** a - t**a
            out = core ** (-1.0 - 1.0 / a)
        out = np.where(t <= 0.0, 1.0, np.minimum(out, 1.0))
        return np.where(x <= 0.0, 0.0, out)[()]

    def d1(self, u, v):
        return self._cond(v, u)

    def d2(self, u, v):
        return self._cond(u, v)

    def inv_d2(self, t, p):
        a = self.alpha
        t, p = _as_arrays(t, p)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            s = p ** (-a / (1.0 + a)) - 1.0
            out = (1.0 + s * t**-a) ** (-1.0 / a)
        out = np.where(p >= 1.0, 1.0, out)
        out = np.where((p <= 0.0) | (t <= 0.0), 0.0, out)
        return np.clip(out, 0.0, 1.0)[()]

    inv_d1 = inv_d2

    def to_dict(self):
        return {"family": self.family, "alpha": float(self.alpha)}


@dataclass(frozen=True)
class Checkerboard(Copula2):
    """Copula with piecewise-constant density ``d^2 w_ij`` on a d x d grid."""

    weights: tuple[tuple[float, ...], ...]
    family = "checkerboard"
    has_steps = True
    _w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise InvalidSpecError("checkerboard weights must be a square matrix")
        d = w.shape[0]
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidSpecError("checkerboard weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InvalidSpecError("checkerboard weights must sum to 1")
        if np.abs(w.sum(axis=0) - 1.0 / d).max() > 1e-9 or np.abs(w.sum(axis=1) - 1.0 / d).max() > 1e-9:
            raise InvalidSpecError("checkerboard rows and columns must each sum to 1/d")
        object.__setattr__(self, "weights", tuple(tuple(float(x) for x in row) for row in w))
        object.__setattr__(self, "_w", w)

    @property
    def d(self) -> int:
        return self._w.shape[0]

    def _ramp(self, x):
        return np.clip(self.d * x[..., None] - np.arange(self.d), 0.0, 1.0)

    def _cell(self, x):
        return np.clip(np.ceil(self.d * x) - 1, 0, self.d - 1).astype(int)

    def _cdf(self, u, v):
        return np.einsum("...i,ij,...j->...", self._ramp(u), self._w, self._ramp(v))

    def d1(self, u, v):
        u, v = _as_arrays(u, v)
        rows = self._w[self._cell(u)]
        return (self.d * np.einsum("...j,...j->...", rows, self._ramp(v)))[()]

    def d2(self, u, v):
        u, v = _as_arrays(u, v)
        cols = self._w.T[self._cell(v)]
        return (self.d * np.einsum("...i,...i->...", self._ramp(u), cols))[()]

    def _grid_jumps(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        inner = np.arange(1, self.d) / self.d
        return np.broadcast_to(inner, (x.size, self.d - 1))

    d1_jumps = _grid_jumps
    d2_jumps = _grid_jumps

    def kinks(self):
        out = []
        for k in range(1, self.d):
            c = k / self.d
            out.append(lambda p, q, c=c: p - c)
            out.append(lambda p, q, c=c: q - c)
        return out

    def to_dict(self):
        return {"family": self.family, "weights": [list(r) for r in self.weights]}


@dataclass(frozen=True)
class Transpose(Copula2):
    """The copula with its two arguments swapped."""

    inner: Copula2
    family = "transpose"

    @property
    def has_steps(self):
        return self.inner.has_steps

    @property
    def graded_at_zero(self):
        return self.inner.graded_at_zero

    def cdf(self, u, v):
        return self.inner.cdf(v, u)

    __call__ = cdf

    def raw(self, u, v):
        return self.inner.raw(v, u)

    def d1(self, u, v):
        return self.inner.d2(v, u)

    def d2(self, u, v):
        return self.inner.d1(v, u)

    def d1_jumps(self, v):
        return self.inner.d2_jumps(v)

    def d2_jumps(self, u):
        return self.inner.d1_jumps(u)

    def kinks(self):
        return [lambda p, q, g=g: g(q, p) for g in self.inner.kinks()]

    def inv_d2(self, t, p):
        return self.inner.inv_d1(t, p)

    def inv_d1(self, t, p):
        return self.inner.inv_d2(t, p)

    def to_dict(self):
        return {"family": self.family, "inner": self.inner.to_dict()}


def transpose2(c: Copula2) -> Copula2:
    if isinstance(c, Transpose):
        return c.inner
    return Transpose(c)


def eval2(c: Copula2, u, v):
    """Copula value with argument range validation."""
    u, v = _as_arrays(u, v)
    if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return c.cdf(u, v)


def partial_u2(a: Copula2, u, t):
    """Conditional df ``t -> dA(u, t)/dt`` of the first coordinate given the second."""
    return a.d2(u, t)


def partial_u1(b: Copula2, t, v):
    """Conditional df ``t -> dB(t, v)/dt`` of the second coordinate given the first."""
    return b.d1(t, v)


def _number(d: dict, key: str) -> float:
    try:
        return float(d[key])
    except KeyError:
        raise InvalidSpecError(f"missing key {key!r} for family {d.get('family')!r}") from None
    except (TypeError, ValueError):
        raise InvalidSpecError(f"{key!r} must be a number") from None


def spec_from_dict(d: Any) -> Copula2:
    """Parse the JSON encoding of a bivariate copula."""
    if not isinstance(d, dict) or "family" not in d:
        raise InvalidSpecError("copula spec must be an object with a 'family' key")
    fam = str(d["family"]).lower()
    if fam == "pi":
        return Pi()
    if fam == "m":
        return M()
    if fam == "w":
        return W()
    if fam == "fgm":
        return FGM(_number(d, "theta"))
    if fam == "clayton":
        alpha = _number(d, "alpha")
        # continuous limit as alpha -> 0
        return Pi() if alpha == 0.0 else Clayton(alpha)
    if fam == "checkerboard":
        try:
            return Checkerboard(tuple(tuple(float(x) for x in row) for row in d["weights"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError("checkerboard needs a numeric 'weights' matrix") from None
    if fam == "transpose":
        if "inner" not in d:
            raise InvalidSpecError("transpose needs an 'inner' spec")
        return Transpose(spec_from_dict(d["inner"]))
    if fam == "product":
        from .lifting import ProductCopula

        return ProductCopula.from_dict(d)
    raise InvalidSpecError(f"unknown copula family {d['family']!r}")

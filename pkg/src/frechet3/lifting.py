"""C-product and C-lifting of bivariate copulas.

Both operators integrate the same integrand

    t -> C_t( dA(u1, t)/dt , dB(t, u3)/dt )

over ``t``: the product over all of [0, 1], the lifting over [0, u2].  The
mixing family ``{C_t}`` is piecewise constant in ``t`` (see ``FamilyPath``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .copulas import Copula2, InvalidSpecError, fd_partial, spec_from_dict
from .geometry import GridSpec, Order3Report, OrderReport, concordance_leq2, concordance_leq3
from .quadrature import QuadratureConfig, compact_breakpoints, insert_roots, integrate_rows

DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class FamilyPath:
    """Piecewise-constant family ``t -> C_t`` on [0, 1]."""

    breakpoints: tuple[float, ...]
    pieces: tuple[Copula2, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        pieces = tuple(self.pieces)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise InvalidSpecError("family breakpoints must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise InvalidSpecError("family breakpoints must be strictly increasing")
        if len(pieces) != len(bp) - 1:
            raise InvalidSpecError("a family needs one copula per interval")
        if not all(isinstance(p, Copula2) for p in pieces):
            raise InvalidSpecError("family pieces must be bivariate copulas")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def constant(cls, c: Copula2) -> "FamilyPath":
        return cls((0.0, 1.0), (c,))

    @property
    def is_constant(self) -> bool:
        return len(self.pieces) == 1

    @property
    def has_steps(self) -> bool:
        return any(p.has_steps for p in self.pieces)

    def piece_index(self, t) -> np.ndarray:
        inner = np.asarray(self.breakpoints[1:-1])
        return np.searchsorted(inner, np.asarray(t, dtype=float), side="right")

    def cdf(self, t, p, q) -> np.ndarray:
        """``C_t(p, q)`` elementwise."""
        if self.is_constant:
            return np.asarray(self.pieces[0].raw(p, q))
        t, p, q = np.broadcast_arrays(t, p, q)
        idx = self.piece_index(t)
        out = np.empty(t.shape)
        for j, c in enumerate(self.pieces):
            sel = idx == j
            if sel.any():
                out[sel] = c.raw(p[sel], q[sel])
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"breakpoints": list(self.breakpoints), "pieces": [p.to_dict() for p in self.pieces]}

    @classmethod
    def from_dict(cls, d: Any) -> "FamilyPath":
        """Accepts a family object or, as a shorthand, a single copula spec."""
        if isinstance(d, dict) and "family" in d:
            return cls.constant(spec_from_dict(d))
        if not isinstance(d, dict) or "breakpoints" not in d or "pieces" not in d:
            raise InvalidSpecError("family must have 'breakpoints' and 'pieces'")
        try:
            bp = tuple(float(b) for b in d["breakpoints"])
        except (TypeError, ValueError):
            raise InvalidSpecError("family breakpoints must be numbers") from None
        return cls(bp, tuple(spec_from_dict(p) for p in d["pieces"]))


def as_family(fam: FamilyPath | Copula2) -> FamilyPath:
    return fam if isinstance(fam, FamilyPath) else FamilyPath.constant(fam)


# geometric breakpoints toward t = 0 for conditionals with a power-law onset
_GRADING = 4.0 ** -np.arange(1, 16)


class _Integrand:
    """``t -> C_t(dA(u1,t)/dt, dB(t,u3)/dt)`` for a batch of (u1, u3) rows."""

    def __init__(self, a: Copula2, b: Copula2, fam: FamilyPath, u1: np.ndarray, u3: np.ndarray):
        self.a, self.b, self.fam = a, b, fam
        self.u1, self.u3 = u1, u3

    def _rowvals(self, x, rows, t):
        return x[rows].reshape((-1,) + (1,) * (t.ndim - 1))

    def partials(self, rows, t):
        u1 = self._rowvals(self.u1, rows, t)
        u3 = self._rowvals(self.u3, rows, t)
        return self.a.d2(u1, t), self.b.d1(t, u3)

    def __call__(self, rows, t):
        p, q = self.partials(rows, t)
        return self.fam.cdf(t, p, q)

    def kink_fns(self):
        """Row functions whose zeros are kinks of the integrand."""
        fns = []
        for j, c in enumerate(self.fam.pieces):
            for g in c.kinks():
                fns.append(self._masked(g, j))
        return fns

    def _masked(self, g, j):
        def fn(rows, t):
            p, q = self.partials(rows, t)
            val = np.asarray(g(p, q), dtype=float)
            if not self.fam.is_constant:
                val = np.where(self.fam.piece_index(t) == j, val, np.nan)
            return val

        return fn

    def breakpoints(self, upper: np.ndarray, cut: np.ndarray | None, quad: QuadratureConfig) -> np.ndarray:
        n = self.u1.size
        cols = [
            np.zeros((n, 1)),
            upper[:, None],
            self.a.d2_jumps(self.u1),
            self.b.d1_jumps(self.u3),
            np.broadcast_to(np.asarray(self.fam.breakpoints[1:-1]), (n, len(self.fam.breakpoints) - 2)),
            np.broadcast_to(np.asarray(quad.kinks), (n, len(quad.kinks))),
        ]
        if self.a.graded_at_zero or self.b.graded_at_zero:
            cols.append(np.broadcast_to(_GRADING, (n, _GRADING.size)))
        if cut is not None:
            cols.append(cut[:, None])
        bp = np.concatenate(cols, axis=1)
        bp = np.sort(np.clip(bp, 0.0, upper[:, None]), axis=1)
        for g in self.kink_fns():
            bp = insert_roots(g, bp)
        return compact_breakpoints(bp)


def _integrate(
    a: Copula2,
    b: Copula2,
    fam: FamilyPath | Copula2,
    u1,
    u3,
    upper,
    quad: QuadratureConfig | None,
    cut=None,
    adaptive: bool = True,
):
    fam = as_family(fam)
    quad = DEFAULT_QUAD if quad is None else quad
    arrays = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u3, upper)))
    shape = arrays[0].shape
    u1, u3, upper = (np.clip(x.reshape(-1), 0.0, 1.0) for x in arrays)
    if cut is not None:
        cut = np.clip(np.broadcast_to(np.asarray(cut, dtype=float), shape).reshape(-1), 0.0, 1.0)
        cut = np.minimum(cut, upper)
    f = _Integrand(a, b, fam, u1, u3)
    bp = f.breakpoints(upper, cut, quad)
    tol = quad.effective_tol(a.has_steps or b.has_steps)
    total, part = integrate_rows(f, bp, quad, tol=tol, cut=cut, adaptive=adaptive)
    total = total.reshape(shape)[()]
    if cut is None:
        return total
    return total, part.reshape(shape)[()]


def c_product(a: Copula2, b: Copula2, fam, u1, u3, quad: QuadratureConfig | None = None):
    """``(A *_C B)(u1, u3)``: integral of the mixed conditionals over [0, 1]."""
    return _integrate(a, b, fam, u1, u3, 1.0, quad)


def lift_and_product(a: Copula2, b: Copula2, fam, u1, u2, u3, quad: QuadratureConfig | None = None):
    """Lifting value at (u1, u2, u3) and product value at (u1, u3) from one integration."""
    total, part = _integrate(a, b, fam, u1, u3, 1.0, quad, cut=u2)
    return part, total


def c_lift(a: Copula2, b: Copula2, fam, u1, u2, u3, quad: QuadratureConfig | None = None):
    """``(A star_C B)(u1, u2, u3)``: the same integral taken over [0, u2]."""
    return _integrate(a, b, fam, u1, u3, u2, quad)


@dataclass(frozen=True)
class LiftedCopula3:
    """Trivariate copula ``A star_fam B`` evaluated by quadrature."""

    a: Copula2
    b: Copula2
    fam: FamilyPath
    quad: QuadratureConfig = field(default=DEFAULT_QUAD)

    def __post_init__(self):
        object.__setattr__(self, "fam", as_family(self.fam))

    def __call__(self, u1, u2, u3):
        return c_lift(self.a, self.b, self.fam, u1, u2, u3, self.quad)

    def product(self, u1, u3):
        return c_product(self.a, self.b, self.fam, u1, u3, self.quad)

    def to_dict(self) -> dict[str, Any]:
        return {"a": self.a.to_dict(), "b": self.b.to_dict(), "fam": self.fam.to_dict(), "quad": self.quad.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LiftedCopula3":
        try:
            return cls(
                spec_from_dict(d["a"]),
                spec_from_dict(d["b"]),
                FamilyPath.from_dict(d["fam"]),
                QuadratureConfig.from_dict(d.get("quad")),
            )
        except KeyError as exc:
            raise InvalidSpecError(f"lifted copula is missing {exc}") from None
        except TypeError as exc:
            raise InvalidSpecError(str(exc)) from None


class LiftMarginals(NamedTuple):
    m12: Any
    m13: Any
    m23: Any


def marginals_of_lift(lifted: LiftedCopula3) -> LiftMarginals:
    """The three bivariate marginals of a lifting, as vectorised callables."""
    return LiftMarginals(
        lambda u1, u2: lifted(u1, u2, 1.0),
        lambda u1, u3: lifted(u1, 1.0, u3),
        lambda u2, u3: lifted(1.0, u2, u3),
    )


@dataclass(frozen=True)
class ProductCopula(Copula2):
    """``A *_fam B`` as a bivariate copula in its own right.

    Values come from quadrature; partials from central differences on a
    fixed (non-adaptive) rule so that the difference quotient stays smooth.
    """

    a: Copula2
    b: Copula2
    fam: FamilyPath
    quad: QuadratureConfig = field(default=DEFAULT_QUAD)
    family = "product"

    def __post_init__(self):
        object.__setattr__(self, "fam", as_family(self.fam))

    def _cdf(self, u, v):
        return np.asarray(c_product(self.a, self.b, self.fam, u, v, self.quad))

    def _fixed(self, u, v):
        return np.asarray(_integrate(self.a, self.b, self.fam, u, v, 1.0, self.quad, adaptive=False))

    def d1(self, u, v):
        return np.clip(fd_partial(self._fixed, u, v, axis=0), 0.0, 1.0)[()]

    def d2(self, u, v):
        return np.clip(fd_partial(self._fixed, u, v, axis=1), 0.0, 1.0)[()]

    def to_dict(self):
        return {
            "family": self.family,
            "a": self.a.to_dict(),
            "b": self.b.to_dict(),
            "fam": self.fam.to_dict(),
            "quad": self.quad.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(spec_from_dict(d["a"]), spec_from_dict(d["b"]), FamilyPath.from_dict(d["fam"]),
                       QuadratureConfig.from_dict(d.get("quad")))
        except KeyError as exc:
            raise InvalidSpecError(f"product spec is missing {exc}") from None


def family_leq(fam: FamilyPath, fam2: FamilyPath, grid: GridSpec | int = 21) -> OrderReport:
    """Checks ``C_t <= C'_t`` on every common interval of the two families."""
    cuts = sorted(set(fam.breakpoints) | set(fam2.breakpoints))
    report = None
    for lo, hi in zip(cuts, cuts[1:]):
        t = 0.5 * (lo + hi)
        c = fam.pieces[int(fam.piece_index(t))]
        c2 = fam2.pieces[int(fam2.piece_index(t))]
        report = concordance_leq2(c.cdf, c2.cdf, grid)
        if not report.holds:
            break
    return report


def lift_concordance_compare(
    lifted: LiftedCopula3,
    lifted2: LiftedCopula3,
    grid: GridSpec | int = 11,
    tol: float | None = None,
) -> Order3Report:
    """Checks ``lifted <= lifted2`` in the trivariate concordance order on a grid.

    The two liftings must share A and B, and their families must already be
    ordered pointwise; otherwise ``ValueError``.
    """
    if lifted.a != lifted2.a or lifted.b != lifted2.b:
        raise ValueError("both liftings must share the same A and B")
    if not family_leq(lifted.fam, lifted2.fam):
        raise ValueError("the first family is not below the second pointwise")
    if tol is None:
        steps = lifted.a.has_steps or lifted.b.has_steps
        tol = 10 * max(lifted.quad.effective_tol(steps), lifted2.quad.effective_tol(steps))
    return concordance_leq3(lifted, lifted2, grid, tol)

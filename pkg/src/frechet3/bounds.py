"""Compatibility refutation and bounds on Frechet classes of trivariate copulas.

A triple ``(C12, C13, C23)`` can only be the bivariate marginals of one
trivariate copula if ``C13`` lies between the W- and M-products of ``C12`` and
``C23`` (and likewise for the two other arrangements).  Scanning a grid for a
violation therefore refutes compatibility; passing the scan proves nothing.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .copulas import Copula2, M, W, transpose2
from .geometry import GridSpec, cell_volumes, concordance_leq2, concordance_leq3  # noqa: F401
from .lifting import DEFAULT_QUAD, c_lift, c_product, lift_and_product
from .quadrature import QuadratureConfig

_W = W()
_M = M()


class Verdict(str, enum.Enum):
    REFUTED = "Refuted"
    NOT_REFUTED = "NotRefuted"


@dataclass
class Witness:
    point: tuple[float, float]
    value: float
    lower: float
    upper: float

    def to_dict(self) -> dict[str, Any]:
        return {"point": list(self.point), "value": self.value, "lower": self.lower, "upper": self.upper}


@dataclass
class CompatVerdict:
    status: Verdict
    witness: Witness | None
    grid: int
    tol: float
    check: str = "C13 in C(C12,C23)"
    n_violations: int = 0
    parts: list["CompatVerdict"] = field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return self.status is Verdict.REFUTED

    def to_dict(self) -> dict[str, Any]:
        out = {
            "status": self.status.value,
            "check": self.check,
            "grid": self.grid,
            "tol": self.tol,
            "n_violations": self.n_violations,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out


class IncompatibleTripleError(ValueError):
    """Raised when bounds are requested for a triple the grid scan refutes."""

    def __init__(self, verdict: CompatVerdict):
        w = verdict.witness
        super().__init__(
            f"triple is not compatible: {verdict.check} fails at {w.point} "
            f"(value {w.value:.12g} outside [{w.lower:.12g}, {w.upper:.12g}])"
        )
        self.verdict = verdict


def _tol(quad: QuadratureConfig, *specs: Copula2) -> float:
    return 10 * quad.effective_tol(any(s.has_steps for s in specs))


def product_bounds(c12: Copula2, c23: Copula2, u1, u3, quad: QuadratureConfig | None = None):
    """Sharp lower and upper bounds on any C13 compatible with C12 and C23."""
    lo = c_product(c12, c23, _W, u1, u3, quad)
    hi = c_product(c12, c23, _M, u1, u3, quad)
    return lo, hi


def lift_bounds(c12: Copula2, c23: Copula2, u1, u2, u3, quad: QuadratureConfig | None = None):
    """Sharp bounds on trivariate copulas with 12- and 23-marginals C12, C23."""
    lo = c_lift(c12, c23, _W, u1, u2, u3, quad)
    hi = c_lift(c12, c23, _M, u1, u2, u3, quad)
    return lo, hi


def check_pair_compat(
    c12: Copula2,
    c23: Copula2,
    c13: Copula2,
    grid: GridSpec | int = 21,
    quad: QuadratureConfig | None = None,
    tol: float | None = None,
    *,
    check: str = "C13 in C(C12,C23)",
) -> CompatVerdict:
    """Scans a grid for a point where C13 leaves the product bounds.

    The witness of a refutation is the point of largest violation.
    """
    quad = DEFAULT_QUAD if quad is None else quad
    g = GridSpec.of(grid)
    tol = _tol(quad, c12, c23) if tol is None else tol
    uu, vv = g.mesh(2)
    lo, hi = product_bounds(c12, c23, uu, vv, quad)
    val = np.asarray(c13.cdf(uu, vv))
    excess = np.maximum(lo - val, val - hi)
    bad = excess > tol
    if not bad.any():
        return CompatVerdict(Verdict.NOT_REFUTED, None, g.m, tol, check)
    k = np.unravel_index(int(np.argmax(excess)), excess.shape)
    w = Witness((float(uu[k]), float(vv[k])), float(val[k]), float(lo[k]), float(hi[k]))
    return CompatVerdict(Verdict.REFUTED, w, g.m, tol, check, int(bad.sum()))


def triple_rotations(c12: Copula2, c13: Copula2, c23: Copula2):
    """The three (A, B, target) arrangements, with C_ji taken as the transpose of C_ij."""
    return [
        ("C12 in C(C13,C32)", c13, transpose2(c23), c12),
        ("C13 in C(C12,C23)", c12, c23, c13),
        ("C23 in C(C21,C13)", transpose2(c12), c13, c23),
    ]


def check_triple_compat(
    c12: Copula2,
    c13: Copula2,
    c23: Copula2,
    grid: GridSpec | int = 21,
    quad: QuadratureConfig | None = None,
    tol: float | None = None,
) -> CompatVerdict:
    """Runs the pair check for all three arrangements of the triple."""
    parts = [
        check_pair_compat(a, b, target, grid, quad, tol, check=name)
        for name, a, b, target in triple_rotations(c12, c13, c23)
    ]
    refuting = [p for p in parts if p.refuted]
    g = GridSpec.of(grid)
    if not refuting:
        return CompatVerdict(Verdict.NOT_REFUTED, None, g.m, max(p.tol for p in parts), "all", 0, parts)
    worst = max(refuting, key=lambda p: max(p.witness.lower - p.witness.value, p.witness.value - p.witness.upper))
    return CompatVerdict(
        Verdict.REFUTED, worst.witness, g.m, worst.tol, worst.check,
        sum(p.n_violations for p in parts), parts,
    )


class Bounds(NamedTuple):
    lower: Any
    upper: Any


def cl_cu(c12: Copula2, c13: Copula2, c23: Copula2, u1, u2, u3, quad: QuadratureConfig | None = None) -> Bounds:
    """Lower and upper bounds on the Frechet class of a compatible triple.

    Each of the arrangements (1,2,3), (1,3,2), (2,1,3) contributes two lower
    and two upper candidates; no clamping is applied.
    """
    u = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u2, u3)))
    arrangements = [
        ((0, 1, 2), c12, c23, c13),
        ((0, 2, 1), c13, transpose2(c23), c12),
        ((1, 0, 2), transpose2(c12), c13, c23),
    ]
    lower, upper = [], []
    for (i, j, k), cij, cjk, cik in arrangements:
        lw, pw = lift_and_product(cij, cjk, _W, u[i], u[j], u[k], quad)
        lm, pm = lift_and_product(cij, cjk, _M, u[i], u[j], u[k], quad)
        cv = cik.cdf(u[i], u[k])
        lower += [lw, lm + cv - pm]
        upper += [lm, lw + cv - pw]
    return Bounds(np.max(lower, axis=0)[()], np.min(upper, axis=0)[()])


def joe_bounds(c12: Copula2, c13: Copula2, c23: Copula2, u1, u2, u3) -> Bounds:
    """The classical closed-form bounds built from the three marginals alone."""
    u1, u2, u3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u2, u3)))
    a = np.asarray(c12.cdf(u1, u2))
    b = np.asarray(c13.cdf(u1, u3))
    c = np.asarray(c23.cdf(u2, u3))
    fu = np.minimum.reduce([a, b, c, 1.0 - u1 - u2 - u3 + a + b + c])
    fl = np.maximum.reduce([np.zeros_like(a), a + b - u1, a + c - u2, b + c - u3])
    return Bounds(fl[()], fu[()])


@dataclass
class BoundsReport:
    """Both pairs of bounds on a 3-D grid, with the sandwich check."""

    points: np.ndarray
    fl: np.ndarray
    cl: np.ndarray
    cu: np.ndarray
    fu: np.ndarray
    tol: float
    violations: list[dict[str, Any]]
    max_gap_lower: float
    max_gap_upper: float
    argmax_gap_lower: tuple[float, ...]
    argmax_gap_upper: tuple[float, ...]
    cl_min_cell_volume: float
    cu_min_cell_volume: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> dict[str, Any]:
        return {
            "max_gap_lower": self.max_gap_lower,
            "max_gap_upper": self.max_gap_upper,
            "argmax_gap_lower": list(self.argmax_gap_lower),
            "argmax_gap_upper": list(self.argmax_gap_upper),
            "violations": self.violations,
            "tol": self.tol,
            "n_points": int(len(self.points)),
            "cl_min_cell_volume": self.cl_min_cell_volume,
            "cu_min_cell_volume": self.cu_min_cell_volume,
        }

    def to_csv(self, fh=None, fmt: str = ".12g") -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u1", "u2", "u3", "FL", "CL", "CU", "FU"])
        for row in np.column_stack([self.points, self.fl, self.cl, self.cu, self.fu]):
            w.writerow([format(float(x), fmt) for x in row])
        return fh.getvalue() if own else None


def improvement_report(
    c12: Copula2,
    c13: Copula2,
    c23: Copula2,
    grid: GridSpec | int = 11,
    quad: QuadratureConfig | None = None,
    tol: float | None = None,
    *,
    compat_grid: GridSpec | int = 21,
) -> BoundsReport:
    """Compares the lifting-based bounds with the classical ones over a grid.

    The triple must survive ``check_triple_compat`` first; otherwise
    ``IncompatibleTripleError`` carries the witness.
    """
    quad = DEFAULT_QUAD if quad is None else quad
    verdict = check_triple_compat(c12, c13, c23, compat_grid, quad)
    if verdict.refuted:
        raise IncompatibleTripleError(verdict)
    tol = _tol(quad, c12, c13, c23) if tol is None else tol
    g = GridSpec.of(grid)
    mesh = g.mesh(3)
    cl, cu = cl_cu(c12, c13, c23, *mesh, quad=quad)
    fl, fu = joe_bounds(c12, c13, c23, *mesh)
    pts = np.column_stack([m.reshape(-1) for m in mesh])
    flat = [np.asarray(x).reshape(-1) for x in (fl, cl, cu, fu)]
    f_l, c_l, c_u, f_u = flat

    violations = []
    for idx in np.flatnonzero((f_l - c_l > tol) | (c_u - f_u > tol)):
        violations.append({
            "index": int(idx),
            "point": pts[idx].tolist(),
            "FL": float(f_l[idx]), "CL": float(c_l[idx]),
            "CU": float(c_u[idx]), "FU": float(f_u[idx]),
        })
    gap_lo = c_l - f_l
    gap_hi = f_u - c_u
    klo, khi = int(np.argmax(gap_lo)), int(np.argmax(gap_hi))
    return BoundsReport(
        points=pts, fl=f_l, cl=c_l, cu=c_u, fu=f_u, tol=tol,
        violations=violations,
        max_gap_lower=float(gap_lo[klo]),
        max_gap_upper=float(gap_hi[khi]),
        argmax_gap_lower=tuple(pts[klo].tolist()),
        argmax_gap_upper=tuple(pts[khi].tolist()),
        cl_min_cell_volume=float(cell_volumes(np.asarray(cl)).min()),
        cu_min_cell_volume=float(cell_volumes(np.asarray(cu)).min()),
    )

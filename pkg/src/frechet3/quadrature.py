"""Composite Gauss-Legendre quadrature over piecewise-smooth integrands.

Integrands here are evaluated for many independent rows at once (one row per
evaluation point of a copula).  Each row carries its own sorted breakpoints;
the rule is applied on every piece between consecutive breakpoints, so jumps
and kinks never fall inside a panel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

RowFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

# evaluations per chunk of rows; bounds peak memory of the node arrays
_CHUNK_EVALS = 2_000_000


class QuadratureError(ArithmeticError):
    """Panel doubling hit its cap before the error estimate met tolerance."""

    def __init__(self, message: str, rows=None, estimates=None, errors=None):
        super().__init__(message)
        self.rows = rows
        self.estimates = estimates
        self.errors = errors


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = 16
    panels: int = 32
    tol: float = 1e-8
    kinks: tuple[float, ...] = field(default=())
    max_panels: int = 4096
    step_tol: float = 1e-6

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("quadrature needs at least 2 nodes per panel")
        if self.panels < 1:
            raise ValueError("quadrature needs at least 1 panel")
        if not self.tol > 0:
            raise ValueError("quadrature tolerance must be positive")
        if self.max_panels < self.panels:
            raise ValueError("max_panels must be >= panels")
        object.__setattr__(self, "kinks", tuple(float(k) for k in self.kinks))

    def effective_tol(self, has_steps: bool) -> float:
        return max(self.tol, self.step_tol) if has_steps else self.tol

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": self.nodes,
            "panels": self.panels,
            "tol": self.tol,
            "kinks": list(self.kinks),
            "max_panels": self.max_panels,
            "step_tol": self.step_tol,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> "QuadratureConfig":
        d = dict(d or {})
        d["kinks"] = tuple(d.get("kinks", ()))
        return cls(**d)


@lru_cache(maxsize=64)
def _rule(nodes: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Node offsets in [0, 1] and unit-interval weights of the composite rule."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    base = np.arange(panels)[:, None]
    s = ((base + 0.5 * (x + 1.0)) / panels).ravel()
    wt = np.tile(0.5 * w, panels) / panels
    return s, wt


def _pieces(f: RowFn, rows: np.ndarray, bp: np.ndarray, nodes: int, panels: int) -> np.ndarray:
    """Per-piece integrals, shape ``(len(rows), K)`` for ``K+1`` breakpoints."""
    s, wt = _rule(nodes, panels)
    a = bp[:, :-1]
    width = bp[:, 1:] - a
    out = np.empty(a.shape)
    step = max(1, _CHUNK_EVALS // max(1, a.shape[1] * s.size))
    for lo in range(0, len(rows), step):
        sl = slice(lo, lo + step)
        t = a[sl, :, None] + width[sl, :, None] * s
        vals = f(rows[sl], t)
        out[sl] = (vals * wt).sum(axis=-1) * width[sl]
    return np.where(width > 0, out, 0.0)


def integrate_rows(
    f: RowFn,
    bp: np.ndarray,
    config: QuadratureConfig,
    *,
    tol: float | None = None,
    cut: np.ndarray | None = None,
    adaptive: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Integrate ``f`` row by row over ``[bp[:, 0], bp[:, -1]]``.

    ``f(rows, t)`` evaluates the integrand of the given rows at ``t``, an array
    whose leading axis matches ``rows``.  With ``cut`` (which must appear among
    each row's breakpoints) the integral over ``[bp[:, 0], cut]`` is returned
    as well.

    Accuracy is judged by comparing the rule with ``panels // 2`` and
    ``panels`` panels per piece; rows that disagree by more than ``tol`` are
    redone with doubled panels until ``max_panels``.
    """
    bp = np.asarray(bp, dtype=float)
    n = bp.shape[0]
    tol = config.tol if tol is None else tol
    rows = np.arange(n)
    below = None
    if cut is not None:
        below = bp[:, 1:] <= np.asarray(cut, dtype=float)[:, None]

    def sums(per):
        tot = per.sum(axis=1)
        part = None if below is None else np.where(below[idx], per, 0.0).sum(axis=1)
        return tot, part

    panels = config.panels
    idx = rows
    fine = _pieces(f, idx, bp, config.nodes, panels)
    total, part = sums(fine)
    if not adaptive:
        return total, part

    if panels >= 2:
        coarse_total, coarse_part = sums(_pieces(f, idx, bp, config.nodes, panels // 2))
        err = np.abs(total - coarse_total)
        if part is not None:
            err = np.maximum(err, np.abs(part - coarse_part))
    else:
        # a single panel has nothing to compare against; force one doubling
        err = np.full(n, np.inf)

    total = total.copy()
    part = None if part is None else part.copy()
    bad = np.flatnonzero(~(err <= tol))
    while bad.size:
        if panels * 2 > config.max_panels:
            raise QuadratureError(
                f"quadrature did not converge at {bad.size} point(s) with {panels} panels "
                f"per piece (worst error estimate {np.nanmax(err[bad]):.3g}, tol {tol:.3g})",
                rows=bad,
                estimates=total[bad],
                errors=err[bad],
            )
        panels *= 2
        idx = bad
        prev_t, prev_p = total[bad], None if part is None else part[bad]
        new_t, new_p = sums(_pieces(f, idx, bp[bad], config.nodes, panels))
        e = np.abs(new_t - prev_t)
        if new_p is not None:
            e = np.maximum(e, np.abs(new_p - prev_p))
            part[bad] = new_p
        total[bad] = new_t
        err[bad] = e
        bad = bad[~(e <= tol)]
    return total, part


def insert_roots(
    g: RowFn,
    bp: np.ndarray,
    *,
    samples: int = 32,
    iters: int = 60,
) -> np.ndarray:
    """Add zeros of ``g`` found inside each piece to the breakpoint rows.

    ``g`` is sampled at ``samples + 1`` points per piece (just inside the piece
    ends) and every sign change is refined by bisection.  Rows are padded with
    their upper endpoint, which only adds zero-width pieces.
    """
    n, k1 = bp.shape
    rows = np.arange(n)
    a = bp[:, :-1]
    width = bp[:, 1:] - a
    s = np.linspace(0.0, 1.0, samples + 1)
    s[0], s[-1] = 1e-13, 1.0 - 1e-13
    t = a[:, :, None] + width[:, :, None] * s
    with np.errstate(invalid="ignore"):
        vals = g(rows, t)
        live = (width > 0)[:, :, None]
        change = (vals[..., :-1] * vals[..., 1:] < 0) & live
        # a sampled zero is a root only where the sign actually changes across it
        exact = (vals[..., 1:-1] == 0) & (vals[..., :-2] * vals[..., 2:] < 0) & live
    r_c, p_c, k_c = np.nonzero(change)
    r_e, p_e, k_e = np.nonzero(exact)
    roots_r = [r_e]
    roots_t = [t[r_e, p_e, k_e + 1]]
    if r_c.size:
        lo = t[r_c, p_c, k_c]
        hi = t[r_c, p_c, k_c + 1]
        sign_lo = np.sign(vals[r_c, p_c, k_c])
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            gm = g(r_c, mid[:, None])[:, 0]
            same = np.sign(gm) == sign_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        roots_r.append(r_c)
        roots_t.append(0.5 * (lo + hi))
    rr = np.concatenate(roots_r)
    rt = np.concatenate(roots_t)
    if rr.size == 0:
        return bp
    counts = np.bincount(rr, minlength=n)
    extra = np.repeat(bp[:, -1:], counts.max(), axis=1)
    order = np.argsort(rr, kind="stable")
    rr, rt = rr[order], rt[order]
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    pos = np.arange(rr.size) - starts[rr]
    extra[rr, pos] = rt
    return np.sort(np.concatenate([bp, extra], axis=1), axis=1)


def compact_breakpoints(bp: np.ndarray) -> np.ndarray:
    """Drops repeated breakpoints so rows carry as few zero-width pieces as possible."""
    bp = np.sort(bp, axis=1)
    dup = np.zeros(bp.shape, dtype=bool)
    dup[:, 1:] = bp[:, 1:] == bp[:, :-1]
    keep = (~dup).sum(axis=1)
    width = max(2, int(keep.max()))
    out = np.where(dup, np.inf, bp)
    out = np.sort(out, axis=1)[:, :width]
    return np.where(np.isinf(out), bp[:, -1:], out)

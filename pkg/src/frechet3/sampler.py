"""Monte Carlo sampling from liftings by the conditional-distribution method.

A draw picks ``u2 = t`` uniformly, a pair ``(p, q)`` from the mixing copula
``C_t``, and then inverts the conditional dfs of A and B at ``t``:

    u1 = inf{u : dA(u, t)/dt >= p},    u3 = inf{v : dB(t, v)/dt >= q}.

Batches are split into fixed-size chunks, each driven by a Philox generator
seeded with ``(seed, chunk_id)``; the output therefore does not depend on how
many workers process the chunks.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .copulas import Copula2
from .geometry import GridSpec
from .lifting import FamilyPath, LiftedCopula3

CHUNK_SIZE = 1 << 16


def parse_seed(seed: int | str) -> int:
    """Seeds are given as integers, decimal strings or 0x-prefixed hex strings."""
    if isinstance(seed, (int, np.integer)):
        value = int(seed)
    else:
        text = str(seed).strip().lower()
        value = int(text, 16) if text.startswith("0x") else int(text, 10)
    if value < 0:
        raise ValueError("seed must be nonnegative")
    return value


def chunk_rng(seed: int, chunk_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk_id])))


def inverse_conditional(a: Copula2, t, p):
    """Smallest ``u`` with ``dA(u, t)/dt >= p``."""
    return a.inv_d2(t, p)


def sample_family_pair(c: Copula2, rng: np.random.Generator, n: int | None = None):
    """Draws ``(p, q)`` distributed according to ``c``."""
    size = 1 if n is None else n
    p = rng.random(size)
    w = 1.0 - rng.random(size)
    q = np.asarray(c.sample_given(p, w), dtype=float)
    if n is None:
        return float(p[0]), float(q[0])
    return p, q


def _family_pairs(fam: FamilyPath, t: np.ndarray, rng: np.random.Generator):
    p = rng.random(t.size)
    w = 1.0 - rng.random(t.size)
    if fam.is_constant:
        return p, np.asarray(fam.pieces[0].sample_given(p, w), dtype=float)
    idx = fam.piece_index(t)
    q = np.empty_like(p)
    for j, c in enumerate(fam.pieces):
        sel = idx == j
        if sel.any():
            q[sel] = c.sample_given(p[sel], w[sel])
    return p, q


def _draw_chunk(lifted: LiftedCopula3, n: int, seed: int, chunk_id: int) -> np.ndarray:
    rng = chunk_rng(seed, chunk_id)
    t = rng.random(n)
    p, q = _family_pairs(lifted.fam, t, rng)
    u1 = lifted.a.inv_d2(t, p)
    u3 = lifted.b.inv_d1(t, q)
    return np.column_stack([u1, t, u3])


@dataclass
class SampleBatch:
    samples: np.ndarray
    seed: int
    lifted: LiftedCopula3

    def __len__(self):
        return len(self.samples)

    def to_csv(self, fh=None) -> str | None:
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u1", "u2", "u3"])
        for row in self.samples:
            w.writerow([repr(float(x)) for x in row])
        return fh.getvalue() if own else None


def sample_lift(lifted: LiftedCopula3, n: int, seed: int | str = 0, *, workers: int = 1) -> SampleBatch:
    if n < 1:
        raise ValueError("need at least one draw")
    seed = parse_seed(seed)
    sizes = [min(CHUNK_SIZE, n - lo) for lo in range(0, n, CHUNK_SIZE)]
    jobs = [(lifted, size, seed, k) for k, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _draw_chunk(*job), jobs))
    else:
        parts = [_draw_chunk(*job) for job in jobs]
    return SampleBatch(np.clip(np.concatenate(parts), 0.0, 1.0), seed, lifted)


class EmpiricalCopula3:
    """Empirical copula of a sample, built from normalised ranks."""

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise ValueError("samples must have shape (n, 3)")
        self.n = len(samples)
        self.pseudo = stats.rankdata(samples, method="max", axis=0) / self.n

    def __call__(self, u1, u2, u3):
        u1, u2, u3 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u2, u3)))
        out = np.empty(u1.shape)
        x = self.pseudo
        for k, (a, b, c) in enumerate(zip(u1.reshape(-1), u2.reshape(-1), u3.reshape(-1))):
            out.reshape(-1)[k] = np.count_nonzero((x[:, 0] <= a) & (x[:, 1] <= b) & (x[:, 2] <= c))
        return (out / self.n)[()]

    def on_grid(self, grid: GridSpec | int, axes: tuple[int, ...] = (0, 1, 2)) -> np.ndarray:
        """Empirical df (or a marginal of it) at every point of a full grid."""
        g = GridSpec.of(grid)
        pts = g.points
        # smallest grid index whose value is >= the observation
        idx = np.searchsorted(pts, self.pseudo[:, list(axes)] - 1e-12, side="left")
        counts = np.zeros((g.m,) * len(axes))
        np.add.at(counts, tuple(idx.T), 1.0)
        for ax in range(len(axes)):
            counts = np.cumsum(counts, axis=ax)
        return counts / self.n


@dataclass
class DistanceReport:
    sup_distance: float
    argmax: tuple[float, ...]
    n: int
    grid: int


def empirical_vs_analytic(lifted: LiftedCopula3, batch: SampleBatch, grid: GridSpec | int = 11) -> DistanceReport:
    """Largest gap over a grid between the batch's empirical copula and ``lifted``."""
    g = GridSpec.of(grid)
    emp = EmpiricalCopula3(batch.samples).on_grid(g)
    mesh = g.mesh(3)
    exact = np.asarray(lifted(*mesh))
    diff = np.abs(emp - exact)
    k = int(np.argmax(diff))
    return DistanceReport(float(diff.reshape(-1)[k]), tuple(float(m.reshape(-1)[k]) for m in mesh), len(batch), g.m)


def ks_uniform(x: np.ndarray) -> float:
    """Kolmogorov distance between the sample df of ``x`` and the uniform df."""
    return float(stats.kstest(np.asarray(x, dtype=float), "uniform").statistic)

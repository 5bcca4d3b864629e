"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (see conftest) before asserting.
"""

import time

import numpy as np

from frechet3 import (
    FGM,
    M,
    Pi,
    W,
    Clayton,
    Checkerboard,
    FamilyPath,
    LiftedCopula3,
    Transpose,
    c_product,
    check_pair_compat,
    check_triple_compat,
    improvement_report,
    lift_concordance_compare,
    marginals_of_lift,
    product_bounds,
    sample_lift,
    empirical_vs_analytic,
)
from frechet3.geometry import GridSpec, grid_volumes
from frechet3.sampler import EmpiricalCopula3
from oracles import riemann_integral

C12 = FGM(1.0)  # u v + u v (1-u)(1-v)
FAMILIES = {"W": W(), "Pi": Pi(), "M": M()}
BASE = [Pi(), FGM(1.0), Clayton(2.0)]


def nine_lifts():
    """A over the three base copulas, B the next one cyclically, times three families."""
    out = []
    for i, a in enumerate(BASE):
        b = BASE[(i + 1) % 3]
        for name, fam in FAMILIES.items():
            out.append((f"{a!r}*{name}*{b!r}", LiftedCopula3(a, b, FamilyPath.constant(fam))))
    return out


def test_criterion_1_product_value(criterion):
    t0 = time.perf_counter()
    value = float(c_product(C12, Pi(), M(), 0.5, 0.5))
    dt = time.perf_counter() - t0
    ok = abs(value - 7 / 16) <= 1e-6 and dt < 1.0
    criterion(1, "(C12 *_M Pi)(1/2,1/2) = 7/16", ok, f"value={value:.12g}, runtime={dt:.3f}s")
    assert ok


def test_criterion_2_refutations(criterion):
    triple = check_triple_compat(C12, Clayton(20.0), Pi(), grid=21)
    pair = check_pair_compat(C12, Pi(), Clayton(20.0), grid=21)
    near = all(abs(x - 0.5) <= 0.1 for x in pair.witness.point) and all(
        abs(x - 0.5) <= 0.1 for x in triple.witness.point
    )
    www = check_triple_compat(W(), W(), W(), grid=21)
    lo, hi = product_bounds(W(), W(), 0.5, 0.5)
    ok = triple.refuted and pair.refuted and near and www.refuted and abs(lo - 0.5) <= 1e-6
    criterion(
        2,
        "refutation of (C12, Clayton(20), Pi) and (W,W,W)",
        ok,
        f"witnesses triple={triple.witness.point} pair={pair.witness.point}, W lower bound={float(lo):.12g}",
    )
    assert ok


def test_criterion_3_marginal_identities(criterion):
    t0 = time.perf_counter()
    g = GridSpec(21)
    uu, vv = g.mesh(2)
    worst = 0.0
    for _, lifted in nine_lifts():
        m12, m13, m23 = marginals_of_lift(lifted)
        worst = max(
            worst,
            np.abs(m12(uu, vv) - lifted.a.cdf(uu, vv)).max(),
            np.abs(m13(uu, vv) - lifted.product(uu, vv)).max(),
            np.abs(m23(uu, vv) - lifted.b.cdf(uu, vv)).max(),
        )
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 120
    criterion(3, "lifting marginals are A, A*B, B (9 combos, 21^2)", ok, f"max error={worst:.3g}, runtime={dt:.1f}s")
    assert ok


def test_criterion_4_unit_law(criterion):
    uu, vv = GridSpec(21).mesh(2)
    specs = [
        Pi(), M(), W(), FGM(1.0), FGM(-0.7), Clayton(2.0), Clayton(0.5),
        Checkerboard(((0.2, 0.05, 0.0833333333333333), (0.05, 0.2, 0.0833333333333334), (0.0833333333333334, 0.0833333333333333, 0.1666666666666666))),
        Transpose(Clayton(3.0)),
    ]
    worst = 0.0
    for a in specs:
        for fam in FAMILIES.values():
            worst = max(worst, np.abs(c_product(a, M(), fam, uu, vv) - a.cdf(uu, vv)).max())
    ok = worst <= 1e-6
    criterion(4, "A *_fam M = A on 21^2 grids", ok, f"max error={worst:.3g} over {len(specs) * 3} cases")
    assert ok


def test_criterion_5_three_increasing(criterion):
    mesh = GridSpec(11).mesh(3)
    lifts = nine_lifts() + [
        ("W*piecewise*M", LiftedCopula3(W(), M(), FamilyPath((0.0, 0.4, 1.0), (M(), W())))),
        ("Transpose(Clayton3)*M*FGM", LiftedCopula3(Transpose(Clayton(3.0)), FGM(-0.5), M())),
    ]
    worst, where = np.inf, ""
    for name, lifted in lifts:
        v = grid_volumes(np.asarray(lifted(*mesh))).min()
        if v < worst:
            worst, where = v, name
    ok = worst >= -1e-6
    criterion(5, "box volumes of liftings >= -1e-6 on 11^3", ok, f"min volume={worst:.3g} ({where}), {len(lifts)} liftings")
    assert ok


def test_criterion_6_concordance_monotone(criterion):
    lw, lp, lm = (LiftedCopula3(Pi(), Pi(), f) for f in (W(), Pi(), M()))
    first = lift_concordance_compare(lw, lp, grid=11, tol=1e-6)
    second = lift_concordance_compare(lp, lm, grid=11, tol=1e-6)
    n_bad = sum(r.plain.n_violations + r.survival.n_violations for r in (first, second))
    ok = first.holds and second.holds and n_bad == 0
    criterion(6, "Pi*_W Pi <= Pi*_Pi Pi <= Pi*_M Pi (plain + survival)", ok, f"violations={n_bad}")
    assert ok


# gap at (1/2,1/2,2/5) worked by hand: C_L = 0.0225 and F_L = 0.0125
CONSTRUCTED_GAP = 0.01


def test_criterion_7_bound_improvement(criterion):
    # the 13-marginal of the constructed triple is FGM(1) *_Pi Pi, which is Pi
    uu, vv = GridSpec(21).mesh(2)
    constructed_err = np.abs(c_product(C12, Pi(), Pi(), uu, vv) - uu * vv).max()
    triples = {
        "(Pi,Pi,Pi)": (Pi(), Pi(), Pi()),
        "(FGM(1), FGM(1)*Pi, Pi)": (C12, Pi(), Pi()),
        "(FGM(1), FGM(1/3), FGM(1))": (C12, FGM(1 / 3), C12),
    }
    reports = {name: improvement_report(*t, grid=11, tol=1e-6) for name, t in triples.items()}
    sandwich = all(r.ok for r in reports.values())
    pi = reports["(Pi,Pi,Pi)"]
    pi_gap = max(pi.max_gap_lower, pi.max_gap_upper)
    built = reports["(FGM(1), FGM(1)*Pi, Pi)"]
    built_gap = max(built.max_gap_lower, built.max_gap_upper)
    ok = (
        constructed_err <= 1e-6
        and sandwich
        and pi_gap < 1e-6
        and built_gap > 1e-4
        and abs(built.max_gap_lower - CONSTRUCTED_GAP) <= 1e-6
    )
    criterion(
        7,
        "F_L <= C_L, C_U <= F_U; coincidence for Pi; strict gain for constructed triple",
        ok,
        f"Pi gap={pi_gap:.3g}, constructed gap={built_gap:.12g} at {built.argmax_gap_lower}, "
        f"violations={sum(len(r.violations) for r in reports.values())}",
    )
    assert ok


def test_criterion_8_monte_carlo(criterion):
    t0 = time.perf_counter()
    lifted = LiftedCopula3(Pi(), Pi(), M())
    batch = sample_lift(lifted, 100_000, seed=20240501)
    dist = empirical_vs_analytic(lifted, batch, grid=11)
    ex = LiftedCopula3(C12, Pi(), M())
    ex_batch = sample_lift(ex, 100_000, seed=7)
    emp13 = float(EmpiricalCopula3(ex_batch.samples)(0.5, 1.0, 0.5))
    dt = time.perf_counter() - t0
    ok = dist.sup_distance < 0.02 and abs(emp13 - 7 / 16) <= 0.005 and dt < 60
    criterion(
        8,
        "Monte Carlo agrees with analytic liftings",
        ok,
        f"sup distance={dist.sup_distance:.4f}, empirical 13-marginal={emp13:.5f}, runtime={dt:.1f}s",
    )
    assert ok


def _random_case(rng):
    pool = [
        Pi(), M(), W(), FGM(rng.uniform(-1, 1)), Clayton(rng.uniform(0.3, 5)),
        Transpose(Clayton(rng.uniform(0.3, 5))),
        Checkerboard(((0.3, 0.2), (0.2, 0.3))),
    ]
    a = pool[rng.integers(len(pool))]
    b = pool[rng.integers(len(pool))]
    fams = [W(), Pi(), M(), FGM(rng.uniform(-1, 1)), Clayton(rng.uniform(0.3, 5))]
    if rng.random() < 0.3:
        cut = float(np.round(rng.uniform(0.2, 0.8), 3))
        fam = FamilyPath((0.0, cut, 1.0), (fams[rng.integers(5)], fams[rng.integers(5)]))
    else:
        fam = FamilyPath.constant(fams[rng.integers(5)])
    return a, b, fam, rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)


def test_criterion_9_quadrature_oracle(criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        a, b, fam, u1, u3 = _random_case(rng)
        pieces = [(lo, hi, c) for lo, hi, c in zip(fam.breakpoints, fam.breakpoints[1:], fam.pieces)]
        ref = riemann_integral(a, b, pieces, u1, u3, n=10**6)
        worst = max(worst, abs(float(c_product(a, b, fam, u1, u3)) - ref))
    ok = worst <= 1e-6
    criterion(9, "c_product vs 1e6-panel midpoint sum (20 cases)", ok, f"max difference={worst:.3g}")
    assert ok

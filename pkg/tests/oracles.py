"""Brute-force references kept independent of the quadrature path."""

import numpy as np


def riemann_integral(a, b, fam_pieces, u1, u3, upper=1.0, n=10**6):
    """Midpoint sum of t -> C_t(dA(u1,t)/dt, dB(t,u3)/dt) over [0, upper].

    ``fam_pieces`` is a list of (start, end, copula) triples covering [0, 1].
    """
    t = (np.arange(n) + 0.5) * (upper / n)
    p = np.asarray(a.d2(u1, t), dtype=float)
    q = np.asarray(b.d1(t, u3), dtype=float)
    vals = np.empty(n)
    for lo, hi, c in fam_pieces:
        sel = (t >= lo) & (t < hi) if hi < 1.0 else (t >= lo)
        vals[sel] = c.cdf(p[sel], q[sel])
    return float(vals.sum() * (upper / n))


def constant(c):
    return [(0.0, 1.0, c)]

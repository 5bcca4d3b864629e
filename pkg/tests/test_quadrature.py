import numpy as np
import pytest
from numpy.testing import assert_allclose

from frechet3 import Clayton, FGM, Pi, QuadratureConfig, QuadratureError, c_product
from frechet3.quadrature import compact_breakpoints, insert_roots, integrate_rows


def poly(rows, t):
    return 5 * t**4 + 0 * rows[:, None, None]


def test_integrates_polynomials_exactly():
    bp = np.array([[0.0, 1.0], [0.0, 0.5]])
    total, part = integrate_rows(poly, bp, QuadratureConfig())
    assert_allclose(total, [1.0, 0.5**5], rtol=1e-14)
    assert part is None


def test_cut_returns_the_partial_integral():
    bp = np.array([[0.0, 0.3, 1.0], [0.0, 0.6, 1.0]])
    total, part = integrate_rows(poly, bp, QuadratureConfig(), cut=np.array([0.3, 0.6]))
    assert_allclose(total, [1.0, 1.0], rtol=1e-14)
    assert_allclose(part, [0.3**5, 0.6**5], rtol=1e-13)


def test_step_integrand_is_exact_when_split_at_the_jump():
    step = lambda rows, t: (t > 0.37).astype(float)  # noqa: E731
    bp = np.array([[0.0, 0.37, 1.0]])
    total, _ = integrate_rows(step, bp, QuadratureConfig())
    assert_allclose(total, [0.63], rtol=1e-15)


def test_insert_roots_finds_sign_changes_per_row():
    roots = np.array([0.25, 0.8])

    def g(rows, t):
        return t - roots[rows].reshape((-1,) + (1,) * (t.ndim - 1))

    bp = np.array([[0.0, 1.0], [0.0, 1.0]])
    out = insert_roots(g, bp)
    assert_allclose(out[0, 1], 0.25, atol=1e-14)
    assert_allclose(out[1, 1], 0.8, atol=1e-14)


def test_identically_zero_kink_function_adds_no_breakpoints():
    g = lambda rows, t: np.zeros_like(t)  # noqa: E731
    bp = np.array([[0.0, 1.0]])
    assert compact_breakpoints(insert_roots(g, bp)).shape[1] == 2


def test_compact_breakpoints_drops_duplicates_but_keeps_ends():
    bp = np.array([[0.0, 0.0, 0.5, 0.5, 1.0], [0.0, 0.2, 0.4, 1.0, 1.0]])
    out = compact_breakpoints(bp)
    assert out.shape[1] == 4
    assert_allclose(out[:, 0], 0.0)
    assert_allclose(out[:, -1], 1.0)
    assert set(out[0]) == {0.0, 0.5, 1.0}


def test_non_convergence_raises_with_diagnostics():
    quad = QuadratureConfig(nodes=2, panels=1, max_panels=2, tol=1e-15)
    with pytest.raises(QuadratureError) as info:
        c_product(FGM(0.9), Clayton(0.3), Clayton(4.0), np.array([0.2, 0.7]), 0.4, quad)
    assert info.value.rows is not None and len(info.value.errors) >= 1


@pytest.mark.parametrize("kw", [{"nodes": 1}, {"panels": 0}, {"tol": 0.0}, {"panels": 64, "max_panels": 32}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        QuadratureConfig(**kw)


def test_config_round_trip_and_relaxed_tolerance():
    q = QuadratureConfig(nodes=8, panels=16, tol=1e-9, kinks=(0.5,))
    assert QuadratureConfig.from_dict(q.to_dict()) == q
    assert q.effective_tol(False) == 1e-9
    assert q.effective_tol(True) == 1e-6


def test_registered_kinks_do_not_change_smooth_results():
    plain = c_product(FGM(0.4), Clayton(2.0), Pi(), 0.3, 0.6)
    split = c_product(FGM(0.4), Clayton(2.0), Pi(), 0.3, 0.6, QuadratureConfig(kinks=(0.1, 0.5, 0.9)))
    assert_allclose(plain, split, atol=1e-12)

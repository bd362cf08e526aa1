import numpy as np
import pytest

from taildep import CubatureSpec, integrate_cube


def test_constant_is_exact():
    spec = CubatureSpec(dim=3, max_points=2**10)
    res = integrate_cube(lambda p: np.ones(len(p)), spec)
    assert res.value == pytest.approx(1.0, abs=1e-15)
    assert res.error == pytest.approx(0.0, abs=1e-15)


def test_product_integral():
    spec = CubatureSpec(dim=3, max_points=2**14)
    res = integrate_cube(lambda p: p.prod(axis=1), spec)
    assert res.value == pytest.approx(0.125, abs=1e-8)


def test_kinked_integrand_matches_monte_carlo():
    # the logistic stdf integrand at theta = 0.5
    f = lambda p: np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2)
    spec = CubatureSpec(dim=2, max_points=2**14)
    res = integrate_cube(f, spec)
    rng = np.random.default_rng(1234)
    draws = f(rng.random((10**6, 2)))
    mc, se = draws.mean(), draws.std() / 1000.0
    assert abs(float(res.value) - mc) < 3 * se


def test_vector_integrand():
    spec = CubatureSpec(dim=2, max_points=2**12)
    res = integrate_cube(lambda p: np.stack([p[:, 0], p[:, 0] * p[:, 1]], axis=1), spec)
    assert res.value == pytest.approx([0.5, 0.25], abs=1e-6)


def test_bit_reproducible():
    spec = CubatureSpec(dim=4, max_points=2**12)
    f = lambda p: np.exp(p.sum(axis=1))
    a = integrate_cube(f, spec)
    b = integrate_cube(f, spec)
    assert float(a.value) == float(b.value)
    assert float(a.error) == float(b.error)


def test_budget_flag_and_error_decay():
    # oscillatory integrand: small budget cannot reach 1e-10 relative error
    f = lambda p: np.sin(40 * p[:, 0]) * np.cos(23 * p[:, 1]) + 2.0
    tight = CubatureSpec(dim=2, rel_tol=1e-10, max_points=2**10)
    res_small = integrate_cube(f, tight)
    assert not res_small.converged
    bigger = CubatureSpec(dim=2, rel_tol=1e-10, max_points=2**16, min_points=2**16)
    res_big = integrate_cube(f, bigger)
    # doubling budget should not make the reported error much worse
    assert float(res_big.error) <= 1.2 * float(res_small.error)


def test_fixed_spec_single_pass():
    spec = CubatureSpec(dim=2, max_points=2**12).fixed()
    assert spec.min_points == spec.max_points == 2**12
    res = integrate_cube(lambda p: p[:, 0], spec)
    assert res.points == 2**12

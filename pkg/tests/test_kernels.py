import numpy as np

from servoguard._kernels import (NUMBA_ENABLED, hermite_eval, hermite_eval_numpy,
                                 hermite_eval_uniform, hermite_eval_uniform_numpy,
                                 kernel_backend, lowrank_prox_gradient,
                                 lowrank_prox_gradient_numpy, monotone_slopes,
                                 monotone_slopes_numpy)


def test_backend_is_reported():
    assert kernel_backend() in ("numba", "numpy")
    assert (kernel_backend() == "numba") == NUMBA_ENABLED


def test_slopes_agree_across_backends():
    rng = np.random.default_rng(61)
    for _ in range(25):
        m = int(rng.integers(2, 12))
        knots = np.cumsum(rng.uniform(0.2, 2, m))
        values = rng.normal(size=m)
        a = monotone_slopes(knots, values)
        b = monotone_slopes_numpy(knots, values)
        assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_hermite_eval_agrees_across_backends():
    rng = np.random.default_rng(62)
    knots = np.cumsum(rng.uniform(0.3, 1.5, 9))
    values = rng.normal(size=9)
    slopes = monotone_slopes_numpy(knots, values)
    queries = rng.uniform(knots[0] - 1, knots[-1] + 1, 200)
    a = hermite_eval(knots, values, slopes, queries)
    b = hermite_eval_numpy(knots, values, slopes, queries)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_uniform_eval_agrees_across_backends():
    rng = np.random.default_rng(63)
    values = rng.normal(size=12)
    knots = np.arange(12.0)
    slopes = monotone_slopes_numpy(knots, values)
    a = hermite_eval_uniform(values, slopes, 8)
    b = hermite_eval_uniform_numpy(values, slopes, 8)
    assert np.allclose(a, b, rtol=0, atol=1e-14)
    assert a.shape[0] == 8 * 11 + 1


def test_prox_gradient_agrees_across_backends():
    rng = np.random.default_rng(64)
    x = rng.normal(size=(5, 4)) * 1.5
    a_obj, a_r = lowrank_prox_gradient(x, 1.0, 500)
    b_obj, b_r = lowrank_prox_gradient_numpy(x, 1.0, 500)
    assert abs(a_obj - b_obj) <= 1e-10
    assert np.allclose(a_r, b_r, rtol=0, atol=1e-10)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vortexrings.errors import QuadratureError
from vortexrings.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, integrate, integrate_panels


def test_weights_sum_to_two():
    assert math.isclose(KRONROD_WEIGHTS.sum(), 2.0, rel_tol=1e-15)
    assert math.isclose(GAUSS_WEIGHTS.sum(), 2.0, rel_tol=1e-15)
    assert np.all(NODES[:-1] < NODES[1:])


@pytest.mark.parametrize("deg", range(0, 23))
def test_kronrod_exact_to_degree_22(deg):
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert abs(KRONROD_WEIGHTS @ NODES ** deg - exact) < 1e-14


@pytest.mark.parametrize("deg", range(0, 14))
def test_gauss_exact_to_degree_13(deg):
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert abs(GAUSS_WEIGHTS @ NODES ** deg - exact) < 1e-14


def test_smooth_integrals():
    v, err = integrate(np.exp, 0.0, 1.0)
    assert abs(v - (math.e - 1)) < 1e-14
    v, _ = integrate(lambda x: 1.0 / (1e-4 + x * x), -1.0, 1.0, rel_tol=1e-12)
    assert abs(v - 2 * math.atan(1e2) / 1e-2) / v < 1e-11


def test_sqrt_endpoint_singularity():
    v, _ = integrate(np.sqrt, 0.0, 1.0, rel_tol=1e-10)
    assert abs(v - 2.0 / 3.0) < 1e-10


def test_vector_valued_and_many_owners():
    # integrals of (x^k, cos(k x)) on [0, 1] for k = 0..9, one panel each
    k = np.arange(10)
    f = lambda x, o: np.stack([x ** k[o][:, None], np.cos(k[o][:, None] * x)], axis=-1)
    val, err = integrate_panels(f, np.zeros(10), np.ones(10), k, 10, rel_tol=1e-12)
    assert np.allclose(val[:, 0], 1.0 / (k + 1), rtol=1e-12)
    sinc = np.where(k == 0, 1.0, np.sin(k) / np.where(k == 0, 1, k))
    assert np.allclose(val[:, 1], sinc, rtol=1e-12, atol=1e-15)


def test_panel_budget_raises_with_estimate():
    with pytest.raises(QuadratureError) as exc:
        integrate(lambda x: np.sign(np.sin(1e3 * x)) / (np.abs(x - 0.3) + 1e-12), 0.0, 1.0,
                  rel_tol=1e-14, max_panels=20)
    assert exc.value.estimate is not None


@given(st.floats(0.1, 5.0), st.floats(-2.0, 2.0))
def test_polynomial_on_random_interval(width, a):
    b = a + width
    v, _ = integrate(lambda x: 3 * x ** 2 - x + 1, a, b)
    exact = (b ** 3 - a ** 3) - 0.5 * (b * b - a * a) + (b - a)
    assert abs(v - exact) <= 1e-12 * max(1.0, abs(exact))

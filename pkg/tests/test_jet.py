import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulff_lab import jet as J


def fd_derivatives(f, x, h=1e-4):
    """Central-difference gradient and Hessian of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    g = np.zeros(m)
    H = np.zeros((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
        for j in range(m):
            d = np.zeros(m)
            d[j] = h
            H[i, j] = (f(x + e + d) - f(x + e - d) - f(x - e + d) + f(x - e - d)) / (4 * h * h)
    return g, H


def composite(v):
    x, y, z = v
    return J.sin(x * y) + J.exp(z) / (1.0 + x * x) + J.sqrt(x * x + y * y + z * z + 1.0) * J.cos(z) \
        + J.atan2(y, x) + J.power(x * x + 2.0, 1.5) + J.tan(0.3 * z)


def composite_float(v):
    x, y, z = v
    return (math.sin(x * y) + math.exp(z) / (1 + x * x) + math.sqrt(x * x + y * y + z * z + 1) * math.cos(z)
            + math.atan2(y, x) + (x * x + 2) ** 1.5 + math.tan(0.3 * z))


def test_seed_has_identity_gradient():
    a, b = J.seed([1.0, 2.0])
    assert np.allclose(a.grad, [1, 0]) and np.allclose(b.grad, [0, 1])
    assert np.all(a.hess == 0)


def test_composite_matches_finite_differences():
    x0 = np.array([0.7, -0.4, 0.3])
    out = composite(J.seed(list(x0)))
    g, H = fd_derivatives(composite_float, x0)
    assert out.val == pytest.approx(composite_float(x0), abs=1e-14)
    assert np.allclose(out.grad, g, atol=1e-8)
    assert np.allclose(out.hess, H, atol=1e-5)


def test_vectorized_values_broadcast():
    xs = np.linspace(0.1, 1.0, 7)
    (x,) = J.seed([xs])
    y = x * x * x
    assert y.grad.shape == (7, 1) and y.hess.shape == (7, 1, 1)
    assert np.allclose(y.grad[:, 0], 3 * xs**2)
    assert np.allclose(y.hess[:, 0, 0], 6 * xs)


def test_vector_helpers():
    w = J.seed_vector(np.array([3.0, 4.0, 0.0]))
    n = J.norm(w)
    assert n.val == pytest.approx(5.0)
    assert np.allclose(n.grad, [0.6, 0.8, 0.0])
    # Hessian of |w| is (I - ŵŵ)/|w|
    u = np.array([0.6, 0.8, 0.0])
    assert np.allclose(n.hess, (np.eye(3) - np.outer(u, u)) / 5)
    c = J.cross(J.seed_vector(np.array([1.0, 0.0, 0.0])), J.Jet2.constant(np.array([0.0, 1.0, 0.0]), 3))
    assert np.allclose(c.val, [0, 0, 1])


def test_partial_has_unknown_hessian():
    (x,) = J.seed([2.0])
    d = (x * x * x).partial(0)
    assert d.val == pytest.approx(12.0) and d.grad[0] == pytest.approx(12.0)
    assert np.all(np.isnan(d.hess))


def test_elementary_dispatch():
    a, b = J.seed([2.0, 3.0])
    assert J.elementary("mul", a, b).val == 6.0
    with pytest.raises(ValueError):
        J.elementary("gamma", a)


@pytest.mark.parametrize(
    "call",
    [
        lambda: J.reciprocal(J.seed([0.0])[0]),
        lambda: J.seed([1.0])[0] / 0.0,
        lambda: J.sqrt(J.seed([-1.0])[0]),
        lambda: J.sqrt(J.seed([0.0])[0]),
        lambda: J.power(J.seed([-2.0])[0], 0.5),
        lambda: J.atan2(*J.seed([0.0, 0.0])),
        lambda: J.norm(J.seed_vector(np.zeros(3))),
    ],
)
def test_singular_operations_raise(call):
    with pytest.raises(J.JetError):
        call()


def test_seed_count_limits():
    with pytest.raises(ValueError):
        J.seed([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        J.seed([])


finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(finite, finite, finite)
def test_product_and_quotient_rules(x, y, z):
    a, b, c = J.seed([x, y, z])
    f = a * b + c
    g = c * c + 1.0
    q = f / g
    expect_grad = (f.grad * g.val - g.grad * f.val) / g.val**2
    assert np.allclose(q.grad, expect_grad, atol=1e-12)
    p = f * g
    assert np.allclose(p.hess, p.hess.T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-3.0, 3.0))
def test_power_matches_exp_log(x, p):
    (a,) = J.seed([x])
    lhs = J.power(a, p)
    assert lhs.val == pytest.approx(x**p, rel=1e-12)
    assert lhs.grad[0] == pytest.approx(p * x ** (p - 1), rel=1e-10, abs=1e-12)
    assert lhs.hess[0, 0] == pytest.approx(p * (p - 1) * x ** (p - 2), rel=1e-10, abs=1e-12)

import numpy as np
from hypothesis import given, settings, strategies as st

from mixcurv import jets
from mixcurv.jets import Jet


def _var(x, k=0, m=2):
    return Jet.variable(np.asarray(x, dtype=float), k, m, order=2)


def test_second_derivatives_of_product():
    x = _var([1.3], 0)
    y = _var([-0.4], 1)
    f = jets.sin(x * y) + jets.exp(x) / (2 + y ** 2)
    xv, yv = 1.3, -0.4
    # hand second derivatives
    fxx = -yv ** 2 * np.sin(xv * yv) + np.exp(xv) / (2 + yv ** 2)
    fxy = np.cos(xv * yv) - xv * yv * np.sin(xv * yv) - np.exp(xv) * 2 * yv / (2 + yv ** 2) ** 2
    assert np.isclose(f.d2[0, 0, 0], fxx, rtol=1e-14)
    assert np.isclose(f.d2[0, 0, 1], fxy, rtol=1e-14)
    assert np.isclose(f.d2[0, 1, 0], fxy, rtol=1e-14)


def test_inverse_matrix_jet():
    X = np.array([[0.2, 0.7], [1.0, -0.3]])
    x = Jet.variable(X[:, 0], 0, 2)
    y = Jet.variable(X[:, 1], 1, 2)
    one = Jet.constant(np.ones(2), (2,), 2)
    M = jets.stack([jets.stack([2 + jets.cos(x), y * 0.3], 1),
                    jets.stack([y * 0.3, one + x ** 2], 1)], 1)
    Minv = jets.inv(M)
    prod = jets.einsum("nij,njk->nik", M, Minv)
    np.testing.assert_allclose(prod.v, np.broadcast_to(np.eye(2), (2, 2, 2)), atol=1e-14)
    assert np.max(np.abs(prod.d1)) < 1e-13
    assert np.max(np.abs(prod.d2)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_second_derivative_against_fd(x0, y0):
    def f(x, y):
        return jets.log(x) * jets.cos(y) + jets.sqrt(x + y * y) if isinstance(x, Jet) else \
            np.log(x) * np.cos(y) + np.sqrt(x + y * y)
    j = f(_var([x0], 0), _var([y0], 1))
    h = 1e-4
    fd = (f(x0 + h, y0) - 2 * f(x0, y0) + f(x0 - h, y0)) / h ** 2
    assert abs(j.d2[0, 0, 0] - fd) < 1e-5 * max(1.0, abs(fd))

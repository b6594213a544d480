from math import pi, sqrt

import numpy as np
import pytest

from sphere_re.errors import DomainError
from sphere_re.potential import by_name, cotangent, negate


@pytest.mark.parametrize("sigma,u,up", [
    (pi / 2, 0.0, 1.0),
    (pi / 3, 1 / sqrt(3), 8 / (3 * sqrt(3))),
    (2 * pi / 3, -1 / sqrt(3), 8 / (3 * sqrt(3))),
])
def test_cotangent_values(sigma, u, up):
    p = cotangent()
    assert p.u(np.cos(sigma)) == pytest.approx(u, abs=1e-15)
    assert p.u_prime(np.cos(sigma)) == pytest.approx(up, rel=1e-14)


def test_derivative_matches_finite_difference():
    p = cotangent()
    c = np.linspace(-0.95, 0.95, 41)
    h = 1e-6
    fd = (p.u(c + h) - p.u(c - h)) / (2 * h)
    assert np.allclose(fd, p.u_prime(c), rtol=1e-7)


def test_u_prime_at_least_one():
    c = np.linspace(-0.999, 0.999, 2001)
    up = cotangent().u_prime(c)
    assert np.all(up >= 1.0)
    assert up[np.argmin(np.abs(c))] == pytest.approx(1.0)


def test_kernel_even():
    p = cotangent()
    th = np.linspace(0.1, 3.0, 30)
    assert np.allclose(p.kernel(th), p.kernel(-th))


def test_negate():
    p = cotangent()
    n = negate(p)
    assert n.u_prime(0.0) == -1.0
    assert not n.attractive
    nn = negate(n)
    c = np.linspace(-0.9, 0.9, 19)
    assert nn.attractive and nn.name == "cotangent"
    assert np.array_equal(nn.u(c), p.u(c))
    assert np.array_equal(nn.u_prime(c), p.u_prime(c))


@pytest.mark.parametrize("c", [1.0, -1.0, 1.0 - 1e-18])
def test_guard(c):
    with pytest.raises(DomainError):
        cotangent().u_prime(c)


def test_by_name():
    assert by_name("cotangent-repulsive").u_prime(0.0) == -1.0
    with pytest.raises(ValueError, match="unknown potential"):
        by_name("newton")

import numpy as np
import pytest
from scipy.integrate import quad

from kobalt.models import ball_domain, diagonal_ellipsoid, flat_face_domain


@pytest.fixture(scope="session")
def disk():
    return ball_domain(1)


@pytest.fixture(scope="session")
def ball2():
    return ball_domain(2)


@pytest.fixture(scope="session")
def ellipsoid_m2():
    # {|w|^2 + |z|^4 < 1}
    return diagonal_ellipsoid([2])


@pytest.fixture(scope="session")
def ellipsoid_m3():
    return diagonal_ellipsoid([3])


@pytest.fixture(scope="session")
def flat_face_wide():
    # face radius large enough to contain |z| = 0.3 in the flat part
    return flat_face_domain(0.4)


@pytest.fixture(scope="session")
def flat_face_narrow():
    return flat_face_domain(0.25)


def ball_distance_oracle(p, q):
    """Closed form for the unit ball: tanh K equals the Mobius magnitude."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    ip = np.sum(p * np.conj(q))
    num = (1.0 - np.sum(np.abs(p) ** 2)) * (1.0 - np.sum(np.abs(q) ** 2))
    den = np.abs(1.0 - ip) ** 2
    return float(np.arctanh(np.sqrt(max(0.0, 1.0 - num / den))))


@pytest.fixture(scope="session")
def ball_oracle():
    return ball_distance_oracle


def disk_length_oracle(a, b):
    """Independent oracle: quadrature of |dz|/(1-|z|^2) along the geodesic.

    The geodesic is parametrized through the disk automorphism moving a to 0
    (with its closed-form derivative); only the infinitesimal metric enters
    the integral, never the distance formula.
    """
    a, b = complex(a), complex(b)
    w = (b - a) / (1 - np.conj(a) * b)
    if abs(w) < 1e-300:
        return 0.0
    wh = w / abs(w)
    s = 1.0 - abs(a) ** 2

    def integrand(t):
        denom = 1 + np.conj(a) * wh * t
        z = (t * wh + a) / denom
        return (s / abs(denom) ** 2) / (1 - abs(z) ** 2)

    val, _ = quad(integrand, 0.0, abs(w), limit=200)
    return val


def halfplane_length_oracle(a, b):
    """Quadrature of |dz|/(2 Im z) along the circular geodesic arc."""
    a, b = complex(a), complex(b)
    if abs(a.real - b.real) < 1e-12:
        lo, hi = sorted((a.imag, b.imag))
        val, _ = quad(lambda y: 1.0 / (2.0 * y), lo, hi, limit=200)
        return val
    center = (abs(b) ** 2 - abs(a) ** 2) / (2.0 * (b.real - a.real))
    R = abs(a - center)
    th_a = np.angle(a - center)
    th_b = np.angle(b - center)
    lo, hi = sorted((th_a, th_b))
    val, _ = quad(lambda t: 1.0 / (2.0 * np.sin(t)), lo, hi, limit=200)
    return val

"""Shared fixtures: the profile battery and random matrix generators."""

import numpy as np
import pytest

from arovsys import ArovProfile, Bump, Constant, Steps, free_profile, step_profile

JAY = np.diag([-1.0, 1.0]).astype(complex)


def make_battery():
    """The four nontrivial verification profiles plus the zero profile."""
    return {
        "zero": free_profile(),
        "step_b": step_profile(b=0.6),
        "step_c": step_profile(b=0.0, c=0.6),
        "bump": ArovProfile(Constant(1.0), Bump(0.6, 0.0, 1.0), Constant(0.0), T0=1.0),
        "twostep": ArovProfile(
            Constant(1.0),
            Steps((0.0, 1.0, 2.0), (0.5, 0.2)),
            Steps((0.5, 1.5), (0.4,)),
            T0=2.0,
        ),
    }


@pytest.fixture(scope="session")
def battery():
    return make_battery()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def random_su11(rng, scale=1.0):
    """Random element of SU(1,1): [[u, v], [conj v, conj u]] with |u|^2 - |v|^2 = 1."""
    phi = scale * rng.normal()
    alpha, beta = rng.uniform(0, 2 * np.pi, 2)
    u = np.cosh(phi) * np.exp(1j * alpha)
    v = np.sinh(phi) * np.exp(1j * beta)
    return np.array([[u, v], [np.conj(v), np.conj(u)]])


def random_j_contractive(rng, invertible=True):
    """Product U1 diag(d1, d2) U2 with |d1| >= 1 >= |d2| and Uk in SU(1,1)."""
    d1 = 1.0 + rng.exponential(0.7)
    d2 = rng.uniform(0.05 if invertible else 0.0, 1.0)
    return random_su11(rng) @ np.diag([d1, d2]).astype(complex) @ random_su11(rng)


def random_j_expanding(rng):
    return np.linalg.inv(random_j_contractive(rng, invertible=True))

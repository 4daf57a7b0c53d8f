import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ecsdist.coherent import CoherentKet
from ecsdist.operator import from_ket
from ecsdist.schemes import SchemeParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# validity box used by the randomized invariant suites
alphas = st.floats(0.1, 2.5)
epsilons = st.floats(1e-4, 0.3)
eta_totals = st.floats(0.0, 0.9)
losses = st.floats(0.0, 0.9)


@st.composite
def scheme_params(draw):
    return SchemeParams(draw(alphas), draw(epsilons), draw(eta_totals), draw(losses))


def complex_amps(bound=2.0):
    part = st.floats(-bound, bound)
    return st.builds(complex, part, part)


@st.composite
def kets(draw, modes=None, max_terms=4, bound=2.0):
    m = draw(st.integers(1, 3)) if modes is None else modes
    n = draw(st.integers(1, max_terms))
    labels = [[draw(complex_amps(bound)) for _ in range(m)] for _ in range(n)]
    coeffs = [draw(complex_amps(1.0)) for _ in range(n)]
    return CoherentKet(coeffs, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ket(rng, modes, terms, scale=1.5):
    labels = scale * (rng.normal(size=(terms, modes)) + 1j * rng.normal(size=(terms, modes)))
    coeffs = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    return CoherentKet(coeffs, labels)


def random_rho(rng, modes, terms=3, scale=1.0):
    return from_ket(random_ket(rng, modes, terms, scale))

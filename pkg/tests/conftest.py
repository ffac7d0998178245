import os

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from charp.gfpoly import X, Poly, pack

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PRIMES = [3, 5, 7]


@st.composite
def polys(draw, p=None, n=None, max_degree=4, ring=X, max_terms=6):
    p = draw(st.sampled_from(PRIMES)) if p is None else p
    n = draw(st.integers(1, 2)) if n is None else n
    exps = st.tuples(*[st.integers(0, max_degree)] * n).filter(lambda e: sum(e) <= max_degree)
    terms = draw(st.dictionaries(exps, st.integers(0, p - 1), max_size=max_terms))
    return Poly(p, n, {pack(e): c for e, c in terms.items()}, ring)


@pytest.fixture
def rng():
    import random

    return random.Random(20261015)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        order = [c[0] for c in test_acceptance.CRITERIA] + ["C11"]
        for key in order:
            if key in test_acceptance.RESULTS:
                terminalreporter.write_line(test_acceptance.RESULTS[key])

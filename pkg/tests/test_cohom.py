import random
from math import comb

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from charp.cartx import FrobeniusLift
from charp.cohom import (
    FILTERED,
    QUOTIENT,
    bk_check,
    compare_dr_higgs,
    derham_complex,
    derham_complex_of,
    essential_support_check,
    filtered_dims,
    milnor_number_two_orders,
    quotient_dims_series,
    twisted_derham,
)
from charp.conn import ConnectionModule
from charp.errors import NotStabilized, PrimeTooSmall
from charp.fixtures import SINGULARITY_CORPUS, random_lift, random_nilpotent_connection
from charp.gfpoly import Poly, parse_poly


def rank_two(p=5):
    z = Poly.zero(p, 1)
    return ConnectionModule([[[z, parse_poly(f"x0^{p - 1}", p, 1)], [z, z]]])


def groebner_milnor(text, p, n):
    """dim F_p[x]/(partials) by counting standard monomials of a Groebner basis."""
    gens = sympy.symbols(f"x0:{n}")
    f = sympy.sympify(text.replace("^", "**"), locals={f"x{i}": g for i, g in enumerate(gens)})
    gb = sympy.groebner([sympy.diff(f, g) for g in gens], *gens, modulus=p, order="grevlex")
    leads = [sympy.Poly(g, *gens).monoms(order="grevlex")[0] for g in gb.exprs]
    bound = 4 * sympy.Poly(f, *gens).total_degree()
    count = 0
    from itertools import product

    for e in product(range(bound + 1), repeat=n):
        if not any(all(a >= b for a, b in zip(e, lead)) for lead in leads):
            count += 1
    return count


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("p", [3, 5])
def test_trivial_module_matches_forms_on_primed_space(n, p):
    dims = quotient_dims_series(derham_complex_of(ConnectionModule.trivial(p, n, 1)), 3)
    for q in range(n + 1):
        assert dims[q] == [comb(n, q) * comb(d + n, n) for d in range(4)]


def test_trivial_h1_generators():
    p = 5
    sl = derham_complex(ConnectionModule.trivial(p, 1, 1), 0)
    # the image of d misses exactly x^(p-1) dx in the lowest slice
    assert sl.dims() == [1, 1]


@settings(max_examples=10)
@given(st.integers(0, 10**6), st.integers(0, 2))
def test_d_squared_zero(seed, truncation):
    rng = random.Random(seed)
    p, n = rng.choice([5, 7]), rng.randint(1, 2)
    m = random_nilpotent_connection(rng, p, n, rng.randint(1, 3))
    for mode in (QUOTIENT, FILTERED):
        assert derham_complex(m, truncation, mode).composes_to_zero()


@pytest.mark.parametrize(
    "module,n",
    [(ConnectionModule.trivial(5, 1, 1), 1), (rank_two(), 1), (ConnectionModule.trivial(5, 2, 1), 2)],
)
def test_compare_examples(module, n):
    res = compare_dr_higgs(module, FrobeniusLift.standard(5, n), 2)
    assert res["agree"] and res["stabilized"]
    assert res["compared_degrees"] == list(range(n + 1))


def test_compare_rank_two_frozen_dims():
    res = compare_dr_higgs(rank_two(), FrobeniusLift.standard(5, 1), 3)
    assert res["level"] == 1
    assert res["dims"]["de_rham"] == {0: [1, 2, 3, 4], 1: [1, 2, 3, 4]}


@settings(max_examples=5)
@given(st.integers(0, 10**6))
def test_compare_random(seed):
    rng = random.Random(seed)
    p, n = rng.choice([5, 7]), rng.randint(1, 2)
    lift = random_lift(rng, p, n)
    m = random_nilpotent_connection(rng, p, n, rng.randint(1, 2), lift)
    assert compare_dr_higgs(m, lift, 2)["agree"]


@pytest.mark.parametrize("text,p,n,mu", SINGULARITY_CORPUS)
def test_milnor_numbers_against_groebner(text, p, n, mu):
    f = parse_poly(text, p, n)
    orders = milnor_number_two_orders(f, 4 * p)
    assert orders["lex"] == orders["revlex"] == mu
    assert groebner_milnor(text, p, n) == mu


@pytest.mark.parametrize("text,p,n,mu", SINGULARITY_CORPUS[:3] + [SINGULARITY_CORPUS[4]])
def test_bk_corpus(text, p, n, mu):
    res = bk_check(parse_poly(text, p, n))
    assert res["equal"] and res["matches_milnor"]
    assert res["dims"]["higgs"]["dims"] == [0] * n + [mu]


def test_bk_cubic_frozen():
    res = bk_check(parse_poly("x0^3", 7, 1))
    assert res["dims"]["twisted_de_rham"]["dims"] == [0, 2]
    assert res["dims"]["higgs"]["dims"] == [0, 2]


def test_bk_prime_threshold():
    f = parse_poly("x0^3 + x1^3", 5, 2)
    with pytest.raises(PrimeTooSmall):
        bk_check(f)
    # below the default threshold the comparison still holds for this f
    res = bk_check(f, prime_threshold=0)
    assert res["equal"] and res["matches_milnor"]


def test_not_stabilized_is_reported():
    with pytest.raises(NotStabilized):
        bk_check(parse_poly("x0^4", 11, 1), max_truncation=11)


def test_filtered_dims_are_monotone():
    cx = twisted_derham(parse_poly("x0^3", 7, 1))
    series = [filtered_dims(cx, d, 10) for d in range(0, 14)]
    for q in range(2):
        values = [s[q] for s in series]
        assert values == sorted(values)


def test_essential_support_examples():
    p = 5
    unit_psi = ConnectionModule([[[parse_poly("x0^4", p, 1)]]])
    res = essential_support_check(unit_psi, 2)
    assert not res["origin_in_support"] and res["acyclic_at_origin"] and res["consistent"]
    triv = essential_support_check(ConnectionModule.trivial(p, 1, 1), 2)
    assert triv["support_is_everything"] and triv["origin_in_support"]
    nil = essential_support_check(rank_two(p), 2)
    assert nil["support_is_everything"] and nil["consistent"]

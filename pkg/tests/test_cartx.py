import random

import pytest
from hypothesis import given, settings, strategies as st

from charp import polymat as pm
from charp.cartx import (
    CONNECTION_SIGN,
    FrobeniusLift,
    alpha_zeta,
    alpha_zeta_action,
    b_zeta_check,
    cartier_transform,
    cartier_transform_details,
    inverse_cartier_transform,
    lift_change_isomorphism,
    round_trip_connection,
    round_trip_higgs,
    tensor_compatibility,
    zeta_from_lift,
)
from charp.conn import ConnectionModule, p_curvature
from charp.errors import NotNilpotent
from charp.fixtures import random_lift, random_nilpotent_connection, random_nilpotent_higgs, random_poly
from charp.forms import DiffForm, cartier_operator
from charp.gfpoly import X, XP, Poly, parse_poly
from charp.higgs import HiggsModule


def higgs(rows_per_var, p):
    n = len(rows_per_var)
    return HiggsModule([[[parse_poly(t, p, n, XP) for t in row] for row in m] for m in rows_per_var])


def test_sign_is_pinned():
    assert CONNECTION_SIGN == 1


def test_unit_goes_to_trivial():
    p = 5
    lift = FrobeniusLift.standard(p, 2)
    conn = inverse_cartier_transform(HiggsModule.zero(p, 2, 1), lift)
    assert all(pm.is_zero(a) for a in conn.matrices)
    h = cartier_transform(ConnectionModule.trivial(p, 2, 1), lift)
    assert all(pm.is_zero(t) for t in h.matrices)


def test_rank_two_inverse_example():
    p = 5
    h = higgs([[["0", "1"], ["0", "0"]]], p)
    conn = inverse_cartier_transform(h, FrobeniusLift.standard(p, 1))
    assert conn.matrices[0][0][1] == parse_poly(f"{CONNECTION_SIGN % p}*x0^4", p, 1)
    psi = p_curvature(conn)
    assert pm.equal(psi.matrices[0], pm.from_ints([[0, -1], [0, 0]], Poly.zero(p, 1)))


def test_rank_two_forward_example():
    p = 5
    module = ConnectionModule([[[Poly.zero(p, 1), parse_poly("x0^4", p, 1)], [Poly.zero(p, 1), Poly.zero(p, 1)]]])
    h = cartier_transform(module, FrobeniusLift.standard(p, 1))
    assert pm.equal(h.matrices[0], pm.from_ints([[0, 1], [0, 0]], Poly.zero(p, 1, XP)))


def test_non_nilpotent_is_refused():
    p = 5
    module = ConnectionModule([[[parse_poly("x0^4", p, 1)]]])
    with pytest.raises(NotNilpotent):
        cartier_transform(module, FrobeniusLift.standard(p, 1))
    with pytest.raises(NotNilpotent):
        inverse_cartier_transform(higgs([[["1"]]], p), FrobeniusLift.standard(p, 1))


def test_alpha_action_examples():
    p = 5
    alpha = alpha_zeta(zeta_from_lift(FrobeniusLift.standard(p, 1)))
    nil = higgs([[["0", "y0"], ["0", "0"]]], p).matrices
    assert pm.equal(alpha_zeta_action(alpha, nil)[0], nil[0])
    u = parse_poly("y0 + 2", p, 1, XP)
    got = alpha_zeta_action(alpha, [[[u]]])[0][0][0]
    assert got == u - parse_poly("y0^4", p, 1, XP) * u ** p
    assert pm.is_zero(alpha_zeta_action(alpha, [[[Poly.zero(p, 1, XP)]]])[0])


@pytest.mark.parametrize("seed", range(8))
def test_rank_one_alpha_matches_jacobson(seed):
    # no nilpotence needed: psi of the pullback connection is F*(-alpha(u))
    rng = random.Random(seed)
    p = rng.choice([3, 5, 7])
    lift = random_lift(rng, p, 1, 3)
    u = random_poly(rng, p, 1, 2, ring=XP)
    h = HiggsModule([[[u]]])
    from charp.cartx import twisted_pullback

    psi = p_curvature(twisted_pullback(h, lift)).matrices[0]
    alpha = alpha_zeta_action(alpha_zeta(zeta_from_lift(lift)), h.matrices)[0]
    assert pm.equal(psi, pm.neg(pm.pullback(alpha)))


@pytest.mark.parametrize("seed", range(10))
def test_cartier_of_zeta_is_dy(seed):
    rng = random.Random(seed)
    p, n = rng.choice([3, 5, 7]), rng.randint(1, 3)
    zeta = zeta_from_lift(random_lift(rng, p, n, 4))
    for j, form in enumerate(zeta.forms):
        dy = DiffForm.one_form([Poly.one(p, n, XP) if i == j else Poly.zero(p, n, XP) for i in range(n)])
        assert cartier_operator(form) == dy


def _setup(seed):
    rng = random.Random(seed)
    p, n, r = rng.choice([5, 7]), rng.randint(1, 2), rng.randint(1, 3)
    return rng, p, n, r, random_lift(rng, p, n)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_round_trip_from_connection(seed):
    rng, p, n, r, lift = _setup(seed)
    module = random_nilpotent_connection(rng, p, n, r, lift)
    cert = round_trip_connection(module, lift)
    assert cert["isomorphism"] and cert["psi_is_pullback_of_minus_theta"]
    assert cert["det"] % p
    # descent constructivity: psi in the descent basis has descendable entries
    res = cert["result"]
    assert all(pm.equal(pm.pullback(pm.descend(m)), m) for m in res.psi_in_basis)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_round_trip_from_higgs(seed):
    rng, p, n, r, lift = _setup(seed)
    h = random_nilpotent_higgs(rng, p, n, r)
    conn = inverse_cartier_transform(h, lift)
    psi = p_curvature(conn)
    assert all(pm.equal(a, pm.neg(pm.pullback(t))) for a, t in zip(psi.matrices, h.matrices))
    assert round_trip_higgs(h, lift)["isomorphism"]


@settings(max_examples=8)
@given(st.integers(0, 10**6))
def test_lift_independence(seed):
    rng, p, n, r, lift = _setup(seed)
    module = random_nilpotent_connection(rng, p, n, r, lift)
    other = random_lift(rng, p, n)
    assert lift_change_isomorphism(module, lift, other)["isomorphism"]


@settings(max_examples=6)
@given(st.integers(0, 10**6))
def test_tensor_compatibility(seed):
    rng, p, n, _, lift = _setup(seed)
    m1 = random_nilpotent_connection(rng, p, n, 2, lift)
    m2 = random_nilpotent_connection(rng, p, n, 2, lift)
    cert = tensor_compatibility(m1, m2, lift)
    assert cert["level_sum"] < p
    assert cert["isomorphism"]


@pytest.mark.parametrize(
    "n,p,truncation,seed", [(1, 5, 1, None), (1, 5, 2, None), (2, 7, 2, 3), (2, 5, 3, 4)]
)
def test_b_zeta(n, p, truncation, seed):
    lift = FrobeniusLift.standard(p, n) if seed is None else random_lift(random.Random(seed), p, n, 2)
    res = b_zeta_check(lift, truncation)
    assert res["gamma_side_equals_alpha"]
    assert res["symmetric_side_equals_minus_alpha"]


def test_b_zeta_truncation_guard():
    with pytest.raises(ValueError):
        b_zeta_check(FrobeniusLift.standard(5, 1), 5)


def test_details_expose_descent():
    p = 5
    module = ConnectionModule([[[Poly.zero(p, 1), parse_poly("x0^4", p, 1)], [Poly.zero(p, 1), Poly.zero(p, 1)]]])
    res = cartier_transform_details(module, FrobeniusLift.standard(p, 1))
    assert res.level == 1
    assert p_curvature(res.untwisted).is_zero()
    assert res.basis.det % p

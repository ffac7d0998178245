import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charp._kernels import rank_mod_p
from charp.dpalg import (
    DPElement,
    SymElement,
    casimir_check,
    casimir_projector,
    dp_multiply,
    dp_pair,
    dp_table_check,
    higgs_transform,
    involution_check,
    multi_indices,
    pairing_matrix,
)
from charp.errors import NotNilpotent

NILPOTENT = [np.array([[0, 1], [0, 0]])]


def xi(i, p=5, truncation=None):
    return DPElement.basis(i if isinstance(i, tuple) else (i,), p, truncation)


def omega(j, p=5):
    return SymElement.basis(j if isinstance(j, tuple) else (j,), p)


def test_product_examples():
    assert dp_multiply(xi(1), xi(1)).coeffs == {(2,): 2}
    assert dp_multiply(xi(2), xi(3)).coeffs == {}
    a = DPElement(5, 2, {(1, 0): 3, (0, 2): 1})
    assert dp_multiply(xi((0, 0)), a).coeffs == a.coeffs


def test_overflow_is_flagged():
    res = dp_multiply(xi(1, truncation=2), xi(2, truncation=2))
    assert res.overflow and not res.coeffs
    # a coefficient that vanishes mod p is not an overflow
    assert not dp_multiply(xi(2, truncation=5), xi(3, truncation=5)).overflow


def test_pairing_examples():
    assert dp_pair(xi(1), omega(2)).coeffs == {(1,): 2}
    assert dp_pair(xi(2), omega(2)).coeffs == {(0,): 1}
    assert dp_pair(xi(3), omega(2)).coeffs == {}


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("p", [5, 7])
def test_tables(n, p):
    assert all(dp_table_check(n, p, 4).values())


@pytest.mark.parametrize("p", [5, 7])
def test_pairing_is_perfect_below_p(p):
    for n in (1, 2, 3):
        for d in range(p):
            m = pairing_matrix(n, d, p)
            assert rank_mod_p(m, p) == m.shape[0]


def dp_elements(p, n, max_total):
    idx = multi_indices(n, max_total)
    return st.dictionaries(st.sampled_from(idx), st.integers(0, p - 1), max_size=4).map(
        lambda c: DPElement(p, n, c)
    )


@given(st.sampled_from([5, 7]), st.integers(1, 2), st.data())
def test_product_commutative_and_associative(p, n, data):
    a, b, c = (data.draw(dp_elements(p, n, 2)) for _ in range(3))
    assert dp_multiply(a, b).coeffs == dp_multiply(b, a).coeffs
    assert dp_multiply(dp_multiply(a, b), c).coeffs == dp_multiply(a, dp_multiply(b, c)).coeffs


def test_casimir_zero_field_is_degree_zero_projection():
    res = casimir_projector([np.zeros((1, 1), dtype=np.int64)], 2, 5)
    assert np.array_equal(res.matrix, np.diag([1, 0, 0]))


def test_casimir_rank_two_example():
    cert = casimir_check(NILPOTENT, 2, 5)
    assert cert["idempotent"] and cert["image_in_kernel"] and cert["rank_nullity"]
    assert cert["image_rank"] == cert["kernel_dim"]
    assert casimir_projector(NILPOTENT, 2, 5).space.dim == 6


def test_transform_examples():
    zero = higgs_transform([np.zeros((2, 2), dtype=np.int64)], 2, 5)
    assert zero.basis.shape[1] == 2
    assert not any(f.any() for f in zero.fields)
    cert = involution_check(NILPOTENT, 2, 5)
    assert cert["isomorphism"] and cert["first_field_is_minus_theta"]


def test_transform_needs_enough_truncation():
    with pytest.raises(NotNilpotent):
        higgs_transform([np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]])], 1, 5)


def random_thetas(rng, p, n, r):
    j = np.array([[rng.randrange(p) if b > a else 0 for b in range(r)] for a in range(r)], dtype=np.int64)
    j2 = (j @ j) % p
    return [(rng.randrange(p) * j + rng.randrange(p) * j2) % p for _ in range(n)]


@given(st.integers(0, 10**6))
def test_casimir_and_involution_random(seed):
    rng = random.Random(seed)
    p, n, r = rng.choice([5, 7]), rng.randint(1, 2), rng.randint(1, 3)
    thetas = random_thetas(rng, p, n, r)
    assert casimir_check(thetas, 2, p)["ok"]
    cert = involution_check(thetas, 2, p)
    assert cert["isomorphism"] and cert["first_field_is_minus_theta"]

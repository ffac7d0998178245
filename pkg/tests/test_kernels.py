import numpy as np
import pytest
from hypothesis import given, strategies as st

from charp import _kernels as k


def _rand(seed, rows, cols, p):
    return np.random.default_rng(seed).integers(0, p, size=(rows, cols))


def _rank_by_determinants(m, p):
    # brute force: largest r with a nonzero r x r minor (tiny matrices only)
    from itertools import combinations

    import sympy

    rows, cols = m.shape
    for r in range(min(rows, cols), 0, -1):
        for ri in combinations(range(rows), r):
            for ci in combinations(range(cols), r):
                if sympy.Matrix(m[np.ix_(ri, ci)]).det() % p:
                    return r
    return 0


@pytest.mark.parametrize("p", [3, 5, 7, 11])
@pytest.mark.parametrize("seed", range(6))
def test_backends_agree_on_rref(p, seed):
    m = _rand(seed, 7, 9, p)
    m[3] = (m[1] + 2 * m[2]) % p
    red_numpy, piv_numpy = k._echelon_numpy(m % p, p, True)
    if k._HAVE_NUMBA:
        red_numba, piv_numba = k._echelon_numba(m % p, p, k._inverse_table(p), True)
        assert np.array_equal(red_numpy, red_numba)
        assert np.array_equal(piv_numpy, piv_numba)


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("seed", range(4))
def test_rank_matches_minor_oracle(p, seed):
    m = _rand(100 + seed, 4, 5, p)
    m[2] = (m[0] * 2 + m[1]) % p
    assert k.rank_mod_p(m, p) == _rank_by_determinants(m, p)


def test_disable_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("CHARP_DISABLE_NUMBA", "1")
    assert not k.numba_enabled()
    m = _rand(5, 6, 6, 7)
    assert k.rank_mod_p(m, 7) == k.rank_mod_p(m.T, 7)


def test_empty_inputs():
    assert k.rank_mod_p(np.zeros((0, 4), dtype=np.int64), 5) == 0
    assert k.nullspace_mod_p(np.zeros((0, 3), dtype=np.int64), 5).shape == (3, 3)


@given(st.integers(0, 10**6), st.sampled_from([3, 5, 7, 13]), st.integers(1, 8), st.integers(1, 8))
def test_rank_nullity(seed, p, rows, cols):
    m = _rand(seed, rows, cols, p)
    null = k.nullspace_mod_p(m, p)
    assert null.shape[1] == cols - k.rank_mod_p(m, p)
    assert not ((m @ null) % p).any()
    assert k.rank_mod_p(null, p) == null.shape[1]


@given(st.integers(0, 10**6), st.sampled_from([5, 7]), st.integers(1, 6))
def test_solve_round_trip(seed, p, size):
    a = _rand(seed, size, size + 2, p)
    x = _rand(seed + 1, size + 2, 2, p)
    b = k.matmul_mod_p(a, x, p)
    sol = k.solve_mod_p(a, b, p)
    assert sol is not None
    assert np.array_equal(k.matmul_mod_p(a, sol, p), b)


def test_solve_inconsistent():
    a = np.array([[1, 0], [0, 0]])
    assert k.solve_mod_p(a, np.array([[0], [1]]), 5) is None

"""Dense Gaussian elimination over F_p.

Two interchangeable backends are provided: numba-compiled loops and a
vectorised numpy fallback. Set ``CHARP_DISABLE_NUMBA=1`` to force the
fallback (useful when numba is unavailable or for debugging).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("CHARP_DISABLE_NUMBA", "").strip().lower()
    return _HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def _inverse_table(p: int) -> np.ndarray:
    table = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        table[a] = pow(a, p - 2, p)
    return table


# numpy backend ---------------------------------------------------------------


def _echelon_numpy(mat: np.ndarray, p: int, full: bool) -> tuple[np.ndarray, np.ndarray]:
    m = mat.copy()
    rows, cols = m.shape
    inv = _inverse_table(p)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = (m[r] * inv[m[r, c]]) % p
        if full:
            targets = np.nonzero(m[:, c])[0]
            targets = targets[targets != r]
        else:
            targets = r + 1 + np.nonzero(m[r + 1:, c])[0]
        if targets.size:
            m[targets] = (m[targets] - np.outer(m[targets, c], m[r])) % p
        pivots.append(c)
        r += 1
    return m, np.asarray(pivots, dtype=np.int64)


# numba backend ---------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _echelon_numba(mat, p, inv, full):  # pragma: no cover - compiled
        m = mat.copy()
        rows, cols = m.shape
        pivots = np.empty(min(rows, cols), dtype=np.int64)
        r = 0
        for c in range(cols):
            if r == rows:
                break
            piv = -1
            for i in range(r, rows):
                if m[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for j in range(cols):
                    tmp = m[r, j]
                    m[r, j] = m[piv, j]
                    m[piv, j] = tmp
            s = inv[m[r, c]]
            for j in range(c, cols):
                if m[r, j] != 0:
                    m[r, j] = (m[r, j] * s) % p
            start = 0 if full else r + 1
            for i in range(start, rows):
                if i == r:
                    continue
                f = m[i, c]
                if f == 0:
                    continue
                for j in range(c, cols):
                    if m[r, j] != 0:
                        m[i, j] = (m[i, j] - f * m[r, j]) % p
            pivots[r] = c
            r += 1
        return m, pivots[:r].copy()


def echelon(mat: np.ndarray, p: int, full: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Row echelon form of ``mat`` over F_p.

    Returns the reduced matrix and the pivot column indices. With
    ``full=True`` the result is the reduced row echelon form.
    """
    mat = np.ascontiguousarray(np.asarray(mat, dtype=np.int64) % p)
    if mat.size == 0:
        return mat, np.zeros(0, dtype=np.int64)
    if numba_enabled():
        return _echelon_numba(mat, p, _inverse_table(p), full)
    return _echelon_numpy(mat, p, full)


def rank_mod_p(mat: np.ndarray, p: int) -> int:
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    # eliminate along the shorter side
    if mat.shape[0] > mat.shape[1]:
        mat = mat.T
    return int(echelon(mat, p)[1].size)


def rref_mod_p(mat: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    return echelon(mat, p, full=True)


def nullspace_mod_p(mat: np.ndarray, p: int) -> np.ndarray:
    """Basis of the right kernel, one vector per column."""
    mat = np.asarray(mat, dtype=np.int64)
    cols = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    red, pivots = rref_mod_p(mat, p)
    free = [c for c in range(cols) if c not in set(pivots.tolist())]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[fc, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-red[i, fc]) % p
    return basis


def matmul_mod_p(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % p


def solve_mod_p(mat: np.ndarray, rhs: np.ndarray, p: int) -> np.ndarray | None:
    """One solution ``x`` of ``mat @ x = rhs`` over F_p, or None."""
    mat = np.asarray(mat, dtype=np.int64)
    rhs = np.asarray(rhs, dtype=np.int64)
    vec = rhs.ndim == 1
    if vec:
        rhs = rhs[:, None]
    aug = np.concatenate([mat, rhs], axis=1)
    red, pivots = rref_mod_p(aug, p)
    n = mat.shape[1]
    if pivots.size and pivots[-1] >= n:
        return None
    sol = np.zeros((n, rhs.shape[1]), dtype=np.int64)
    for i, pc in enumerate(pivots):
        sol[pc] = red[i, n:]
    return sol[:, 0] if vec else sol

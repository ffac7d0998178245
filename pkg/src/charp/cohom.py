"""Degree-truncated cohomology of de Rham, Higgs and twisted complexes.

Two slice conventions are supported.

``quotient``
    Reduce the complex modulo (y_0, ..., y_{n-1})^(d+1), where y_i = x_i^p
    on the de Rham side. The differentials are linear over F_p[y], so this
    is the base change of the complex to a finite quotient ring, and
    quasi-isomorphic complexes of free F_p[y]-modules give equal
    dimensions at every d.

``filtered``
    Cochains of degree <= d (in the ring's own grading). Cocycles are the
    kernel on that slice, coboundaries are images of cochains of degree
    <= d + lookahead that land back in the slice. The result is the
    dimension of an increasing filtration of the true cohomology, which
    is finite for isolated singularities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np

from . import polymat as pm
from ._kernels import rank_mod_p
from .conn import ConnectionModule, nilpotence_level, p_curvature
from .errors import NotStabilized, PrimeTooSmall
from .gfpoly import X, XP, Poly, pack, unit_key, unpack
from .higgs import HiggsModule

QUOTIENT = "quotient"
FILTERED = "filtered"


def _wedge_index(i: int, idx: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    if i in idx:
        return 0, ()
    pos = sum(1 for j in idx if j < i)
    return (-1 if pos % 2 else 1), tuple(sorted(idx + (i,)))


class PolyComplex:
    """Complex of free modules sum_k F_p[vars] e_k (x) wedge^q, q = 0..n.

    The differential is e (x) w -> sum_i (op_i e) (x) dv_i ^ w, where op_i
    is multiplication by ``matrices[i]``, preceded by d_i when
    ``differentiate`` is set (de Rham side).
    """

    def __init__(self, p: int, n: int, rank: int, ring: str, matrices: Sequence[pm.PolyMatrix], differentiate: bool):
        self.p, self.n, self.rank, self.ring = p, n, rank, ring
        self.matrices = [[list(row) for row in m] for m in matrices]
        self.differentiate = differentiate
        # matrix entries as sparse columns: column k -> list of (row, term dict)
        self._cols = [
            [[(l, m[l][k].terms) for l in range(rank) if not m[l][k].is_zero()] for k in range(rank)] for m in self.matrices
        ]

    def boundary(self, k: int, idx: tuple[int, ...], key: int) -> dict:
        out: dict = {}
        p, n = self.p, self.n
        for i in range(n):
            sign, merged = _wedge_index(i, idx)
            if not sign:
                continue
            if self.differentiate:
                e = (key >> (16 * i)) & 0xFFFF
                c = e % p
                if c:
                    t = (k, merged, key - unit_key(i))
                    out[t] = (out.get(t, 0) + sign * c) % p
            for l, terms in self._cols[i][k]:
                for tk, tc in terms.items():
                    t = (l, merged, tk + key)
                    out[t] = (out.get(t, 0) + sign * tc) % p
        return {t: c for t, c in out.items() if c}

    def degree_function(self, mode: str) -> Callable[[tuple[int, ...]], int]:
        if mode == QUOTIENT and self.ring == X:
            p = self.p
            return lambda exps: sum(e // p for e in exps)
        return sum

    def monomials(self, truncation: int, mode: str) -> list[tuple[int, ...]]:
        n = self.n
        if mode == QUOTIENT and self.ring == X:
            p = self.p
            out = []
            for outer in product(range(truncation + 1), repeat=n):
                if sum(outer) > truncation:
                    continue
                for inner in product(range(p), repeat=n):
                    out.append(tuple(p * a + b for a, b in zip(outer, inner)))
            return sorted(out)
        return [e for e in product(range(truncation + 1), repeat=n) if sum(e) <= truncation]

    def basis(self, q: int, truncation: int, mode: str) -> list[tuple[int, tuple[int, ...], int]]:
        monos = [pack(e) for e in self.monomials(truncation, mode)]
        return [(k, idx, key) for idx in combinations(range(self.n), q) for k in range(self.rank) for key in monos]

    def slice(self, truncation: int, mode: str = QUOTIENT) -> "ComplexSlice":
        return build_slice(self, truncation, mode)


def derham_complex_of(module: ConnectionModule) -> PolyComplex:
    return PolyComplex(module.p, module.n, module.rank, X, module.matrices, differentiate=True)


def higgs_complex(h: HiggsModule) -> PolyComplex:
    return PolyComplex(h.p, h.n, h.rank, XP, h.matrices, differentiate=False)


@dataclass
class ComplexSlice:
    """Boundary matrices d^q : C^q -> C^{q+1} on a truncated monomial basis."""

    truncation: int
    mode: str
    p: int
    bases: list
    matrices: list
    row_degrees: list = field(default_factory=list)
    row_keys: list = field(default_factory=list)

    def dims(self) -> list[int]:
        """Cohomology dimensions (quotient mode, where the slice is a complex)."""
        ranks = [rank_mod_p(m, self.p) for m in self.matrices]
        out = []
        for q, basis in enumerate(self.bases):
            incoming = ranks[q - 1] if q > 0 else 0
            outgoing = ranks[q] if q < len(ranks) else 0
            out.append(len(basis) - incoming - outgoing)
        return out

    def composes_to_zero(self) -> bool:
        """d^{q+1} d^q = 0 on the common sub-slice.

        In filtered mode the rows of d^q are whatever the boundary reaches,
        so only columns whose image stays inside the next basis are composed.
        """
        for q, (a, b) in enumerate(zip(self.matrices, self.matrices[1:])):
            if self.mode == FILTERED:
                cols = {key: i for i, key in enumerate(self.bases[q + 1])}
                rows = [cols.get(key) for key in self.row_keys[q]]
                inside = np.array([r is not None for r in rows], dtype=bool)
                keep = ~np.any(a[~inside] != 0, axis=0)
                a = a[np.ix_(inside, keep)]
                b = b[:, [r for r in rows if r is not None]]
            elif a.shape[0] != b.shape[1]:
                return False
            if ((b @ a) % self.p).any():
                return False
        return True


def build_slice(cx: PolyComplex, truncation: int, mode: str = QUOTIENT) -> ComplexSlice:
    if mode not in (QUOTIENT, FILTERED):
        raise ValueError(f"unknown slice mode {mode!r}")
    bases = [cx.basis(q, truncation, mode) for q in range(cx.n + 1)]
    if mode == QUOTIENT:
        indices = [{b: i for i, b in enumerate(basis)} for basis in bases]
        mats = []
        for q in range(cx.n):
            m = np.zeros((len(bases[q + 1]), len(bases[q])), dtype=np.int64)
            rows = indices[q + 1]
            for col, (k, idx, key) in enumerate(bases[q]):
                for t, c in cx.boundary(k, idx, key).items():
                    r = rows.get(t)
                    if r is not None:
                        m[r, col] = c
            mats.append(m)
        return ComplexSlice(truncation, mode, cx.p, bases, mats)
    # filtered: rows are whatever the boundary reaches
    mats, row_degrees, row_keys = [], [], []
    n = cx.n
    for q in range(cx.n):
        rows: dict = {}
        entries = []
        for col, (k, idx, key) in enumerate(bases[q]):
            for t, c in cx.boundary(k, idx, key).items():
                r = rows.setdefault(t, len(rows))
                entries.append((r, col, c))
        m = np.zeros((len(rows), len(bases[q])), dtype=np.int64)
        for r, col, c in entries:
            m[r, col] = c
        mats.append(m)
        degs = np.zeros(len(rows), dtype=np.int64)
        for t, r in rows.items():
            degs[r] = sum(unpack(t[2], n))
        row_degrees.append(degs)
        row_keys.append(sorted(rows, key=rows.get))
    return ComplexSlice(truncation, mode, cx.p, bases, mats, row_degrees, row_keys)


def quotient_dims_series(cx: PolyComplex, max_truncation: int) -> list[list[int]]:
    """dims[q][d] for d = 0..max_truncation, from a single assembled slice."""
    sl = build_slice(cx, max_truncation, QUOTIENT)
    degree = cx.degree_function(QUOTIENT)
    n = cx.n
    levels = [np.array([degree(unpack(key, n)) for (_, _, key) in basis], dtype=np.int64) for basis in sl.bases]
    out = [[0] * (max_truncation + 1) for _ in range(n + 1)]
    for d in range(max_truncation + 1):
        keep = [np.nonzero(lv <= d)[0] for lv in levels]
        ranks = [rank_mod_p(m[np.ix_(keep[q + 1], keep[q])], cx.p) for q, m in enumerate(sl.matrices)]
        for q in range(n + 1):
            incoming = ranks[q - 1] if q > 0 else 0
            outgoing = ranks[q] if q < n else 0
            out[q][d] = int(keep[q].size - incoming - outgoing)
    return out


def filtered_dims(cx: PolyComplex, truncation: int, lookahead: int) -> list[int]:
    """dim Z^q_{<=d} - dim(d(C^{q-1}_{<=d+L}) in C^q_{<=d}) for each q."""
    p, n = cx.p, cx.n
    low = build_slice(cx, truncation, FILTERED)
    high = build_slice(cx, truncation + lookahead, FILTERED)
    out = []
    for q in range(n + 1):
        size = len(low.bases[q])
        z = size - (rank_mod_p(low.matrices[q], p) if q < n else 0)
        if q == 0:
            out.append(z)
            continue
        m = high.matrices[q - 1]
        above = high.row_degrees[q - 1] > truncation
        b = rank_mod_p(m, p) - rank_mod_p(m[above], p)
        out.append(int(z - b))
    return out


# user-facing operations -----------------------------------------------------------


def derham_complex(module: ConnectionModule, truncation: int, mode: str = QUOTIENT) -> ComplexSlice:
    return derham_complex_of(module).slice(truncation, mode)


@dataclass
class GradedDims:
    dims: dict
    stabilized: bool


def compare_dr_higgs(module: ConnectionModule, lift, max_truncation: int) -> dict:
    """Compare quotient-slice cohomology of the de Rham complex of M with the
    Higgs complex of its Cartier transform for every truncation up to the maximum."""
    from .cartx import cartier_transform_details

    res = cartier_transform_details(module, lift)
    level = res.level
    p, n = module.p, module.n
    dr = quotient_dims_series(derham_complex_of(module), max_truncation)
    hg = quotient_dims_series(higgs_complex(res.higgs), max_truncation)
    compared = [q for q in range(n + 1) if q < p - level]
    equal = {q: dr[q] == hg[q] for q in range(n + 1)}
    diverging = [q for q in range(n + 1) if q not in compared and not equal[q]]
    agree = all(equal[q] for q in compared)
    last = max_truncation
    stabilized = max_truncation >= 1 and all(dr[q][last] == hg[q][last] and dr[q][last - 1] == hg[q][last - 1] for q in compared)
    return {
        "level": level,
        "compared_degrees": compared,
        "dims": {"de_rham": {q: dr[q] for q in range(n + 1)}, "higgs": {q: hg[q] for q in range(n + 1)}},
        "slicewise_equal": {q: equal[q] for q in range(n + 1)},
        "diverging_above_range": diverging,
        "agree": agree,
        "stabilized": stabilized,
        "truncation": max_truncation,
    }


def stabilized_filtered_dims(cx: PolyComplex, start: int, max_truncation: int, lookahead: int) -> tuple[list[int], int]:
    """Smallest d >= start with identical filtered dims at d and d+1."""
    prev = None
    for d in range(start, max_truncation + 1):
        cur = filtered_dims(cx, d, lookahead)
        if prev is not None and cur == prev:
            return cur, d - 1
        prev = cur
    raise NotStabilized(f"dimensions still changing at truncation {max_truncation}")


def twisted_derham(f: Poly) -> PolyComplex:
    """(Omega, d + df ^) as the de Rham complex of the rank-one connection A_i = d_i f."""
    mats = [[[f.derivative(i)]] for i in range(f.n)]
    return PolyComplex(f.p, f.n, 1, X, mats, differentiate=True)


def koszul_of_differential(f: Poly) -> PolyComplex:
    """(Omega_X', -df' ^) with f' the same polynomial in the primed variables."""
    fp = f.with_ring(XP)
    mats = [[[-fp.derivative(j)]] for j in range(f.n)]
    return PolyComplex(f.p, f.n, 1, XP, mats, differentiate=False)


def bk_check(
    f: Poly,
    max_truncation: int | None = None,
    prime_threshold: int | None = None,
    lookahead: int | None = None,
) -> dict:
    p, n = f.p, f.n
    deg = f.degree()
    threshold = n * deg if prime_threshold is None else prime_threshold
    if p <= threshold:
        raise PrimeTooSmall(f"p = {p} does not exceed the safety threshold {threshold}")
    max_truncation = 4 * p if max_truncation is None else max_truncation
    look = (lookahead if lookahead is not None else deg + p)
    start = max(deg - 1, 0) + p
    rows = {}
    for name, cx in (("twisted_de_rham", twisted_derham(f)), ("higgs", koszul_of_differential(f))):
        dims, at = stabilized_filtered_dims(cx, start, max_truncation, look)
        rows[name] = {"dims": dims, "truncation": at}
    a, b = rows["twisted_de_rham"]["dims"], rows["higgs"]["dims"]
    mu_orders = milnor_number_two_orders(f, max_truncation)
    return {
        "dims": rows,
        "equal": a == b,
        "milnor": mu_orders,
        "matches_milnor": mu_orders["agree"] and b[n] == mu_orders["lex"] and all(v == 0 for v in b[:n]),
        "stabilized": True,
    }


def milnor_number_two_orders(f: Poly, max_truncation: int) -> dict:
    """dim F_p[x]/(d_1 f, ..., d_n f) by Macaulay-matrix elimination.

    The span of m * d_i f is intersected with polynomials of degree <= D
    (allowing cancellation from degree D + deg f) and the quotient size is
    computed twice, with the monomial columns in graded-lex and in
    reverse-lex order; both must agree and be stable in D.
    """
    p, n = f.p, f.n
    partials = [f.derivative(i) for i in range(n)]
    look = max(f.degree(), 1) + p

    def quotient_size(d: int, reverse: bool) -> tuple[int, list]:
        hi = d + look
        monos = [e for e in product(range(hi + 1), repeat=n) if sum(e) <= hi]
        cols = sorted(monos, key=lambda e: (sum(e), e[::-1] if reverse else e), reverse=True)
        cidx = {pack(e): i for i, e in enumerate(cols)}
        rows = []
        for g in partials:
            gd = g.degree()
            if gd < 0:
                continue
            for e in monos:
                if sum(e) + gd > hi:
                    continue
                row = np.zeros(len(cols), dtype=np.int64)
                for k, c in g.mul_monomial(pack(e)).terms.items():
                    row[cidx[k]] = c
                rows.append(row)
        low = sum(1 for e in monos if sum(e) <= d)
        if not rows:
            return low, []
        m = np.array(rows)
        high_cols = np.array([sum(e) > d for e in cols])
        inter = rank_mod_p(m, p) - rank_mod_p(m[:, high_cols], p)
        return low - inter, []

    out = {}
    for name, rev in (("lex", False), ("revlex", True)):
        prev = None
        val = None
        for d in range(0, max_truncation + 1):
            cur = quotient_size(d, rev)[0]
            if prev is not None and cur == prev and d > f.degree():
                val = cur
                break
            prev = cur
        if val is None:
            raise NotStabilized("Milnor number did not stabilize")
        out[name] = val
    out["agree"] = out["lex"] == out["revlex"]
    return out


def essential_support_check(module: ConnectionModule, max_truncation: int) -> dict:
    """Finite shadow of localising de Rham cohomology to the essential support.

    The support of the top Koszul cohomology of the p-curvature, met with
    the zero section, is cut out by the r x r minors of [psi_1 ... psi_n].
    When the origin lies outside it, every quotient slice at the origin
    must be acyclic; when the minors vanish identically the support is
    everything and restricting to it changes nothing.
    """
    from itertools import combinations as combs

    psi = p_curvature(module)
    r, n, p = module.rank, module.n, module.p
    stacked = [[psi.matrices[j][a][b] for j in range(n) for b in range(r)] for a in range(r)]
    at_origin = np.array([[x.constant_term() for x in row] for row in stacked], dtype=np.int64)
    origin_in_support = rank_mod_p(at_origin, p) < r
    minors_vanish = True
    for cols in combs(range(n * r), r):
        sub = [[stacked[a][c] for c in cols] for a in range(r)]
        if not pm.determinant(sub).is_zero():
            minors_vanish = False
            break
    dims = quotient_dims_series(derham_complex_of(module), max_truncation)
    all_zero = all(v == 0 for row in dims for v in row)
    if not origin_in_support:
        consistent = all_zero
    else:
        consistent = True
    return {
        "origin_in_support": bool(origin_in_support),
        "support_is_everything": bool(minors_vanish),
        "dims": {q: dims[q] for q in range(n + 1)},
        "acyclic_at_origin": all_zero,
        "consistent": bool(consistent),
    }

"""Truncated divided-power algebras, their duality with symmetric algebras,
the Casimir projector and the Higgs transform for constant nilpotent fields.

Multi-indices are tuples of length n. xi^[I] denotes a divided-power
monomial in Gamma T, omega^J a monomial of S Omega. Constant Higgs data
are F_p matrices stored as int64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import comb, factorial, prod
from typing import Mapping, Sequence

import numpy as np

from ._kernels import matmul_mod_p, nullspace_mod_p, rank_mod_p, solve_mod_p
from .errors import NotNilpotent

MultiIndex = tuple


def multi_indices(n: int, max_total: int, min_total: int = 0) -> list[MultiIndex]:
    """All I with min_total <= |I| <= max_total, by total degree then lex."""
    out = [e for e in product(range(max_total + 1), repeat=n) if min_total <= sum(e) <= max_total]
    return sorted(out, key=lambda e: (sum(e), e))


def multinomial(i: MultiIndex, j: MultiIndex, p: int) -> int:
    """(I+J)! / (I! J!) mod p, as a product of ordinary binomials."""
    return prod(comb(a + b, a) for a, b in zip(i, j)) % p


def _add(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(i, j))


@dataclass
class DPElement:
    """sum_I c_I xi^[I]; ``truncation`` None means no truncation."""

    p: int
    n: int
    coeffs: dict = field(default_factory=dict)
    truncation: int | None = None
    overflow: bool = False

    def __post_init__(self):
        self.coeffs = {tuple(k): v % self.p for k, v in self.coeffs.items() if v % self.p}
        if self.truncation is not None:
            if any(sum(k) > self.truncation for k in self.coeffs):
                raise ValueError("term beyond truncation")

    @classmethod
    def basis(cls, index: MultiIndex, p: int, truncation: int | None = None) -> "DPElement":
        return cls(p, len(index), {tuple(index): 1}, truncation)

    def __add__(self, other: "DPElement") -> "DPElement":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return DPElement(self.p, self.n, out, _combined(self.truncation, other.truncation))


@dataclass
class SymElement:
    """sum_J c_J omega^J."""

    p: int
    n: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {tuple(k): v % self.p for k, v in self.coeffs.items() if v % self.p}

    @classmethod
    def basis(cls, index: MultiIndex, p: int) -> "SymElement":
        return cls(p, len(index), {tuple(index): 1})


def _combined(a: int | None, b: int | None) -> int | None:
    if a is None or b is None:
        return a if b is None else b
    return max(a, b)


def dp_multiply(a: DPElement, b: DPElement) -> DPElement:
    """xi^[I] xi^[J] = (I+J)!/(I!J!) xi^[I+J], truncated; dropped nonzero terms set ``overflow``."""
    p = a.p
    trunc = _combined(a.truncation, b.truncation)
    out: dict = {}
    overflow = a.overflow or b.overflow
    for i, ci in a.coeffs.items():
        for j, cj in b.coeffs.items():
            c = ci * cj * multinomial(i, j, p) % p
            if not c:
                continue
            k = _add(i, j)
            if trunc is not None and sum(k) > trunc:
                overflow = True
                continue
            out[k] = out.get(k, 0) + c
    res = DPElement(p, a.n, out, trunc)
    res.overflow = overflow
    return res


def dp_pair(a: DPElement, s: SymElement) -> SymElement:
    """Contraction xi^[I] . omega^J = prod_k C(J_k, I_k) omega^(J-I)."""
    p = a.p
    out: dict = {}
    for i, ci in a.coeffs.items():
        for j, cj in s.coeffs.items():
            if any(x > y for x, y in zip(i, j)):
                continue
            c = ci * cj * prod(comb(y, x) for x, y in zip(i, j)) % p
            if c:
                k = tuple(y - x for x, y in zip(i, j))
                out[k] = out.get(k, 0) + c
    return SymElement(p, s.n, out)


def pairing_matrix(n: int, degree: int, p: int) -> np.ndarray:
    """<xi^[I], omega^J> for |I| = |J| = degree."""
    idx = multi_indices(n, degree, degree)
    m = np.zeros((len(idx), len(idx)), dtype=np.int64)
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            m[a, b] = dp_pair(DPElement.basis(i, p), SymElement.basis(j, p)).coeffs.get((0,) * n, 0)
    return m


# rational model used as an independent certificate ---------------------------------


def _frac_mod(x: Fraction, p: int) -> int:
    return x.numerator * pow(x.denominator, p - 2, p) % p


def rational_product(i: MultiIndex, j: MultiIndex) -> Fraction:
    """Coefficient of xi^[I+J] in xi^[I] xi^[J] with xi^[I] = xi^I / I! over Q."""
    fi = prod(factorial(x) for x in i)
    fj = prod(factorial(x) for x in j)
    fk = prod(factorial(x + y) for x, y in zip(i, j))
    return Fraction(fk, fi * fj)


def rational_contraction(i: MultiIndex, j: MultiIndex) -> Fraction:
    """(1/I!) d^I omega^J evaluated as a coefficient over Q."""
    if any(x > y for x, y in zip(i, j)):
        return Fraction(0)
    num = prod(factorial(y) // factorial(y - x) for x, y in zip(i, j))
    return Fraction(num, prod(factorial(x) for x in i))


def comultiplication(k: MultiIndex, p: int) -> dict:
    """Delta(omega^K) computed as prod_k (u_k + v_k)^(K_k) by repeated multiplication."""
    terms = {((0,) * len(k), (0,) * len(k)): 1}
    for var, e in enumerate(k):
        for _ in range(e):
            nxt: dict = {}
            for (a, b), c in terms.items():
                a1 = tuple(x + (t == var) for t, x in enumerate(a))
                b1 = tuple(x + (t == var) for t, x in enumerate(b))
                nxt[(a1, b)] = (nxt.get((a1, b), 0) + c) % p
                nxt[(a, b1)] = (nxt.get((a, b1), 0) + c) % p
            terms = nxt
    return {k2: v for k2, v in terms.items() if v}


def dp_table_check(n: int, p: int, max_order: int = 4) -> dict:
    """Compare multiplication/contraction tables with the rational model and
    check perfectness of the pairing and duality with comultiplication."""
    idx = multi_indices(n, max_order)
    mult_ok = True
    pair_ok = True
    for i in idx:
        for j in idx:
            got = dp_multiply(DPElement.basis(i, p), DPElement.basis(j, p)).coeffs.get(_add(i, j), 0)
            mult_ok &= got == _frac_mod(rational_product(i, j), p)
            k = tuple(y - x for x, y in zip(i, j))
            got = dp_pair(DPElement.basis(i, p), SymElement.basis(j, p)).coeffs.get(k, 0) if min(k) >= 0 else 0
            pair_ok &= got == _frac_mod(rational_contraction(i, j), p)
    perfect = all(
        rank_mod_p(pairing_matrix(n, d, p), p) == len(multi_indices(n, d, d)) for d in range(max_order + 1)
    )
    dual_ok = True
    for total in range(max_order + 1):
        for left in range(total + 1):
            gi, gj = multi_indices(n, left, left), multi_indices(n, total - left, total - left)
            gk = multi_indices(n, total, total)
            prod_mat = np.zeros((len(gk), len(gi) * len(gj)), dtype=np.int64)
            for a, i in enumerate(gi):
                for b, j in enumerate(gj):
                    res = dp_multiply(DPElement.basis(i, p), DPElement.basis(j, p))
                    for k, c in res.coeffs.items():
                        prod_mat[gk.index(k), a * len(gj) + b] = c
            co_mat = np.zeros((len(gi) * len(gj), len(gk)), dtype=np.int64)
            for c_idx, k in enumerate(gk):
                for (a_exp, b_exp), c in comultiplication(k, p).items():
                    if a_exp in gi and b_exp in gj:
                        co_mat[gi.index(a_exp) * len(gj) + gj.index(b_exp), c_idx] = c
            dual_ok &= bool(np.array_equal(prod_mat, co_mat.T))
    return {
        "multiplication_table": bool(mult_ok),
        "pairing_table": bool(pair_ok),
        "pairing_perfect": bool(perfect),
        "product_dual_to_comultiplication": bool(dual_ok),
    }


# Casimir projector and Higgs transform -------------------------------------------


def constant_nilpotence_level(thetas: Sequence[np.ndarray], p: int) -> int:
    r = thetas[0].shape[0]
    for length in range(1, p + 1):
        ok = True
        for combo in combinations_with_replacement(range(len(thetas)), length):
            m = np.eye(r, dtype=np.int64)
            for k in combo:
                m = matmul_mod_p(m, thetas[k], p)
            if m.any():
                ok = False
                break
        if ok:
            return length - 1
    raise NotNilpotent("Higgs field is not nilpotent of level < p")


class SymTensorSpace:
    """Coordinates on S_{<=N} Omega (x) E with basis omega^J (x) e_k."""

    def __init__(self, n: int, rank: int, truncation: int):
        self.n, self.rank, self.truncation = n, rank, truncation
        self.monomials = multi_indices(n, truncation)
        self.index = {(j, k): a * rank + k for a, j in enumerate(self.monomials) for k in range(rank)}
        self.dim = len(self.monomials) * rank


def _theta_power(thetas: Sequence[np.ndarray], exps: MultiIndex, p: int) -> np.ndarray:
    """theta^I / I! (divided power of commuting matrices)."""
    r = thetas[0].shape[0]
    m = np.eye(r, dtype=np.int64)
    for t, e in enumerate(exps):
        for _ in range(e):
            m = matmul_mod_p(m, thetas[t], p)
    denom = prod(factorial(e) for e in exps)
    return m * pow(denom, p - 2, p) % p


def total_field_action(thetas: Sequence[np.ndarray], index: MultiIndex, p: int, src: SymTensorSpace, dst: SymTensorSpace) -> np.ndarray:
    """theta_tot(xi^[I]) = sum_{I1+I2=I} contraction by xi^[I1] (x) theta^I2 / I2!."""
    mat = np.zeros((dst.dim, src.dim), dtype=np.int64)
    r = src.rank
    for i1 in product(*(range(e + 1) for e in index)):
        i2 = tuple(e - a for e, a in zip(index, i1))
        tp = _theta_power(thetas, i2, p)
        if not tp.any():
            continue
        for j in src.monomials:
            if any(a > b for a, b in zip(i1, j)):
                continue
            c = prod(comb(b, a) for a, b in zip(i1, j)) % p
            if not c:
                continue
            jj = tuple(b - a for a, b in zip(i1, j))
            if sum(jj) > dst.truncation:
                continue
            for k in range(r):
                col = src.index[(j, k)]
                for l in range(r):
                    if tp[l, k]:
                        mat[dst.index[(jj, l)], col] = (mat[dst.index[(jj, l)], col] + c * tp[l, k]) % p
    return mat


def total_field_stack(thetas: Sequence[np.ndarray], truncation: int, p: int) -> np.ndarray:
    """theta_tot(xi_1), ..., theta_tot(xi_n) stacked vertically."""
    n, r = len(thetas), thetas[0].shape[0]
    space = SymTensorSpace(n, r, truncation)
    blocks = [total_field_action(thetas, tuple(int(t == j) for t in range(n)), p, space, space) for j in range(n)]
    return np.concatenate(blocks, axis=0)


@dataclass
class CasimirResult:
    matrix: np.ndarray
    space: SymTensorSpace
    spill_free: bool
    level: int


def casimir_projector(thetas: Sequence[np.ndarray], truncation: int, p: int) -> CasimirResult:
    """kappa = sum_i (-1)^i sum_{|I|=i} omega^I theta_tot(xi^[I]) on S_{<=N} (x) E.

    Computed exactly into S_{<=N+l} (l the nilpotence level); the part above
    degree N is recorded in ``spill_free`` and then discarded.
    """
    thetas = [np.asarray(t, dtype=np.int64) % p for t in thetas]
    level = constant_nilpotence_level(thetas, p)
    n, r = len(thetas), thetas[0].shape[0]
    src = SymTensorSpace(n, r, truncation)
    big = SymTensorSpace(n, r, truncation + level)
    kappa = np.zeros((big.dim, src.dim), dtype=np.int64)
    for index in multi_indices(n, truncation + level):
        act = total_field_action(thetas, index, p, src, big)
        if not act.any():
            continue
        sign = -1 if sum(index) % 2 else 1
        # multiply by omega^I
        shifted = np.zeros_like(act)
        for (j, k), row in big.index.items():
            jj = _add(j, index)
            if sum(jj) <= big.truncation:
                shifted[big.index[(jj, k)]] = act[row]
        kappa = (kappa + sign * shifted) % p
    low = [big.index[key] for key in sorted(src.index, key=src.index.get)]
    high = [row for row in range(big.dim) if row not in set(low)]
    spill_free = not kappa[high].any()
    return CasimirResult(kappa[low] % p, src, bool(spill_free), level)


def casimir_check(thetas: Sequence[np.ndarray], truncation: int, p: int) -> dict:
    res = casimir_projector(thetas, truncation, p)
    k = res.matrix
    field_stack = total_field_stack([np.asarray(t) % p for t in thetas], truncation, p)
    kernel = nullspace_mod_p(field_stack, p)
    image_rank = rank_mod_p(k, p)
    idempotent = bool(np.array_equal(matmul_mod_p(k, k, p), k))
    # image inside the kernel and of the same dimension
    inside = not matmul_mod_p(field_stack, k, p).any()
    return {
        "idempotent": idempotent,
        "image_in_kernel": bool(inside),
        "image_rank": image_rank,
        "kernel_dim": int(kernel.shape[1]),
        "rank_nullity": int(kernel.shape[1]) == res.space.dim - rank_mod_p(field_stack, p),
        "spill_free": res.spill_free,
        "ok": idempotent and inside and image_rank == kernel.shape[1] and res.spill_free,
    }


@dataclass
class HiggsTransformResult:
    basis: np.ndarray
    fields: list
    space: SymTensorSpace
    to_source: np.ndarray


def higgs_transform(thetas: Sequence[np.ndarray], truncation: int, p: int) -> HiggsTransformResult:
    """T(E) = ker theta_tot in S_{<=N} Omega (x) E with the field of the S factor.

    ``to_source`` is the degree-zero projection T(E) -> E; it intertwines
    the new field with -theta.
    """
    thetas = [np.asarray(t, dtype=np.int64) % p for t in thetas]
    level = constant_nilpotence_level(thetas, p)
    if level > truncation:
        raise NotNilpotent(f"nilpotence level {level} exceeds truncation {truncation}")
    n, r = len(thetas), thetas[0].shape[0]
    space = SymTensorSpace(n, r, truncation)
    kernel = nullspace_mod_p(total_field_stack(thetas, truncation, p), p)
    zeros = [np.zeros((r, r), dtype=np.int64)] * n
    fields = []
    for j in range(n):
        unit = tuple(int(t == j) for t in range(n))
        contr = total_field_action(zeros, unit, p, space, space)
        image = matmul_mod_p(contr, kernel, p)
        sol = solve_mod_p(kernel, image, p)
        if sol is None:
            raise ArithmeticError("S-factor field does not preserve the kernel")
        fields.append(sol)
    degree_zero = [space.index[((0,) * n, k)] for k in range(r)]
    return HiggsTransformResult(kernel, fields, space, kernel[degree_zero] % p)


def involution_check(thetas: Sequence[np.ndarray], truncation: int, p: int) -> dict:
    """T(T(E)) is isomorphic to E, via the composite of the two degree-zero projections."""
    thetas = [np.asarray(t, dtype=np.int64) % p for t in thetas]
    first = higgs_transform(thetas, truncation, p)
    second = higgs_transform(first.fields, truncation, p)
    iso = matmul_mod_p(first.to_source, second.to_source, p)
    r = thetas[0].shape[0]
    invertible = rank_mod_p(iso, p) == r
    intertwines = all(
        np.array_equal(matmul_mod_p(t, iso, p), matmul_mod_p(iso, f, p)) for t, f in zip(thetas, second.fields)
    )
    minus_theta = all(
        np.array_equal(matmul_mod_p(-t % p, first.to_source, p), matmul_mod_p(first.to_source, f, p))
        for t, f in zip(thetas, first.fields)
    )
    return {
        "rank": int(first.basis.shape[1]),
        "first_field_is_minus_theta": bool(minus_theta and rank_mod_p(first.to_source, p) == r),
        "isomorphism": bool(invertible and intertwines),
        "matrix": iso,
        "ok": bool(invertible and intertwines and minus_theta),
    }

"""Crystalline differential operators over F_p[x_0..x_{n-1}].

An operator is kept in left normal form sum_A f_A d^A, stored as a map
from the packed exponent of d^A to the coefficient polynomial f_A.
"""

from __future__ import annotations

from itertools import product
from math import comb
from typing import Mapping, Sequence

import numpy as np

from ._kernels import rank_mod_p
from .errors import ProblemTooLarge, RingMismatch
from .gfpoly import X, Poly, pack, unit_key, unpack


def _sub_multi_indices(exps: tuple[int, ...]):
    return product(*(range(e + 1) for e in exps))


def _multi_binom(top: Sequence[int], bottom: Sequence[int], p: int) -> int:
    out = 1
    for a, b in zip(top, bottom):
        out = out * comb(a, b) % p
        if not out:
            break
    return out


def _iterated_derivative(g: Poly, exps: Sequence[int]) -> Poly:
    for i, e in enumerate(exps):
        for _ in range(e):
            if g.is_zero():
                return g
            g = g.derivative(i)
    return g


class DiffOp:
    __slots__ = ("p", "n", "terms")

    def __init__(self, p: int, n: int, terms: Mapping[int, Poly] | None = None):
        self.p, self.n = p, n
        self.terms = {k: f for k, f in (terms or {}).items() if not f.is_zero()}

    @classmethod
    def from_poly(cls, f: Poly) -> "DiffOp":
        return cls(f.p, f.n, {0: f})

    @classmethod
    def partial(cls, i: int, p: int, n: int) -> "DiffOp":
        return cls(p, n, {unit_key(i): Poly.one(p, n)})

    @classmethod
    def monomial(cls, xexps: Sequence[int], dexps: Sequence[int], p: int, coeff: int = 1) -> "DiffOp":
        return cls(p, len(xexps), {pack(dexps): Poly.monomial(xexps, p, coeff)})

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        for k, f in self.terms.items():
            yield unpack(k, self.n), f

    def order(self) -> int:
        return max((sum(unpack(k, self.n)) for k in self.terms), default=-1)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        out = dict(self.terms)
        for k, f in other.terms.items():
            out[k] = out[k] + f if k in out else f
        return DiffOp(self.p, self.n, out)

    def __neg__(self) -> "DiffOp":
        return DiffOp(self.p, self.n, {k: -f for k, f in self.terms.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def __mul__(self, other: "DiffOp") -> "DiffOp":
        if self.n != other.n or self.p != other.p:
            raise RingMismatch("operators on different rings")
        p, n = self.p, self.n
        out: dict[int, Poly] = {}
        for ka, fa in self.terms.items():
            aexp = unpack(ka, n)
            for kb, gb in other.terms.items():
                for cexp in _sub_multi_indices(aexp):
                    b = _multi_binom(aexp, cexp, p)
                    if not b:
                        continue
                    dg = _iterated_derivative(gb, cexp)
                    if dg.is_zero():
                        continue
                    key = ka - pack(cexp) + kb
                    term = (fa * dg).scale(b)
                    out[key] = out[key] + term if key in out else term
        return DiffOp(p, n, out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.p == other.p and self.n == other.n and self.terms == other.terms

    def apply(self, g: Poly) -> Poly:
        """Action on a polynomial function."""
        out = g.zero_like()
        for k, f in self.terms.items():
            out = out + f * _iterated_derivative(g, unpack(k, self.n))
        return out

    def __repr__(self) -> str:
        body = " + ".join(f"({f})*d^{list(unpack(k, self.n))}" for k, f in self.terms.items()) or "0"
        return f"DiffOp({body})"


def op_mul(a: DiffOp, b: DiffOp) -> DiffOp:
    return a * b


def commutator(a: DiffOp, b: DiffOp) -> DiffOp:
    return a * b - b * a


class Derivation:
    """Vector field sum_i f_i d_i with polynomial coefficients."""

    def __init__(self, coeffs: Sequence[Poly]):
        if not coeffs:
            raise ValueError("need at least one coefficient")
        self.coeffs = tuple(coeffs)
        self.p = coeffs[0].p
        self.n = coeffs[0].n
        if len(coeffs) != self.n or any(c.ring != X for c in coeffs):
            raise ValueError("derivation needs n coefficients over X")

    def __call__(self, g: Poly) -> Poly:
        out = g.zero_like()
        for i, f in enumerate(self.coeffs):
            if not f.is_zero():
                out = out + f * g.derivative(i)
        return out

    def as_operator(self) -> DiffOp:
        return DiffOp(self.p, self.n, {unit_key(i): f for i, f in enumerate(self.coeffs)})

    def left_multiply(self, op: DiffOp) -> DiffOp:
        """D * op, using D(g d^B) = D(g) d^B + sum_i f_i g d^(B+e_i)."""
        out: dict[int, Poly] = {}

        def acc(key: int, term: Poly) -> None:
            if not term.is_zero():
                out[key] = out[key] + term if key in out else term

        for kb, g in op.terms.items():
            acc(kb, self(g))
            for i, f in enumerate(self.coeffs):
                if not f.is_zero():
                    acc(kb + unit_key(i), f * g)
        return DiffOp(self.p, self.n, out)

    def power(self, e: int) -> DiffOp:
        op = DiffOp.from_poly(Poly.one(self.p, self.n))
        for _ in range(e):
            op = self.left_multiply(op)
        return op


def pth_iterate(der: Derivation) -> Derivation:
    """The restricted p-th power: the derivation whose value on x_i is D^p(x_i)."""
    coeffs = []
    for i in range(der.n):
        g = Poly.var(i, der.p, der.n)
        for _ in range(der.p):
            g = der(g)
        coeffs.append(g)
    return Derivation(coeffs)


def central_witness(der: Derivation) -> DiffOp:
    """D^p - D^(p) as an element of the crystalline operator ring."""
    return der.power(der.p) - pth_iterate(der).as_operator()


def centrality_certificate(op: DiffOp) -> dict[str, bool]:
    """Commutators with every generator x_i and d_i vanish."""
    p, n = op.p, op.n
    cert = {}
    for i in range(n):
        xi = DiffOp.from_poly(Poly.var(i, p, n))
        di = DiffOp.partial(i, p, n)
        cert[f"[x{i},c]=0"] = commutator(xi, op).is_zero()
        cert[f"[d{i},c]=0"] = commutator(di, op).is_zero()
    return cert


def expected_witness(der: Derivation) -> DiffOp:
    """sum_i f_i^p d_i^p, the closed form the witness must equal."""
    p = der.p
    return DiffOp(p, der.n, {unit_key(i) * p: f ** p for i, f in enumerate(der.coeffs)})


def jacobson_identity_check(a: Poly) -> dict:
    """(d + a)^p against d^p + a^p + d^(p-1)(a) for a in one variable.

    The difference of the last two terms is the p-curvature of the rank
    one connection d + a.
    """
    if a.n != 1 or a.ring != X:
        raise RingMismatch("the rank one identity is checked in one variable over X")
    p = a.p
    op = DiffOp.partial(0, p, 1) + DiffOp.from_poly(a)
    power = op
    for _ in range(p - 1):
        power = power * op
    tail = a ** p + _iterated_derivative(a, [p - 1])
    expected = DiffOp.monomial([0], [p], p) + DiffOp.from_poly(tail)
    return {"equal": power == expected, "p_curvature": tail}


def _reduce_truncated(op: DiffOp, p: int) -> dict[tuple[tuple[int, ...], tuple[int, ...]], int]:
    # drop the two-sided ideal generated by x_i^p and d_i^p
    out = {}
    n = op.n
    for k, f in op.terms.items():
        dexps = unpack(k, n)
        if max(dexps) >= p:
            continue
        for xexps, c in f.items():
            if max(xexps) < p:
                out[(xexps, dexps)] = c
    return out


def splitting_generator_check(d: int, p: int, max_dim: int = 2, max_prime: int = 5) -> dict:
    """Check that x^A d^(p-1,...,p-1) x^B span D/(x^p, d^p) and that this
    quotient acts faithfully on F_p[x]/(x^p).

    Both spaces have dimension p^(2d); the two ranks are returned.
    """
    if d > max_dim or p > max_prime:
        raise ProblemTooLarge(f"splitting check limited to d <= {max_dim}, p <= {max_prime}")
    grid = list(product(range(p), repeat=d))
    index = {(a, b): i for i, (a, b) in enumerate(product(grid, grid))}
    dim = len(index)
    top = DiffOp(p, d, {pack([p - 1] * d): Poly.one(p, d)})
    rows = []
    for a in grid:
        left = DiffOp.from_poly(Poly.monomial(a, p))
        left_top = left * top
        for b in grid:
            elem = left_top * DiffOp.from_poly(Poly.monomial(b, p))
            row = np.zeros(dim, dtype=np.int64)
            for key, c in _reduce_truncated(elem, p).items():
                row[index[key]] = c
            rows.append(row)
    span_rank = rank_mod_p(np.array(rows), p)

    # action of x^A d^B on the basis x^C of F_p[x]/(x^p)
    basis = {c: i for i, c in enumerate(grid)}
    rows = []
    for a, b in product(grid, grid):
        op = DiffOp.monomial(a, b, p)
        row = np.zeros(len(grid) ** 2, dtype=np.int64)
        for c, ci in basis.items():
            img = op.apply(Poly.monomial(c, p))
            for exps, v in img.items():
                if max(exps) < p:
                    row[basis[exps] * len(grid) + ci] = v
        rows.append(row)
    action_rank = rank_mod_p(np.array(rows), p)
    return {
        "dimension": dim,
        "span_rank": span_rank,
        "action_rank": action_rank,
        "ok": span_rank == dim and action_rank == dim,
    }

"""Differential forms with polynomial coefficients and the Cartier operator."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import DegreeTooHigh, NotClosed, RingMismatch
from .gfpoly import X, XP, Poly, frobenius_pullback, pack, unpack


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted index tuple of dx_left ^ dx_right (sign 0 if they overlap)."""
    if set(left) & set(right):
        return 0, ()
    inversions = sum(1 for a in left for b in right if a > b)
    return (-1 if inversions % 2 else 1), tuple(sorted(left + right))


class DiffForm:
    """A k-form sum f_I dx_I with I increasing."""

    __slots__ = ("p", "n", "ring", "k", "comps")

    def __init__(self, p: int, n: int, k: int, comps: Mapping[tuple[int, ...], Poly] | None = None, ring: str = X):
        if k < 0 or k > n:
            raise DegreeTooHigh(f"form degree {k} outside 0..{n}")
        self.p, self.n, self.k, self.ring = p, n, k, ring
        clean = {}
        for idx, f in (comps or {}).items():
            idx = tuple(idx)
            if len(idx) != k or list(idx) != sorted(set(idx)) or (idx and idx[-1] >= n):
                raise ValueError(f"bad index {idx} for a {k}-form in {n} variables")
            if f.ring != ring or f.p != p or f.n != n:
                raise RingMismatch("coefficient does not live on the form's ring")
            if not f.is_zero():
                clean[idx] = f
        self.comps = clean

    @classmethod
    def zero(cls, p: int, n: int, k: int, ring: str = X) -> "DiffForm":
        return cls(p, n, k, {}, ring)

    @classmethod
    def function(cls, f: Poly) -> "DiffForm":
        return cls(f.p, f.n, 0, {(): f}, f.ring)

    @classmethod
    def one_form(cls, coeffs: Sequence[Poly]) -> "DiffForm":
        """The 1-form sum coeffs[i] dx_i."""
        f0 = coeffs[0]
        return cls(f0.p, f0.n, 1, {(i,): c for i, c in enumerate(coeffs)}, f0.ring)

    def basis_indices(self) -> list[tuple[int, ...]]:
        return list(combinations(range(self.n), self.k))

    def coeff(self, idx: Iterable[int]) -> Poly:
        idx = tuple(idx)
        f = self.comps.get(idx)
        return f if f is not None else Poly.zero(self.p, self.n, self.ring)

    def is_zero(self) -> bool:
        return not self.comps

    def _check(self, other: "DiffForm") -> None:
        if (self.p, self.n, self.ring, self.k) != (other.p, other.n, other.ring, other.k):
            raise RingMismatch("forms of different type")

    def __add__(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        out = dict(self.comps)
        for idx, f in other.comps.items():
            out[idx] = out[idx] + f if idx in out else f
        return DiffForm(self.p, self.n, self.k, out, self.ring)

    def __neg__(self) -> "DiffForm":
        return DiffForm(self.p, self.n, self.k, {i: -f for i, f in self.comps.items()}, self.ring)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def scale(self, g: Poly | int) -> "DiffForm":
        return DiffForm(self.p, self.n, self.k, {i: f * g for i, f in self.comps.items()}, self.ring)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffForm):
            return NotImplemented
        return (self.p, self.n, self.ring, self.k) == (other.p, other.n, other.ring, other.k) and self.comps == other.comps

    def __repr__(self) -> str:
        body = " + ".join(f"({f})d{list(i)}" for i, f in sorted(self.comps.items())) or "0"
        return f"DiffForm[{self.k}]({body})"


def exterior_derivative(form: DiffForm) -> DiffForm:
    if form.k == form.n:
        raise DegreeTooHigh(f"no forms of degree {form.k + 1} in {form.n} variables")
    out: dict[tuple[int, ...], Poly] = {}
    for idx, f in form.comps.items():
        for i in range(form.n):
            sign, merged = _merge_sign((i,), idx)
            if not sign:
                continue
            term = f.derivative(i)
            if term.is_zero():
                continue
            term = term if sign > 0 else -term
            out[merged] = out[merged] + term if merged in out else term
    return DiffForm(form.p, form.n, form.k + 1, out, form.ring)


def is_closed(form: DiffForm) -> bool:
    if form.k == form.n:
        return True
    return exterior_derivative(form).is_zero()


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    if (a.p, a.n, a.ring) != (b.p, b.n, b.ring):
        raise RingMismatch("forms on different rings")
    if a.k + b.k > a.n:
        raise DegreeTooHigh(f"wedge of degrees {a.k} and {b.k} exceeds {a.n}")
    out: dict[tuple[int, ...], Poly] = {}
    for ia, fa in a.comps.items():
        for ib, fb in b.comps.items():
            sign, merged = _merge_sign(ia, ib)
            if not sign:
                continue
            term = fa * fb
            term = term if sign > 0 else -term
            out[merged] = out[merged] + term if merged in out else term
    return DiffForm(a.p, a.n, a.k + b.k, out, a.ring)


def cartier_operator(form: DiffForm) -> DiffForm:
    """Cartier operator on closed 1-forms over X, landing on X'.

    Only monomials x^(pK) x_i^(p-1) dx_i contribute, each going to
    y^K dy_i; every other monomial of a closed form is killed.
    """
    if form.ring != X or form.k != 1:
        raise ValueError("cartier_operator expects a 1-form over X")
    if not is_closed(form):
        raise NotClosed("form is not closed")
    p, n = form.p, form.n
    out = {}
    for (i,), f in form.comps.items():
        terms = {}
        for key, c in f.terms.items():
            exps = unpack(key, n)
            if all((e + 1) % p == 0 if j == i else e % p == 0 for j, e in enumerate(exps)):
                terms[pack(e // p for e in exps)] = c
        if terms:
            out[(i,)] = Poly(p, n, terms, XP)
    return DiffForm(p, n, 1, out, XP)


def inverse_cartier_class(form: DiffForm, zeta) -> DiffForm:
    """Closed representative of the inverse Cartier image of a 1-form on X'.

    ``zeta`` is any object exposing ``forms``: the images of dy_0..dy_{n-1},
    each a closed 1-form over X. The result is sum_j F*(h_j) zeta_j.
    """
    if form.ring != XP or form.k != 1:
        raise ValueError("inverse_cartier_class expects a 1-form over X'")
    out = DiffForm.zero(form.p, form.n, 1, X)
    for (j,), h in form.comps.items():
        out = out + zeta.forms[j].scale(frobenius_pullback(h))
    return out

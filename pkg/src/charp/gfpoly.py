"""Sparse multivariate polynomials over F_p.

A polynomial lives either on the source ring ``X`` (variables x0..x{n-1})
or on its Frobenius twist ``X'`` (variables y0..y{n-1}). Monomials are
stored as packed integers so that multiplying two monomials is a single
integer addition; 16 bits are reserved for each exponent.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

from .errors import NotDescendable, NotPrime, ParseError, RingMismatch

X = "X"
XP = "X'"
VAR_PREFIX = {X: "x", XP: "y"}

_BITS = 16
_MASK = (1 << _BITS) - 1
MAX_EXPONENT = _MASK


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def check_prime(p: int) -> int:
    """Validate that ``p`` is an odd prime and return it."""
    if isinstance(p, bool) or not isinstance(p, int):
        raise NotPrime(f"prime must be an integer, got {p!r}")
    if not is_prime(p) or p == 2:
        raise NotPrime(f"{p} is not an odd prime")
    return p


class PrimeModulus(int):
    """An int that is known to be an odd prime."""

    def __new__(cls, p: int):
        return super().__new__(cls, check_prime(p))

    def inverse(self, a: int) -> int:
        a %= self
        if not a:
            raise ZeroDivisionError("zero has no inverse mod p")
        return pow(a, int(self) - 2, int(self))


def pack(exps: Iterable[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e < 0 or e > MAX_EXPONENT:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (_BITS * i)
    return key


def unpack(key: int, n: int) -> tuple[int, ...]:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(n))


def key_degree(key: int, n: int) -> int:
    total = 0
    for _ in range(n):
        total += key & _MASK
        key >>= _BITS
    return total


def unit_key(i: int) -> int:
    return 1 << (_BITS * i)


class Poly:
    """Immutable polynomial with coefficients in F_p."""

    __slots__ = ("p", "n", "ring", "terms", "_hash")

    def __init__(self, p: int, n: int, terms: Mapping[int, int] | None = None, ring: str = X):
        self.p = p
        self.n = n
        self.ring = ring
        clean: dict[int, int] = {}
        if terms:
            for k, c in terms.items():
                c %= p
                if c:
                    clean[k] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, p: int, n: int, terms: dict[int, int], ring: str) -> "Poly":
        # terms must already be reduced with no zero coefficients
        obj = cls.__new__(cls)
        obj.p, obj.n, obj.ring, obj.terms, obj._hash = p, n, ring, terms, None
        return obj

    # constructors ------------------------------------------------------

    @classmethod
    def zero(cls, p: int, n: int, ring: str = X) -> "Poly":
        return cls._raw(p, n, {}, ring)

    @classmethod
    def const(cls, c: int, p: int, n: int, ring: str = X) -> "Poly":
        return cls(p, n, {0: c}, ring)

    @classmethod
    def one(cls, p: int, n: int, ring: str = X) -> "Poly":
        return cls(p, n, {0: 1}, ring)

    @classmethod
    def var(cls, i: int, p: int, n: int, ring: str = X) -> "Poly":
        return cls(p, n, {unit_key(i): 1}, ring)

    @classmethod
    def monomial(cls, exps: Iterable[int], p: int, coeff: int = 1, ring: str = X) -> "Poly":
        exps = tuple(exps)
        return cls(p, len(exps), {pack(exps): coeff}, ring)

    @classmethod
    def from_dict(cls, data: Mapping[tuple[int, ...], int], p: int, n: int, ring: str = X) -> "Poly":
        terms: dict[int, int] = {}
        for exps, c in data.items():
            k = pack(exps)
            terms[k] = terms.get(k, 0) + c
        return cls(p, n, terms, ring)

    def like(self, terms: Mapping[int, int]) -> "Poly":
        return Poly(self.p, self.n, terms, self.ring)

    def zero_like(self) -> "Poly":
        return Poly._raw(self.p, self.n, {}, self.ring)

    def const_like(self, c: int) -> "Poly":
        return Poly(self.p, self.n, {0: c}, self.ring)

    # inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_term(self) -> int:
        return self.terms.get(0, 0)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(key_degree(k, self.n) for k in self.terms)

    def coeff(self, exps: Iterable[int]) -> int:
        return self.terms.get(pack(exps), 0)

    def items(self) -> Iterator[tuple[tuple[int, ...], int]]:
        for k, c in self.terms.items():
            yield unpack(k, self.n), c

    def to_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.items())

    def sorted_items(self) -> list[tuple[tuple[int, ...], int]]:
        """Terms in descending graded-lex order."""
        return sorted(self.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def leading_term(self) -> tuple[tuple[int, ...], int]:
        return max(self.items(), key=lambda t: (sum(t[0]), t[0]))

    def __len__(self) -> int:
        return len(self.terms)

    # arithmetic --------------------------------------------------------

    def _check(self, other: "Poly") -> None:
        if self.p != other.p or self.n != other.n or self.ring != other.ring:
            raise RingMismatch(
                f"cannot combine polynomials over {self.ring}/F_{self.p}[{self.n}] "
                f"and {other.ring}/F_{other.p}[{other.n}]"
            )

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, int):
            return self.const_like(other)
        return NotImplemented

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = (out.get(k, 0) + c) % p
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return Poly._raw(p, self.n, out, self.ring)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        p = self.p
        return Poly._raw(p, self.n, {k: p - c for k, c in self.terms.items()}, self.ring)

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def scale(self, c: int) -> "Poly":
        c %= self.p
        if not c:
            return self.zero_like()
        p = self.p
        return Poly._raw(p, self.n, {k: v * c % p for k, v in self.terms.items()}, self.ring)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, int):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(self.terms) < len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out: dict[int, int] = {}
        get = out.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        p = self.p
        clean = {}
        for k, v in out.items():
            v %= p
            if v:
                clean[k] = v
        return Poly._raw(p, self.n, clean, self.ring)

    __rmul__ = __mul__

    def mul_monomial(self, key: int, coeff: int = 1) -> "Poly":
        p = self.p
        coeff %= p
        if not coeff:
            return self.zero_like()
        return Poly._raw(p, self.n, {k + key: c * coeff % p for k, c in self.terms.items()}, self.ring)

    def __pow__(self, e: int) -> "Poly":
        if e < 0:
            raise ValueError("negative power")
        result = self.const_like(1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self.is_constant() and self.constant_term() == other % self.p
        if not isinstance(other, Poly):
            return NotImplemented
        return (self.p, self.n, self.ring) == (other.p, other.n, other.ring) and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.p, self.n, self.ring, frozenset(self.terms.items())))
        return self._hash

    def derivative(self, i: int) -> "Poly":
        return partial_derivative(self, i)

    def truncate(self, max_degree: int) -> "Poly":
        n = self.n
        return Poly._raw(
            self.p, n, {k: c for k, c in self.terms.items() if key_degree(k, n) <= max_degree}, self.ring
        )

    def with_ring(self, ring: str) -> "Poly":
        """Same coefficients, relabelled onto another ring (no Frobenius)."""
        return Poly._raw(self.p, self.n, dict(self.terms), ring)

    def exact_div(self, other: "Poly") -> "Poly":
        """Quotient ``self / other``; raises ValueError if the division is not exact."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        n, p = self.n, self.p
        lead_exps, lead_c = other.leading_term()
        lead_key = pack(lead_exps)
        inv = pow(lead_c, p - 2, p)
        if other.is_constant():
            return self.scale(inv)
        rem = dict(self.terms)
        quot: dict[int, int] = {}
        order = lambda k: (key_degree(k, n), unpack(k, n))  # noqa: E731
        while rem:
            k = max(rem, key=order)
            exps = unpack(k, n)
            diff = [a - b for a, b in zip(exps, lead_exps)]
            if min(diff) < 0:
                raise ValueError("polynomial division is not exact")
            qk = k - lead_key
            qc = rem[k] * inv % p
            quot[qk] = qc
            for ok, oc in other.terms.items():
                kk = ok + qk
                v = (rem.get(kk, 0) - qc * oc) % p
                if v:
                    rem[kk] = v
                else:
                    rem.pop(kk, None)
        return Poly._raw(p, n, quot, self.ring)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)!r}, p={self.p}, ring={self.ring})"

    def __str__(self) -> str:
        return format_poly(self)


def partial_derivative(f: Poly, i: int) -> Poly:
    if not 0 <= i < f.n:
        raise IndexError(f"variable index {i} out of range for {f.n} variables")
    p = f.p
    shift = _BITS * i
    unit = 1 << shift
    out = {}
    for k, c in f.terms.items():
        e = (k >> shift) & _MASK
        v = e * c % p
        if v:
            out[k - unit] = v
    return Poly._raw(p, f.n, out, f.ring)


def frobenius_pullback(f: Poly) -> Poly:
    """Pull back along relative Frobenius: y_i maps to x_i^p."""
    if f.ring != XP:
        raise RingMismatch("frobenius_pullback expects a polynomial over X'")
    p = f.p
    return Poly._raw(p, f.n, {k * p: c for k, c in f.terms.items()}, X)


def unfrobenius(f: Poly) -> Poly:
    """Inverse of :func:`frobenius_pullback` on polynomials in p-th powers."""
    if f.ring != X:
        raise RingMismatch("unfrobenius expects a polynomial over X")
    p, n = f.p, f.n
    out = {}
    for k, c in f.terms.items():
        exps = unpack(k, n)
        if any(e % p for e in exps):
            raise NotDescendable(f"monomial with exponents {exps} is not a p-th power")
        out[pack(e // p for e in exps)] = c
    return Poly._raw(p, n, out, XP)


def is_descendable(f: Poly) -> bool:
    p, n = f.p, f.n
    return all(e % p == 0 for k in f.terms for e in unpack(k, n))


# text format ------------------------------------------------------------------


def format_poly(f: Poly) -> str:
    if f.is_zero():
        return "0"
    prefix = VAR_PREFIX[f.ring]
    parts = []
    for exps, c in f.sorted_items():
        factors = [f"{prefix}{i}" if e == 1 else f"{prefix}{i}^{e}" for i, e in enumerate(exps) if e]
        if not factors:
            parts.append(str(c))
        elif c == 1:
            parts.append("*".join(factors))
        else:
            parts.append(f"{c}*" + "*".join(factors))
    return " + ".join(parts)


class _Scanner:
    def __init__(self, text: str, where: str):
        self.text = text
        self.pos = 0
        self.where = where

    def error(self, message: str, pos: int | None = None) -> ParseError:
        pos = self.pos if pos is None else pos
        before = self.text[:pos]
        line = before.count("\n") + 1
        col = pos - (before.rfind("\n") + 1) + 1
        return ParseError(message, line, col, self.where)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected an integer")
        return int(self.text[start:self.pos])


def parse_poly(text: str, p: int, n: int, ring: str = X, where: str = "") -> Poly:
    """Parse the textual format produced by :func:`format_poly`.

    Accepts signed integer coefficients, repeated factors and arbitrary
    whitespace. Errors carry the line and column of the offending token.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a polynomial string, got {type(text).__name__}", where=where)
    prefix = VAR_PREFIX[ring]
    sc = _Scanner(text, where)
    terms: dict[int, int] = {}
    sign = 1
    first = True
    while True:
        ch = sc.peek()
        if ch in "+-":
            sign = -1 if ch == "-" else 1
            sc.pos += 1
        elif not first:
            if ch == "":
                break
            raise sc.error(f"unexpected character {ch!r}")
        elif ch == "":
            raise sc.error("empty polynomial")
        coeff, exps = 1, [0] * n
        while True:
            ch = sc.peek()
            if ch.isdigit():
                coeff *= sc.integer()
            elif ch == prefix:
                start = sc.pos
                sc.pos += 1
                if sc.pos >= len(text) or not text[sc.pos].isdigit():
                    raise sc.error(f"expected variable index after {prefix!r}")
                idx = sc.integer()
                if idx >= n:
                    raise sc.error(f"variable {prefix}{idx} out of range for {n} variables", start)
                exp = 1
                if sc.peek() == "^":
                    sc.pos += 1
                    if not sc.peek().isdigit():
                        raise sc.error("expected exponent after '^'")
                    exp = sc.integer()
                exps[idx] += exp
                if exps[idx] > MAX_EXPONENT:
                    raise sc.error("exponent too large", start)
            elif ch == "":
                raise sc.error("expected a term")
            else:
                raise sc.error(f"unexpected character {ch!r}")
            if sc.peek() == "*":
                sc.pos += 1
                continue
            break
        key = pack(exps)
        terms[key] = terms.get(key, 0) + sign * coeff
        first = False
        sign = 1
        if sc.peek() == "":
            break
    return Poly(p, n, terms, ring)

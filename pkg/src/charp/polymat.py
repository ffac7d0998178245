"""Small dense matrices with polynomial entries (lists of rows)."""

from __future__ import annotations

from typing import Sequence

from .gfpoly import Poly, frobenius_pullback, unfrobenius

PolyMatrix = list  # list[list[Poly]]


def zeros(rows: int, cols: int, proto: Poly) -> PolyMatrix:
    z = proto.zero_like()
    return [[z for _ in range(cols)] for _ in range(rows)]


def identity(r: int, proto: Poly) -> PolyMatrix:
    one, z = proto.const_like(1), proto.zero_like()
    return [[one if i == j else z for j in range(r)] for i in range(r)]


def from_ints(data: Sequence[Sequence[int]], proto: Poly) -> PolyMatrix:
    return [[proto.const_like(int(v)) for v in row] for row in data]


def shape(m: PolyMatrix) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def add(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def sub(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def neg(a: PolyMatrix) -> PolyMatrix:
    return [[-x for x in row] for row in a]


def scale(a: PolyMatrix, f: Poly | int) -> PolyMatrix:
    return [[x * f for x in row] for row in a]


def mul(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    rows, inner = shape(a)
    cols = shape(b)[1]
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = a[i][0].zero_like()
            for k in range(inner):
                x, y = a[i][k], b[k][j]
                if x.terms and y.terms:
                    acc = acc + x * y
            row.append(acc)
        out.append(row)
    return out


def mul_vec(a: PolyMatrix, v: Sequence[Poly]) -> list[Poly]:
    out = []
    for row in a:
        acc = v[0].zero_like()
        for x, y in zip(row, v):
            if x.terms and y.terms:
                acc = acc + x * y
        out.append(acc)
    return out


def transpose(a: PolyMatrix) -> PolyMatrix:
    return [list(col) for col in zip(*a)]


def kron(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    ra, ca = shape(a)
    rb, cb = shape(b)
    return [[a[i // rb][j // cb] * b[i % rb][j % cb] for j in range(ca * cb)] for i in range(ra * rb)]


def derivative(a: PolyMatrix, i: int) -> PolyMatrix:
    return [[x.derivative(i) for x in row] for row in a]


def is_zero(a: PolyMatrix) -> bool:
    return all(x.is_zero() for row in a for x in row)


def equal(a: PolyMatrix, b: PolyMatrix) -> bool:
    return shape(a) == shape(b) and all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def columns(a: PolyMatrix) -> list[list[Poly]]:
    return [list(c) for c in zip(*a)]


def from_columns(cols: Sequence[Sequence[Poly]]) -> PolyMatrix:
    return [list(r) for r in zip(*cols)]


def map_entries(a: PolyMatrix, fn) -> PolyMatrix:
    return [[fn(x) for x in row] for row in a]


def pullback(a: PolyMatrix) -> PolyMatrix:
    return map_entries(a, frobenius_pullback)


def descend(a: PolyMatrix) -> PolyMatrix:
    return map_entries(a, unfrobenius)


def max_degree(a: PolyMatrix) -> int:
    return max((x.degree() for row in a for x in row), default=-1)


def constant_part(a: PolyMatrix) -> list[list[int]]:
    return [[x.constant_term() for x in row] for row in a]


def matrix_power_products_vanish(mats: Sequence[PolyMatrix], length: int) -> bool:
    """True when every product of ``length`` factors drawn from ``mats`` is zero.

    The matrices are assumed to commute, so only multisets matter.
    """
    from itertools import combinations_with_replacement

    if not mats:
        return True
    for combo in combinations_with_replacement(range(len(mats)), length):
        prod = mats[combo[0]]
        for k in combo[1:]:
            prod = mul(prod, mats[k])
            if is_zero(prod):
                break
        if not is_zero(prod):
            return False
    return True


def _pick_pivot(m: PolyMatrix, k: int) -> int | None:
    best, best_cost = None, None
    for i in range(k, len(m)):
        x = m[i][k]
        if x.is_zero():
            continue
        cost = (0 if x.is_constant() else 1, len(x.terms))
        if best is None or cost < best_cost:
            best, best_cost = i, cost
    return best


def determinant(a: PolyMatrix) -> Poly:
    """Fraction-free (Bareiss) determinant."""
    r = len(a)
    m = [list(row) for row in a]
    sign = 1
    prev = m[0][0].const_like(1)
    for k in range(r):
        piv = _pick_pivot(m, k)
        if piv is None:
            return m[0][0].zero_like()
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, r):
            for j in range(k + 1, r):
                num = m[k][k] * m[i][j] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev)
            m[i][k] = m[i][k].zero_like()
        prev = m[k][k]
    return m[r - 1][r - 1] if sign > 0 else -m[r - 1][r - 1]


def solve(g: PolyMatrix, rhs: PolyMatrix) -> PolyMatrix:
    """Solve ``g @ x = rhs`` for a square ``g`` with unit determinant.

    Fraction-free Gauss-Jordan elimination on the augmented matrix leaves
    det(g) on the diagonal and det(g) * g^{-1} rhs on the right; the final
    division is exact. Raises ValueError when g is singular or its
    determinant does not divide the result.
    """
    r = len(g)
    extra = shape(rhs)[1]
    m = [list(g[i]) + list(rhs[i]) for i in range(r)]
    width = r + extra
    prev = g[0][0].const_like(1)
    for k in range(r):
        piv = _pick_pivot(m, k)
        if piv is None:
            raise ValueError("matrix is singular")
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
        pk = m[k][k]
        for i in range(r):
            if i == k:
                continue
            f = m[i][k]
            row_i, row_k = m[i], m[k]
            for j in range(k + 1, width):
                num = pk * row_i[j] - f * row_k[j] if f.terms else pk * row_i[j]
                row_i[j] = num.exact_div(prev)
            row_i[k] = f.zero_like()
            if i < k:
                row_i[i] = pk
        prev = pk
    d = m[r - 1][r - 1]
    return [[m[i][j].exact_div(d) for j in range(r, width)] for i in range(r)]

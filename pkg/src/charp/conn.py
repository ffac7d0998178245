"""Integrable connections on free modules over F_p[x_0..x_{n-1}].

The connection acts on column vectors by nabla_i = d_i + A_i. Everything
is computed exactly in terms of polynomial matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial
from typing import Sequence

import numpy as np

from . import polymat as pm
from ._kernels import rref_mod_p
from .errors import DescentBasisNotFound, NonzeroPCurvature, NotIntegrable, NotNilpotent, RingMismatch
from .gfpoly import X, Poly, key_degree, unit_key, unpack

Vector = list  # list[Poly]


class ConnectionModule:
    def __init__(self, matrices: Sequence[pm.PolyMatrix], check: bool = True):
        if not matrices:
            raise ValueError("need one matrix per variable")
        proto = matrices[0][0][0]
        self.p, self.n = proto.p, proto.n
        self.rank = len(matrices[0])
        if len(matrices) != self.n:
            raise ValueError(f"expected {self.n} matrices, got {len(matrices)}")
        for a in matrices:
            if pm.shape(a) != (self.rank, self.rank):
                raise ValueError("connection matrices must all be rank x rank")
            for row in a:
                for x in row:
                    if (x.p, x.n, x.ring) != (self.p, self.n, X):
                        raise RingMismatch("connection entries must live on X")
        self.matrices = [[list(row) for row in a] for a in matrices]
        if check:
            bad = self.curvature_defect()
            if bad is not None:
                raise NotIntegrable(f"curvature [nabla_{bad[0]}, nabla_{bad[1]}] is nonzero")

    @classmethod
    def trivial(cls, p: int, n: int, rank: int) -> "ConnectionModule":
        z = Poly.zero(p, n)
        return cls([pm.zeros(rank, rank, z) for _ in range(n)])

    @property
    def proto(self) -> Poly:
        return Poly.zero(self.p, self.n)

    def curvature_defect(self) -> tuple[int, int] | None:
        a = self.matrices
        for i in range(self.n):
            for j in range(i + 1, self.n):
                curv = pm.add(
                    pm.sub(pm.derivative(a[j], i), pm.derivative(a[i], j)),
                    pm.sub(pm.mul(a[i], a[j]), pm.mul(a[j], a[i])),
                )
                if not pm.is_zero(curv):
                    return i, j
        return None

    def nabla(self, i: int, v: Vector) -> Vector:
        av = pm.mul_vec(self.matrices[i], v)
        return [x.derivative(i) + y for x, y in zip(v, av)]

    def basis_vector(self, k: int) -> Vector:
        z, one = self.proto, Poly.one(self.p, self.n)
        return [one if j == k else z for j in range(self.rank)]

    def __repr__(self) -> str:
        return f"ConnectionModule(p={self.p}, n={self.n}, rank={self.rank})"


@dataclass
class PCurvature:
    """Matrices psi_i of the p-curvature in the module's basis."""

    matrices: list

    def is_zero(self) -> bool:
        return all(pm.is_zero(m) for m in self.matrices)


def p_curvature(module: ConnectionModule) -> PCurvature:
    """psi_i = nabla_i^p, computed column by column on the basis vectors."""
    mats = []
    for i in range(module.n):
        cols = []
        for k in range(module.rank):
            v = module.basis_vector(k)
            for _ in range(module.p):
                v = module.nabla(i, v)
            cols.append(v)
        mats.append(pm.from_columns(cols))
    return PCurvature(mats)


def nilpotence_level(psi: PCurvature | Sequence[pm.PolyMatrix], p: int) -> int:
    """Smallest l such that every (l+1)-fold product of the psi_i vanishes.

    Raises NotNilpotent when that needs l > p - 1.
    """
    mats = psi.matrices if isinstance(psi, PCurvature) else list(psi)
    for length in range(1, p + 1):
        if pm.matrix_power_products_vanish(mats, length):
            return length - 1
    raise NotNilpotent(f"p-curvature is not nilpotent of level < {p}")


def pcurvature_invariants(module: ConnectionModule, psi: PCurvature | None = None) -> dict:
    """The psi_i commute with each other and are horizontal: d_i psi_j + [A_i, psi_j] = 0."""
    psi = p_curvature(module) if psi is None else psi
    mats = psi.matrices
    commuting = all(
        pm.equal(pm.mul(a, b), pm.mul(b, a)) for k, a in enumerate(mats) for b in mats[k + 1:]
    )
    horizontal = all(
        pm.is_zero(pm.add(pm.derivative(ps, i), pm.sub(pm.mul(a, ps), pm.mul(ps, a))))
        for i, a in enumerate(module.matrices)
        for ps in mats
    )
    return {"commuting": commuting, "horizontal": horizontal}


def tensor(m1: ConnectionModule, m2: ConnectionModule) -> ConnectionModule:
    """A = A1 (x) I + I (x) A2 on the Kronecker basis e_a (x) f_b."""
    _same_base(m1, m2)
    i1 = pm.identity(m1.rank, m1.proto)
    i2 = pm.identity(m2.rank, m2.proto)
    return ConnectionModule(
        [pm.add(pm.kron(a1, i2), pm.kron(i1, a2)) for a1, a2 in zip(m1.matrices, m2.matrices)],
        check=False,
    )


def hom(m1: ConnectionModule, m2: ConnectionModule) -> ConnectionModule:
    """Hom(M1, M2) on row-major flattened r2 x r1 matrices: h -> A2 h - h A1."""
    _same_base(m1, m2)
    i1 = pm.identity(m1.rank, m1.proto)
    i2 = pm.identity(m2.rank, m2.proto)
    return ConnectionModule(
        [pm.sub(pm.kron(a2, i1), pm.kron(i2, pm.transpose(a1))) for a1, a2 in zip(m1.matrices, m2.matrices)],
        check=False,
    )


def tensor_pcurvature_formula(psi1: PCurvature, psi2: PCurvature) -> PCurvature:
    r1, r2 = len(psi1.matrices[0]), len(psi2.matrices[0])
    proto = psi1.matrices[0][0][0]
    i1, i2 = pm.identity(r1, proto), pm.identity(r2, proto)
    return PCurvature([pm.add(pm.kron(a, i2), pm.kron(i1, b)) for a, b in zip(psi1.matrices, psi2.matrices)])


def hom_pcurvature_formula(psi1: PCurvature, psi2: PCurvature) -> PCurvature:
    r1, r2 = len(psi1.matrices[0]), len(psi2.matrices[0])
    proto = psi1.matrices[0][0][0]
    i1, i2 = pm.identity(r1, proto), pm.identity(r2, proto)
    return PCurvature(
        [pm.sub(pm.kron(b, i1), pm.kron(i2, pm.transpose(a))) for a, b in zip(psi1.matrices, psi2.matrices)]
    )


def _same_base(m1: ConnectionModule, m2: ConnectionModule) -> None:
    if (m1.p, m1.n) != (m2.p, m2.n):
        raise RingMismatch("modules over different bases")


def gauge(module: ConnectionModule, g: pm.PolyMatrix) -> ConnectionModule:
    """Connection in the basis given by the columns of ``g``: g^-1 (A g + dg)."""
    mats = []
    for i, a in enumerate(module.matrices):
        mats.append(pm.solve(g, pm.add(pm.mul(a, g), pm.derivative(g, i))))
    return ConnectionModule(mats, check=False)


def is_horizontal_isomorphism(src: ConnectionModule, dst: ConnectionModule, g: pm.PolyMatrix) -> bool:
    """``g`` maps src coordinates to dst coordinates, is horizontal and has unit determinant."""
    for i in range(src.n):
        lhs = pm.add(pm.derivative(g, i), pm.mul(dst.matrices[i], g))
        if not pm.equal(lhs, pm.mul(g, src.matrices[i])):
            return False
    det = pm.determinant(g)
    return det.is_constant() and det.constant_term() != 0


# Cartier descent ---------------------------------------------------------------


def horizontal_projector(module: ConnectionModule, v: Vector) -> Vector:
    """Project onto horizontal sections.

    Applies, for each variable, v -> sum_{k<p} (-1)^k x_i^k / k! nabla_i^k v.
    On a module with vanishing p-curvature the result is horizontal and
    the map fixes horizontal sections.
    """
    p, n = module.p, module.n
    for i in range(n):
        acc = [x.zero_like() for x in v]
        w = v
        for k in range(p):
            c = pow(factorial(k), p - 2, p) * (-1) ** k
            key = unit_key(i) * k
            acc = [a + b.mul_monomial(key, c) for a, b in zip(acc, w)]
            if k < p - 1:
                w = module.nabla(i, w)
        v = acc
    return v


def is_horizontal(module: ConnectionModule, v: Vector) -> bool:
    return all(all(x.is_zero() for x in module.nabla(i, v)) for i in range(module.n))


@dataclass
class DescentBasis:
    """Columns are horizontal sections forming a basis; ``det`` is a nonzero constant."""

    matrix: list
    det: int
    method: str


def _unit_det(cols: Sequence[Vector]) -> int | None:
    det = pm.determinant(pm.from_columns(cols))
    if det.is_constant() and det.constant_term():
        return det.constant_term()
    return None


def cartier_descent(module: ConnectionModule, psi: PCurvature | None = None) -> DescentBasis:
    """Basis of horizontal sections for a connection with zero p-curvature.

    Tries the projections of e_1..e_r first. Otherwise projects every
    x^J e_k (J < p), row-reduces the resulting sections over F_p so that
    high-degree coordinates are eliminated first, and picks low-degree
    sections whose values at the origin are independent.
    """
    if psi is None:
        psi = p_curvature(module)
    if not psi.is_zero():
        raise NonzeroPCurvature("cartier_descent needs vanishing p-curvature")
    r, p, n = module.rank, module.p, module.n
    first = [horizontal_projector(module, module.basis_vector(k)) for k in range(r)]
    det = _unit_det(first)
    if det is not None:
        return DescentBasis(pm.from_columns(first), det, "projected-basis")

    gens = list(first)
    for exps in sorted(product(range(p), repeat=n), key=lambda e: (sum(e), e)):
        if not any(exps):
            continue
        key = sum(unit_key(i) * e for i, e in enumerate(exps))
        for k in range(r):
            v = [x.mul_monomial(key) for x in module.basis_vector(k)]
            gens.append(horizontal_projector(module, v))
    cols = _low_degree_sections(gens, p, n)
    chosen: list[Vector] = []
    origin = np.zeros((0, r), dtype=np.int64)
    for v in cols:
        val = np.array([[x.constant_term() for x in v]], dtype=np.int64)
        trial = np.concatenate([origin, val])
        if rref_mod_p(trial, p)[1].size == trial.shape[0]:
            chosen.append(v)
            origin = trial
            if len(chosen) == r:
                break
    if len(chosen) == r:
        det = _unit_det(chosen)
        if det is not None:
            return DescentBasis(pm.from_columns(chosen), det, "reduced-generators")
    raise DescentBasisNotFound("no basis of horizontal sections with constant determinant found")


def _low_degree_sections(gens: Sequence[Vector], p: int, n: int) -> list[Vector]:
    coords = sorted(
        {(k, key) for v in gens for k, x in enumerate(v) for key in x.terms},
        key=lambda c: (key_degree(c[1], n), unpack(c[1], n), c[0]),
        reverse=True,
    )
    index = {c: j for j, c in enumerate(coords)}
    mat = np.zeros((len(gens), len(coords)), dtype=np.int64)
    for i, v in enumerate(gens):
        for k, x in enumerate(v):
            for key, c in x.terms.items():
                mat[i, index[(k, key)]] = c
    red, pivots = rref_mod_p(mat, p)
    proto = gens[0][0]
    out = []
    for row in range(pivots.size - 1, -1, -1):
        terms: list[dict[int, int]] = [{} for _ in gens[0]]
        for j in np.nonzero(red[row])[0]:
            k, key = coords[j]
            terms[k][key] = int(red[row, j])
        out.append([Poly(p, n, t, proto.ring) for t in terms])
    return out

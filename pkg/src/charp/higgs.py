"""Higgs modules over the Frobenius twist X'."""

from __future__ import annotations

from typing import Sequence

from . import polymat as pm
from .errors import NotCommuting, RingMismatch
from .gfpoly import XP, Poly


class HiggsModule:
    """Free module of rank r over F_p[y] with commuting endomorphisms theta_j."""

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
                raise ValueError("Higgs matrices must all be rank x rank")
            for row in a:
                for x in row:
                    if (x.p, x.n, x.ring) != (self.p, self.n, XP):
                        raise RingMismatch("Higgs field entries must live on X'")
        self.matrices = [[list(row) for row in a] for a in matrices]
        if check:
            for i in range(self.n):
                for j in range(i + 1, self.n):
                    a, b = self.matrices[i], self.matrices[j]
                    if not pm.equal(pm.mul(a, b), pm.mul(b, a)):
                        raise NotCommuting(f"theta_{i} and theta_{j} do not commute")

    @classmethod
    def zero(cls, p: int, n: int, rank: int) -> "HiggsModule":
        z = Poly.zero(p, n, XP)
        return cls([pm.zeros(rank, rank, z) for _ in range(n)])

    @property
    def proto(self) -> Poly:
        return Poly.zero(self.p, self.n, XP)

    def __repr__(self) -> str:
        return f"HiggsModule(p={self.p}, n={self.n}, rank={self.rank})"


def convolve(h1: HiggsModule, h2: HiggsModule) -> HiggsModule:
    """Tensor product of Higgs modules: theta = theta1 (x) I + I (x) theta2."""
    if (h1.p, h1.n) != (h2.p, h2.n):
        raise RingMismatch("Higgs modules over different bases")
    i1 = pm.identity(h1.rank, h1.proto)
    i2 = pm.identity(h2.rank, h2.proto)
    return HiggsModule(
        [pm.add(pm.kron(a, i2), pm.kron(i1, b)) for a, b in zip(h1.matrices, h2.matrices)], check=False
    )


def iota_twist(h: HiggsModule) -> HiggsModule:
    """Pull back along the inversion of the cotangent bundle: theta -> -theta."""
    return HiggsModule([pm.neg(a) for a in h.matrices], check=False)


def frobenius_pullback_higgs(h: HiggsModule) -> list:
    """F*(theta_j) as matrices over X."""
    return [pm.pullback(a) for a in h.matrices]


def koszul_complex(h: HiggsModule, truncation: int, mode: str = "quotient"):
    """Truncated Higgs complex e (x) w -> sum_j theta_j e (x) dy_j ^ w."""
    from .cohom import higgs_complex

    return higgs_complex(h).slice(truncation, mode=mode)


def is_higgs_isomorphism(src: HiggsModule, dst: HiggsModule, g: pm.PolyMatrix) -> bool:
    """``g`` maps src coordinates to dst ones, intertwines the fields and has unit determinant."""
    for a, b in zip(src.matrices, dst.matrices):
        if not pm.equal(pm.mul(b, g), pm.mul(g, a)):
            return False
    det = pm.determinant(g)
    return det.is_constant() and det.constant_term() != 0


def swap_matrix(r1: int, r2: int, proto: Poly) -> pm.PolyMatrix:
    """Permutation taking e_a (x) f_b to f_b (x) e_a."""
    size = r1 * r2
    m = pm.zeros(size, size, proto)
    one = proto.const_like(1)
    for a in range(r1):
        for b in range(r2):
            m[b * r1 + a][a * r2 + b] = one
    return m

"""Local Cartier transform attached to a Frobenius lift.

A lift x_i' -> x_i^p + p*g_i gives closed forms
zeta_j = x_j^(p-1) dx_j + dg_j splitting the inverse Cartier operator.
With c_ij the dx_i coefficient of zeta_j, the inverse transform of a
Higgs module (E', theta) is F*E' with A_i = CONNECTION_SIGN * sum_j c_ij F*(theta_j),
and its p-curvature is then F*(-alpha*(theta)).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

from . import polymat as pm
from .conn import (
    ConnectionModule,
    DescentBasis,
    PCurvature,
    cartier_descent,
    nilpotence_level,
    p_curvature,
)
from .errors import InvalidLift, UntwistFailed
from .forms import DiffForm, exterior_derivative
from .gfpoly import X, XP, Poly, frobenius_pullback
from .higgs import HiggsModule, is_higgs_isomorphism

# Sign pinned by requiring psi = F*(-theta) for the inverse transform.
CONNECTION_SIGN = 1


class FrobeniusLift:
    """Lift of Frobenius x_i' -> x_i^p + p*g_i, recorded through the g_i."""

    def __init__(self, g: Sequence[Poly]):
        g = tuple(g)
        if not g:
            raise InvalidLift("lift needs one polynomial per variable")
        p, n = g[0].p, g[0].n
        if len(g) != n:
            raise InvalidLift(f"lift has {len(g)} polynomials for {n} variables")
        for f in g:
            if not isinstance(f, Poly) or (f.p, f.n, f.ring) != (p, n, X):
                raise InvalidLift("lift polynomials must live on X")
        self.g = g
        self.p, self.n = p, n

    @classmethod
    def standard(cls, p: int, n: int) -> "FrobeniusLift":
        return cls([Poly.zero(p, n) for _ in range(n)])


@dataclass
class ZetaMatrix:
    """Images zeta_j of dy_j together with their coefficients c[i][j]."""

    forms: list
    coeffs: list

    @property
    def n(self) -> int:
        return len(self.forms)


def zeta_from_lift(lift: FrobeniusLift) -> ZetaMatrix:
    p, n = lift.p, lift.n
    forms = []
    for j in range(n):
        coeffs = [lift.g[j].derivative(i) for i in range(n)]
        coeffs[j] = coeffs[j] + Poly.monomial([p - 1 if k == j else 0 for k in range(n)], p)
        forms.append(DiffForm.one_form(coeffs))
    c = [[forms[j].coeff((i,)) for j in range(n)] for i in range(n)]
    return ZetaMatrix(forms, c)


@dataclass
class AlphaZeta:
    """alpha*(xi_i) = xi_i - sum_j c'_ij xi_j^p, with c' = c relabelled onto X'."""

    coeffs_prime: list


def alpha_zeta(zeta: ZetaMatrix) -> AlphaZeta:
    return AlphaZeta([[c.with_ring(XP) for c in row] for row in zeta.coeffs])


def alpha_zeta_action(alpha: AlphaZeta, thetas: Sequence[pm.PolyMatrix]) -> list:
    """Substitute commuting matrices for the xi_j in alpha*(xi_i)."""
    n = len(thetas)
    p = thetas[0][0][0].p
    powers = [_matrix_power(t, p) for t in thetas]
    out = []
    for i in range(n):
        m = [list(row) for row in thetas[i]]
        for j in range(n):
            m = pm.sub(m, pm.scale(powers[j], alpha.coeffs_prime[i][j]))
        out.append(m)
    return out


def _matrix_power(m: pm.PolyMatrix, e: int) -> pm.PolyMatrix:
    out = pm.identity(len(m), m[0][0])
    for _ in range(e):
        out = pm.mul(out, m)
        if pm.is_zero(out):
            break
    return out


def twisted_pullback(h: HiggsModule, lift: FrobeniusLift) -> ConnectionModule:
    """F*E' with A_i = CONNECTION_SIGN * sum_j c_ij F*(theta_j); no nilpotence needed."""
    zeta = zeta_from_lift(lift)
    pulled = [pm.pullback(t) for t in h.matrices]
    mats = []
    for i in range(h.n):
        a = pm.zeros(h.rank, h.rank, Poly.zero(h.p, h.n))
        for j in range(h.n):
            a = pm.add(a, pm.scale(pulled[j], zeta.coeffs[i][j] * CONNECTION_SIGN))
        mats.append(a)
    return ConnectionModule(mats, check=False)


def inverse_cartier_transform(h: HiggsModule, lift: FrobeniusLift) -> ConnectionModule:
    nilpotence_level(h.matrices, h.p)
    return twisted_pullback(h, lift)


def untwist(module: ConnectionModule, psi: PCurvature, lift: FrobeniusLift) -> ConnectionModule:
    """Remove the twist: A0_i = A_i + CONNECTION_SIGN * sum_j c_ij psi_j."""
    zeta = zeta_from_lift(lift)
    mats = []
    for i in range(module.n):
        a = module.matrices[i]
        for j in range(module.n):
            a = pm.add(a, pm.scale(psi.matrices[j], zeta.coeffs[i][j] * CONNECTION_SIGN))
        mats.append(a)
    return ConnectionModule(mats, check=False)


@dataclass
class CartierResult:
    higgs: HiggsModule
    psi: PCurvature
    level: int
    untwisted: ConnectionModule
    basis: DescentBasis
    psi_in_basis: list


def cartier_transform(module: ConnectionModule, lift: FrobeniusLift) -> HiggsModule:
    return cartier_transform_details(module, lift).higgs


def cartier_transform_details(module: ConnectionModule, lift: FrobeniusLift) -> CartierResult:
    if (lift.p, lift.n) != (module.p, module.n):
        raise InvalidLift("lift and module live over different bases")
    psi = p_curvature(module)
    level = nilpotence_level(psi, module.p)
    flat = untwist(module, psi, lift)
    flat_psi = p_curvature(flat)
    if not flat_psi.is_zero():
        raise UntwistFailed("untwisted connection still has nonzero p-curvature")
    basis = cartier_descent(flat, flat_psi)
    b = basis.matrix
    in_basis = [pm.solve(b, pm.mul(m, b)) for m in psi.matrices]
    thetas = [pm.neg(pm.descend(m)) for m in in_basis]
    higgs = HiggsModule(thetas, check=False)
    return CartierResult(higgs, psi, level, flat, basis, in_basis)


def exp_nilpotent(m: pm.PolyMatrix, p: int) -> pm.PolyMatrix:
    """sum_{k<p} m^k / k! for a matrix with m^p = 0."""
    out = pm.identity(len(m), m[0][0])
    power = out
    for k in range(1, p):
        power = pm.mul(power, m)
        if pm.is_zero(power):
            break
        out = pm.add(out, pm.scale(power, pow(factorial(k), p - 2, p)))
    return out


# certificates -------------------------------------------------------------------


def round_trip_connection(module: ConnectionModule, lift: FrobeniusLift) -> dict:
    """inverse(forward(M)) is isomorphic to M through the descent basis."""
    from .conn import is_horizontal_isomorphism

    res = cartier_transform_details(module, lift)
    back = inverse_cartier_transform(res.higgs, lift)
    iso = is_horizontal_isomorphism(back, module, res.basis.matrix)
    psi_ok = all(pm.equal(ps, pm.neg(pm.pullback(t))) for ps, t in zip(res.psi_in_basis, res.higgs.matrices))
    return {
        "isomorphism": iso,
        "det": res.basis.det,
        "psi_is_pullback_of_minus_theta": psi_ok,
        "level": res.level,
        "result": res,
    }


def round_trip_higgs(h: HiggsModule, lift: FrobeniusLift) -> dict:
    """forward(inverse(H)) is isomorphic to H through the descended descent basis."""
    module = inverse_cartier_transform(h, lift)
    res = cartier_transform_details(module, lift)
    iso_matrix = pm.descend(res.basis.matrix)
    return {
        "isomorphism": is_higgs_isomorphism(res.higgs, h, iso_matrix),
        "det": res.basis.det,
        "result": res,
    }


def lift_change_isomorphism(module: ConnectionModule, lift1: FrobeniusLift, lift2: FrobeniusLift) -> dict:
    """Explicit isomorphism between the transforms for two different lifts.

    With h_j = g2_j - g1_j and N = sum_j h_j F*(theta1_j), the matrix
    B2^-1 B1 exp(N) is the pullback of a Higgs isomorphism.
    """
    r1 = cartier_transform_details(module, lift1)
    r2 = cartier_transform_details(module, lift2)
    p = module.p
    pulled = [pm.pullback(t) for t in r1.higgs.matrices]
    nmat = pm.zeros(module.rank, module.rank, module.proto)
    for j in range(module.n):
        nmat = pm.add(nmat, pm.scale(pulled[j], lift2.g[j] - lift1.g[j]))
    rel = pm.solve(r2.basis.matrix, pm.mul(r1.basis.matrix, exp_nilpotent(nmat, p)))
    iso = pm.descend(rel)
    return {
        "isomorphism": is_higgs_isomorphism(r1.higgs, r2.higgs, iso),
        "matrix": iso,
        "first": r1.higgs,
        "second": r2.higgs,
    }


def tensor_compatibility(m1: ConnectionModule, m2: ConnectionModule, lift: FrobeniusLift) -> dict:
    """C(M1 (x) M2) is isomorphic to C(M1) (x) C(M2); the isomorphism
    descends B12^-1 (B1 (x) B2)."""
    from .conn import tensor
    from .higgs import convolve

    r1 = cartier_transform_details(m1, lift)
    r2 = cartier_transform_details(m2, lift)
    r12 = cartier_transform_details(tensor(m1, m2), lift)
    rel = pm.solve(r12.basis.matrix, pm.kron(r1.basis.matrix, r2.basis.matrix))
    iso = pm.descend(rel)
    conv = convolve(r1.higgs, r2.higgs)
    return {
        "isomorphism": is_higgs_isomorphism(conv, r12.higgs, iso),
        "matrix": iso,
        "level_sum": r1.level + r2.level,
    }


# the splitting module, truncated ---------------------------------------------------


def _multi_indices(n: int, max_total: int) -> list[tuple[int, ...]]:
    from itertools import product

    idx = [e for e in product(range(max_total + 1), repeat=n) if sum(e) <= max_total]
    return sorted(idx, key=lambda e: (sum(e), e))


def b_zeta_check(lift: FrobeniusLift, truncation: int) -> dict:
    """p-curvature of the truncated divided-power side of the splitting module.

    On Gamma_{<=N} with basis w^[I], nabla_i w^[I] = -sum_j c_ij w^[I-e_j].
    Its p-curvature in direction i is the action of alpha*(xi_i) with xi
    acting by contraction; for N < p only the linear part survives.
    The dual symmetric side then carries multiplication by -alpha*(xi_i).
    """
    p, n = lift.p, lift.n
    if truncation >= p:
        raise ValueError("truncation must be below p")
    zeta = zeta_from_lift(lift)
    alpha = alpha_zeta(zeta)
    basis = _multi_indices(n, truncation)
    index = {e: k for k, e in enumerate(basis)}
    size = len(basis)
    zero = Poly.zero(p, n)

    def contraction(j: int, proto: Poly) -> pm.PolyMatrix:
        m = pm.zeros(size, size, proto)
        for e, k in index.items():
            if e[j] > 0:
                lower = tuple(v - (1 if t == j else 0) for t, v in enumerate(e))
                m[index[lower]][k] = proto.const_like(1)
        return m

    mats = []
    for i in range(n):
        a = pm.zeros(size, size, zero)
        for j in range(n):
            a = pm.sub(a, pm.scale(contraction(j, zero), zeta.coeffs[i][j]))
        mats.append(a)
    module = ConnectionModule(mats)
    psi = p_curvature(module)
    contr_prime = [contraction(j, Poly.zero(p, n, XP)) for j in range(n)]
    expected = alpha_zeta_action(alpha, contr_prime)
    gamma_ok = all(pm.equal(ps, pm.pullback(ex)) for ps, ex in zip(psi.matrices, expected))
    # dual side: the symmetric algebra with the contragredient connection
    dual = ConnectionModule([pm.neg(pm.transpose(a)) for a in mats])
    dual_psi = p_curvature(dual)
    mult_ok = all(
        pm.equal(ps, pm.neg(pm.pullback(pm.transpose(ex)))) for ps, ex in zip(dual_psi.matrices, expected)
    )
    return {
        "truncation": truncation,
        "rank": size,
        "gamma_side_equals_alpha": gamma_ok,
        "symmetric_side_equals_minus_alpha": mult_ok,
        "ok": gamma_ok and mult_ok,
    }

"""Seeded generators for random test instances."""

from __future__ import annotations

import random
from itertools import product

from . import polymat as pm
from .cartx import FrobeniusLift, twisted_pullback
from .conn import ConnectionModule
from .gfpoly import X, XP, Poly, frobenius_pullback, pack, unit_key
from .higgs import HiggsModule

# isolated singularities with their Milnor numbers
SINGULARITY_CORPUS = [
    ("x0^3", 7, 1, 2),
    ("x0^4", 11, 1, 3),
    ("x0^5", 11, 1, 4),
    ("x0^3 + x1^3", 7, 2, 4),
    ("x0^2 + x1^2", 5, 2, 1),
    ("x0^2*x1 + x1^4", 11, 2, 5),
]


def random_poly(rng: random.Random, p: int, n: int, degree: int, density: float = 0.5, ring: str = X) -> Poly:
    terms = {}
    for exps in product(range(degree + 1), repeat=n):
        if sum(exps) <= degree and rng.random() < density:
            terms[pack(exps)] = rng.randrange(p)
    return Poly(p, n, terms, ring)


def random_lift(rng: random.Random, p: int, n: int, degree: int = 2) -> FrobeniusLift:
    return FrobeniusLift([random_poly(rng, p, n, degree, 0.4) for _ in range(n)])


def _nilpotent_pair(rng: random.Random, p: int, r: int) -> list[list[list[int]]]:
    """J and J^2 for a random strictly upper triangular J; these commute."""
    j = [[rng.randrange(p) if b > a else 0 for b in range(r)] for a in range(r)]
    j2 = [[sum(j[a][k] * j[k][b] for k in range(r)) % p for b in range(r)] for a in range(r)]
    return [j, j2]


def _closed_one_form(rng: random.Random, p: int, n: int) -> list[Poly]:
    # dF plus sum_i F*(h_i) x_i^(p-1) dx_i, always closed
    f = random_poly(rng, p, n, 2, 0.5)
    coeffs = [f.derivative(i) for i in range(n)]
    for i in range(n):
        h = random_poly(rng, p, n, rng.choice([0, 1]), 0.6, XP)
        coeffs[i] = coeffs[i] + frobenius_pullback(h).mul_monomial(unit_key(i) * (p - 1))
    return coeffs


def random_unipotent(rng: random.Random, p: int, n: int, r: int, degree: int = 1) -> pm.PolyMatrix:
    one = Poly.one(p, n)
    g = pm.identity(r, one)
    for a in range(r):
        for b in range(a + 1, r):
            g[a][b] = random_poly(rng, p, n, degree, 0.5)
    return g


def _gauge_unipotent(module: ConnectionModule, g: pm.PolyMatrix) -> ConnectionModule:
    r = module.rank
    u = pm.sub(g, pm.identity(r, g[0][0]))
    inv = pm.identity(r, g[0][0])
    power = inv
    for k in range(1, r):
        power = pm.mul(power, pm.neg(u))
        inv = pm.add(inv, power)
    mats = [pm.mul(inv, pm.add(pm.mul(a, g), pm.derivative(g, i))) for i, a in enumerate(module.matrices)]
    return ConnectionModule(mats, check=False)


def random_nilpotent_higgs(rng: random.Random, p: int, n: int, r: int, degree: int = 1) -> HiggsModule:
    mats = []
    pair = _nilpotent_pair(rng, p, r)
    for _ in range(n):
        theta = pm.zeros(r, r, Poly.zero(p, n, XP))
        for nk in pair:
            h = random_poly(rng, p, n, degree, 0.6, XP)
            theta = pm.add(theta, pm.scale(pm.from_ints(nk, Poly.zero(p, n, XP)), h))
        mats.append(theta)
    return HiggsModule(mats)


def random_nilpotent_connection(rng: random.Random, p: int, n: int, r: int, lift: FrobeniusLift | None = None) -> ConnectionModule:
    """Nilpotent connection of level at most min(r-1, 2).

    Either sum_k omega_k N_k with closed forms omega_k and commuting
    nilpotent N_k, or an inverse transform of a nilpotent Higgs module;
    in both cases followed by a random unipotent gauge transformation.
    """
    zero = Poly.zero(p, n)
    if lift is not None and rng.random() < 0.5:
        base = twisted_pullback(random_nilpotent_higgs(rng, p, n, r), lift)
    else:
        mats = [pm.zeros(r, r, zero) for _ in range(n)]
        for nk in _nilpotent_pair(rng, p, r):
            omega = _closed_one_form(rng, p, n)
            const = pm.from_ints(nk, zero)
            mats = [pm.add(m, pm.scale(const, omega[i])) for i, m in enumerate(mats)]
        base = ConnectionModule(mats, check=False)
    return _gauge_unipotent(base, random_unipotent(rng, p, n, r))


FAMILIES = ("nilpotent-connection", "nilpotent-higgs", "singularity")


def gen_fixture(seed: int, family: str, prime: int = 5, num_vars: int = 1, rank: int = 2) -> dict:
    """A problem file (as a dict) drawn deterministically from ``seed``.

    The singularity family walks through the corpus, one entry per seed.
    """
    from .jsonio import lift_to_json, module_to_json

    if family == "singularity":
        f, p, n, _ = SINGULARITY_CORPUS[seed % len(SINGULARITY_CORPUS)]
        return {"task": "bk-check", "prime": p, "num_vars": n, "f": f, "seed": seed}
    if family not in FAMILIES:
        raise ValueError(f"unknown fixture family {family!r}; expected one of {', '.join(FAMILIES)}")
    rng = random.Random(seed)
    lift = random_lift(rng, prime, num_vars)
    if family == "nilpotent-connection":
        module = random_nilpotent_connection(rng, prime, num_vars, rank, lift)
        task = "compare"
    else:
        module = random_nilpotent_higgs(rng, prime, num_vars, rank)
        task = "inverse-cartier"
    return {
        "task": task,
        "prime": prime,
        "num_vars": num_vars,
        "module": module_to_json(module),
        "lift": lift_to_json(lift),
        "seed": seed,
    }

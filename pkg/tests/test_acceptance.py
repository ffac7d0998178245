"""Acceptance criteria, each timed against its budget.

Run with ``pytest tests/test_acceptance.py`` (one PASS/FAIL line per
criterion is printed in the terminal summary) or directly as a script.
"""

import random
import sys
import time

import numpy as np
import pytest

from charp import polymat as pm
from charp.cartx import (
    b_zeta_check,
    inverse_cartier_transform,
    round_trip_connection,
    round_trip_higgs,
    tensor_compatibility,
    zeta_from_lift,
)
from charp.cohom import bk_check, compare_dr_higgs
from charp.conn import (
    ConnectionModule,
    hom,
    hom_pcurvature_formula,
    nilpotence_level,
    p_curvature,
    tensor,
    tensor_pcurvature_formula,
)
from charp.dpalg import casimir_check, dp_table_check, involution_check, pairing_matrix
from charp._kernels import rank_mod_p
from charp.fixtures import (
    SINGULARITY_CORPUS,
    random_lift,
    random_nilpotent_connection,
    random_nilpotent_higgs,
    random_poly,
)
from charp.forms import DiffForm, cartier_operator, exterior_derivative
from charp.gfpoly import XP, Poly, parse_poly
from charp.weyl import Derivation, central_witness, centrality_certificate, expected_witness, jacobson_identity_check

pytestmark = pytest.mark.acceptance

RESULTS: dict[str, str] = {}


def record(key, title, budget, fn):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < budget
    RESULTS[key] = f"{'PASS' if passed else 'FAIL'}  {key} {title}: {detail} ({elapsed:.1f}s, budget {budget:.0f}s)"
    assert ok, detail
    assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


# criterion bodies ----------------------------------------------------------------


def centrality():
    rng = random.Random(101)
    bad = 0
    for _ in range(100):
        p, n = rng.choice([3, 5, 7]), rng.randint(1, 2)
        der = Derivation([random_poly(rng, p, n, rng.randint(0, 3)) for _ in range(n)])
        witness = central_witness(der)
        if not (all(centrality_certificate(witness).values()) and witness == expected_witness(der)):
            bad += 1
    return bad == 0, f"{100 - bad}/100 witnesses central"


def jacobson():
    rng = random.Random(202)
    bad = 0
    for _ in range(100):
        p = rng.choice([3, 5, 7])
        a = random_poly(rng, p, 1, rng.randint(0, 6))
        cert = jacobson_identity_check(a)
        psi = p_curvature(ConnectionModule([[[a]]])).matrices[0][0][0]
        if not (cert["equal"] and psi == cert["p_curvature"]):
            bad += 1
    return bad == 0, f"{100 - bad}/100 identities exact"


def cartier_calculus():
    rng = random.Random(303)
    bad = 0
    for _ in range(50):
        p, n = rng.choice([3, 5, 7]), rng.randint(1, 3)
        zeta = zeta_from_lift(random_lift(rng, p, n, 4))
        for j, form in enumerate(zeta.forms):
            dy = DiffForm.one_form([Poly.one(p, n, XP) if i == j else Poly.zero(p, n, XP) for i in range(n)])
            bad += cartier_operator(form) != dy
        f = random_poly(rng, p, n, 3 * p, 0.3)
        bad += not cartier_operator(exterior_derivative(DiffForm.function(f))).is_zero()
    for p in (3, 5, 7):
        base = DiffForm.one_form([parse_poly(f"x0^{p - 1}", p, 1)])
        bad += cartier_operator(base) != DiffForm.one_form([Poly.one(p, 1, XP)])
    return bad == 0, "C(zeta) = id on 50 lifts, exact forms killed, C(x^(p-1)dx) = dy" if not bad else f"{bad} mismatches"


def _instance(seed):
    rng = random.Random(seed)
    p, n, r = rng.choice([5, 7]), rng.randint(1, 2), rng.randint(1, 3)
    lift = random_lift(rng, p, n)
    return rng, p, n, r, lift


def round_trips():
    bad, descended, levels = 0, 0, set()
    for k in range(50):
        rng, p, n, r, lift = _instance(4000 + k)
        module = random_nilpotent_connection(rng, p, n, r, lift)
        cert = round_trip_connection(module, lift)
        levels.add(cert["level"])
        ok = cert["isomorphism"] and cert["psi_is_pullback_of_minus_theta"] and cert["det"] % p
        # descent constructivity: these entries must pass unfrobenius
        for m in cert["result"].psi_in_basis:
            pm.descend(m)
        descended += 1
        h = random_nilpotent_higgs(rng, p, n, r)
        psi = p_curvature(inverse_cartier_transform(h, lift))
        ok = ok and all(pm.equal(a, pm.neg(pm.pullback(t))) for a, t in zip(psi.matrices, h.matrices))
        back = round_trip_higgs(h, lift)
        ok = ok and back["isomorphism"] and back["det"] % p
        bad += not ok
    return bad == 0 and max(levels) <= 2, f"{50 - bad}/50 both ways, levels {sorted(levels)}, {descended} descents"


def tensor_compat():
    bad, tried = 0, 0
    k = 0
    while tried < 20:
        rng, p, n, _, lift = _instance(5000 + k)
        k += 1
        m1 = random_nilpotent_connection(rng, p, n, rng.randint(1, 2), lift)
        m2 = random_nilpotent_connection(rng, p, n, rng.randint(1, 2), lift)
        if nilpotence_level(p_curvature(m1), p) + nilpotence_level(p_curvature(m2), p) >= p:
            continue
        tried += 1
        bad += not tensor_compatibility(m1, m2, lift)["isomorphism"]
    return bad == 0, f"{tried - bad}/{tried} pairs isomorphic"


def b_zeta():
    rng = random.Random(606)
    bad, checks = 0, 0
    for _ in range(10):
        p, n = rng.choice([5, 7]), rng.randint(1, 2)
        lift = random_lift(rng, p, n, 2)
        for truncation in range(4):
            checks += 1
            bad += not b_zeta_check(lift, truncation)["ok"]
    return bad == 0, f"{checks - bad}/{checks} (lift, N) pairs certified"


def comparison():
    bad, unstable = 0, 0
    for k in range(20):
        rng, p, n, r, lift = _instance(7000 + k)
        module = random_nilpotent_connection(rng, p, n, r, lift)
        res = compare_dr_higgs(module, lift, 3)  # x-degree below 4p
        bad += not res["agree"]
        unstable += not res["stabilized"]
    return bad == 0 and unstable == 0, f"{20 - bad}/20 agree, {20 - unstable}/20 stabilized"


def barannikov_kontsevich():
    bad = []
    for text, p, n, mu in SINGULARITY_CORPUS[:5]:
        res = bk_check(parse_poly(text, p, n))
        orders = res["milnor"]
        if not (res["equal"] and res["matches_milnor"] and orders["lex"] == orders["revlex"] == mu):
            bad.append(text)
    return not bad, "5/5 corpus entries match Milnor numbers" if not bad else f"failed: {bad}"


def divided_powers():
    ok = True
    for n in (1, 2):
        for p in (5, 7):
            ok &= all(dp_table_check(n, p, 4).values())
            ok &= all(rank_mod_p(pairing_matrix(n, d, p), p) == pairing_matrix(n, d, p).shape[0] for d in range(5))
    rng = random.Random(909)
    good = 0
    for _ in range(20):
        p, n, r = rng.choice([5, 7]), rng.randint(1, 2), rng.randint(1, 3)
        j = np.array([[rng.randrange(p) if b > a else 0 for b in range(r)] for a in range(r)], dtype=np.int64)
        thetas = [(rng.randrange(p) * j + rng.randrange(p) * (j @ j)) % p for _ in range(n)]
        inv = involution_check(thetas, 2, p)
        good += casimir_check(thetas, 2, p)["ok"] and inv["isomorphism"] and inv["first_field_is_minus_theta"]
    return ok and good == 20, f"tables exact, pairings perfect, {good}/20 Casimir and involution"


def pcurvature_rules():
    bad = 0
    for k in range(20):
        rng, p, n, r, lift = _instance(10000 + k)
        m1 = random_nilpotent_connection(rng, p, n, r, lift)
        m2 = random_nilpotent_connection(rng, p, n, rng.randint(1, 3))
        psi1, psi2 = p_curvature(m1), p_curvature(m2)
        for built, formula in ((tensor, tensor_pcurvature_formula), (hom, hom_pcurvature_formula)):
            direct = p_curvature(built(m1, m2)).matrices
            bad += not all(pm.equal(a, b) for a, b in zip(direct, formula(psi1, psi2).matrices))
    return bad == 0, f"{40 - bad}/40 formulas exact"


CRITERIA = [
    ("C1", "centrality of D^p - D^(p)", 30, centrality),
    ("C2", "rank-one Jacobson identity", 30, jacobson),
    ("C3", "Cartier calculus", 10, cartier_calculus),
    ("C4", "transform round trips", 300, round_trips),
    ("C5", "tensor compatibility", 180, tensor_compat),
    ("C6", "splitting module p-curvature", 60, b_zeta),
    ("C7", "de Rham / Higgs comparison", 600, comparison),
    ("C8", "Barannikov-Kontsevich mod p", 300, barannikov_kontsevich),
    ("C9", "divided-power suite", 120, divided_powers),
    ("C10", "tensor and hom p-curvature", 60, pcurvature_rules),
]


@pytest.mark.parametrize("key,title,budget,fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(key, title, budget, fn):
    record(key, title, budget, fn)


def test_descent_constructivity():
    # C11 is checked inside the C4 loop; report it on its own line
    if "C4" not in RESULTS:
        record("C4", "transform round trips", 300, round_trips)
    ok = RESULTS["C4"].startswith("PASS")
    RESULTS["C11"] = f"{'PASS' if ok else 'FAIL'}  C11 descent constructivity: F-Higgs entries descend (within C4)"
    assert ok


if __name__ == "__main__":
    failures = 0
    for key, title, budget, fn in CRITERIA:
        try:
            record(key, title, budget, fn)
        except AssertionError:
            failures += 1
        print(RESULTS[key], flush=True)
    ok = RESULTS["C4"].startswith("PASS")
    print(f"{'PASS' if ok else 'FAIL'}  C11 descent constructivity: F-Higgs entries descend (within C4)")
    sys.exit(1 if failures or not ok else 0)

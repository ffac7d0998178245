"""Command line harness: read a JSON problem file, run one task, emit a JSON report.

Exit codes: 0 pass, 1 fail, 2 not stabilized, 3 input error.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from typing import Callable

import numpy as np

from . import __version__
from . import polymat as pm
from .cartx import (
    FrobeniusLift,
    b_zeta_check,
    inverse_cartier_transform,
    round_trip_connection,
    round_trip_higgs,
    zeta_from_lift,
)
from .cohom import (
    FILTERED,
    QUOTIENT,
    PolyComplex,
    bk_check,
    build_slice,
    compare_dr_higgs,
    derham_complex_of,
    higgs_complex,
    koszul_of_differential,
    quotient_dims_series,
    stabilized_filtered_dims,
)
from .conn import ConnectionModule, nilpotence_level, p_curvature, pcurvature_invariants
from .dpalg import casimir_check, dp_table_check, involution_check
from .errors import CharpError, InputError, NotNilpotent, NotStabilized, PrimeTooSmall
from .fixtures import FAMILIES, gen_fixture, random_poly
from .forms import cartier_operator, inverse_cartier_class
from .gfpoly import X, XP, check_prime, format_poly, parse_poly
from .higgs import HiggsModule
from .jsonio import (
    ProblemSpec,
    dump_json,
    form_to_json,
    matrices_to_json,
    module_to_json,
    parse_form,
    parse_problem,
)
from .weyl import Derivation, central_witness, centrality_certificate, expected_witness, splitting_generator_check

EXIT_PASS, EXIT_FAIL, EXIT_NOT_STABILIZED, EXIT_INPUT = 0, 1, 2, 3
VERDICT_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "not-stabilized": EXIT_NOT_STABILIZED}


class Options:
    def __init__(self, seed: int = 0, max_degree: int | None = None, prime_threshold: int | None = None):
        self.seed = seed
        self.max_degree = max_degree
        self.prime_threshold = prime_threshold


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _need(spec: ProblemSpec, attr: str, task: str):
    value = getattr(spec, attr)
    if value is None:
        raise InputError(f"task {task!r} needs field {attr!r} in the problem file")
    return value


def _need_kind(spec: ProblemSpec, kind, task: str):
    module = _need(spec, "module", task)
    if not isinstance(module, kind):
        want = "connection" if kind is ConnectionModule else "higgs"
        raise InputError(f"task {task!r} needs a {want} module")
    return module


def _max_degree(spec: ProblemSpec, opts: Options) -> int:
    if opts.max_degree is not None:
        return opts.max_degree
    if spec.max_degree is not None:
        return spec.max_degree
    env = os.environ.get("CHARP_MAX_DEGREE")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"CHARP_MAX_DEGREE must be an integer, got {env!r}") from None
    return 4 * spec.prime


def _truncation(spec: ProblemSpec, opts: Options) -> int:
    """Quotient-slice truncation d: monomials of x-degree below (d+1)p."""
    if spec.truncation is not None:
        t = spec.truncation
    else:
        t = _max_degree(spec, opts) // spec.prime - 1
    if t < 0:
        raise InputError("truncation must be non-negative")
    return t


def _report(spec, task, verdict, certificates, truncation=None, dims=None, stabilized=True, seed=0) -> dict:
    return {
        "task": task,
        "prime": spec.prime,
        "num_vars": spec.num_vars,
        "truncation": truncation,
        "dims": dims if dims is not None else {},
        "stabilized": stabilized,
        "verdict": verdict,
        "certificates": certificates,
        "version": __version__,
        "seed": seed,
    }


def _lift(spec: ProblemSpec) -> FrobeniusLift:
    return spec.lift if spec.lift is not None else FrobeniusLift.standard(spec.prime, spec.num_vars)


# tasks -----------------------------------------------------------------------------


def task_p_curvature(spec: ProblemSpec, opts: Options) -> dict:
    module = _need_kind(spec, ConnectionModule, "p-curvature")
    psi = p_curvature(module)
    inv = pcurvature_invariants(module, psi)
    try:
        level = nilpotence_level(psi, spec.prime)
    except NotNilpotent:
        level = None
    certs = {"matrices": matrices_to_json(psi.matrices), "level": level, "nilpotent": level is not None, **inv}
    return _report(spec, "p-curvature", _verdict(inv["commuting"] and inv["horizontal"]), certs, seed=opts.seed)


def task_cartier(spec: ProblemSpec, opts: Options) -> dict:
    certs: dict = {}
    ok = True
    if "form" in spec.raw:
        form = parse_form(spec.raw["form"], spec.prime, spec.num_vars, X)
        certs["cartier_operator"] = form_to_json(cartier_operator(form))
    if spec.module is not None:
        module = _need_kind(spec, ConnectionModule, "cartier")
        try:
            rt = round_trip_connection(module, _lift(spec))
        except NotNilpotent as exc:
            certs["error"] = str(exc)
            return _report(spec, "cartier", "fail", certs, seed=opts.seed)
        res = rt["result"]
        certs.update(
            {
                "higgs": module_to_json(res.higgs),
                "level": rt["level"],
                "descent_method": res.basis.method,
                "descent_det": rt["det"],
                "round_trip_isomorphism": rt["isomorphism"],
                "psi_is_pullback_of_minus_theta": rt["psi_is_pullback_of_minus_theta"],
            }
        )
        ok = rt["isomorphism"] and rt["psi_is_pullback_of_minus_theta"]
    elif "form" not in spec.raw:
        raise InputError("task 'cartier' needs a connection module or a form")
    return _report(spec, "cartier", _verdict(ok), certs, seed=opts.seed)


def task_inverse_cartier(spec: ProblemSpec, opts: Options) -> dict:
    certs: dict = {}
    ok = True
    lift = _lift(spec)
    if "form" in spec.raw:
        form = parse_form(spec.raw["form"], spec.prime, spec.num_vars, XP)
        certs["inverse_cartier_class"] = form_to_json(inverse_cartier_class(form, zeta_from_lift(lift)))
    if spec.module is not None:
        h = _need_kind(spec, HiggsModule, "inverse-cartier")
        try:
            module = inverse_cartier_transform(h, lift)
            rt = round_trip_higgs(h, lift)
        except NotNilpotent as exc:
            certs["error"] = str(exc)
            return _report(spec, "inverse-cartier", "fail", certs, seed=opts.seed)
        psi = p_curvature(module)
        psi_ok = all(pm.equal(a, pm.neg(pm.pullback(t))) for a, t in zip(psi.matrices, h.matrices))
        certs.update(
            {
                "connection": module_to_json(module),
                "psi_is_pullback_of_minus_theta": psi_ok,
                "round_trip_isomorphism": rt["isomorphism"],
                "descent_det": rt["det"],
            }
        )
        ok = psi_ok and rt["isomorphism"]
    elif "form" not in spec.raw:
        raise InputError("task 'inverse-cartier' needs a higgs module or a form")
    return _report(spec, "inverse-cartier", _verdict(ok), certs, seed=opts.seed)


def _cohomology(spec: ProblemSpec, opts: Options, task: str, cx: PolyComplex) -> dict:
    mode = spec.raw.get("mode", QUOTIENT)
    if mode == QUOTIENT:
        t = _truncation(spec, opts)
        series = quotient_dims_series(cx, t)
        closed = build_slice(cx, t, QUOTIENT).composes_to_zero()
        dims = {q: series[q] for q in range(cx.n + 1)}
        certs = {"mode": mode, "d_squared_zero": closed}
        return _report(spec, task, _verdict(closed), certs, truncation=t, dims=dims, seed=opts.seed)
    if mode == FILTERED:
        top = _max_degree(spec, opts)
        look = spec.raw.get("lookahead", spec.prime)
        start = spec.truncation if spec.truncation is not None else 0
        dims, at = stabilized_filtered_dims(cx, start, top, look)
        closed = build_slice(cx, at, QUOTIENT).composes_to_zero()
        certs = {"mode": mode, "d_squared_zero": closed, "lookahead": look}
        return _report(spec, task, _verdict(closed), certs, truncation=at, dims={q: [v] for q, v in enumerate(dims)}, seed=opts.seed)
    raise InputError(f"mode must be {QUOTIENT!r} or {FILTERED!r}, got {mode!r}")


def task_derham(spec: ProblemSpec, opts: Options) -> dict:
    module = _need_kind(spec, ConnectionModule, "derham-cohomology")
    return _cohomology(spec, opts, "derham-cohomology", derham_complex_of(module))


def task_higgs_cohomology(spec: ProblemSpec, opts: Options) -> dict:
    if spec.module is None and spec.f is not None:
        cx = koszul_of_differential(spec.f)
    else:
        cx = higgs_complex(_need_kind(spec, HiggsModule, "higgs-cohomology"))
    return _cohomology(spec, opts, "higgs-cohomology", cx)


def task_compare(spec: ProblemSpec, opts: Options) -> dict:
    module = _need_kind(spec, ConnectionModule, "compare")
    t = _truncation(spec, opts)
    try:
        res = compare_dr_higgs(module, _lift(spec), t)
    except NotNilpotent as exc:
        return _report(spec, "compare", "fail", {"error": str(exc)}, truncation=t, seed=opts.seed)
    certs = {k: res[k] for k in ("level", "compared_degrees", "slicewise_equal", "diverging_above_range", "agree")}
    certs["higgs_dims"] = res["dims"]["higgs"]
    if not res["agree"]:
        verdict = "fail"
    else:
        verdict = "pass" if res["stabilized"] else "not-stabilized"
    return _report(spec, "compare", verdict, certs, truncation=t, dims=res["dims"]["de_rham"], stabilized=res["stabilized"], seed=opts.seed)


def task_bk_check(spec: ProblemSpec, opts: Options) -> dict:
    f = _need(spec, "f", "bk-check")
    top = _max_degree(spec, opts)
    threshold = opts.prime_threshold if opts.prime_threshold is not None else spec.prime_threshold
    below = False
    try:
        res = bk_check(f, top, threshold)
    except PrimeTooSmall:
        # small primes are recorded as data, not rejected
        below = True
        res = bk_check(f, top, 0)
    dr, hg = res["dims"]["twisted_de_rham"], res["dims"]["higgs"]
    dims = {q: [dr["dims"][q], hg["dims"][q]] for q in range(f.n + 1)}
    certs = {
        "f": format_poly(f),
        "equal": res["equal"],
        "milnor": res["milnor"],
        "matches_milnor": res["matches_milnor"],
        "stabilized_at": {"twisted_de_rham": dr["truncation"], "higgs": hg["truncation"]},
        "below_prime_threshold": below,
    }
    ok = res["equal"] and res["matches_milnor"]
    return _report(spec, "bk-check", _verdict(ok), certs, truncation=max(dr["truncation"], hg["truncation"]), dims=dims, seed=opts.seed)


def task_weyl_center(spec: ProblemSpec, opts: Options) -> dict:
    p, n = spec.prime, spec.num_vars
    if "derivation" in spec.raw:
        coeffs = spec.raw["derivation"]
        if not isinstance(coeffs, list) or len(coeffs) != n:
            raise InputError(f"derivation: expected {n} polynomial strings")
        ders = [Derivation([parse_poly(s, p, n, X, f"derivation[{i}]") for i, s in enumerate(coeffs)])]
    else:
        rng = random.Random(opts.seed)
        count = spec.raw.get("samples", 5)
        ders = [Derivation([random_poly(rng, p, n, rng.randint(0, 3)) for _ in range(n)]) for _ in range(count)]
    checks = []
    ok = True
    for der in ders:
        witness = central_witness(der)
        cert = centrality_certificate(witness)
        closed_form = witness == expected_witness(der)
        ok = ok and all(cert.values()) and closed_form
        checks.append(
            {
                "derivation": [format_poly(c) for c in der.coeffs],
                "commutes_with_generators": all(cert.values()),
                "equals_sum_of_pth_powers": closed_form,
            }
        )
    certs: dict = {"derivations": checks}
    if "splitting_dimension" in spec.raw:
        split = splitting_generator_check(spec.raw["splitting_dimension"], p)
        certs["splitting"] = split
        ok = ok and split["ok"]
    return _report(spec, "weyl-center-check", _verdict(ok), certs, seed=opts.seed)


def _random_constant_thetas(rng: random.Random, p: int, n: int, r: int) -> list:
    # polynomials in one strictly upper triangular matrix commute and are nilpotent
    j = np.array([[rng.randrange(p) if b > a else 0 for b in range(r)] for a in range(r)], dtype=np.int64)
    j2 = (j @ j) % p
    return [(rng.randrange(p) * j + rng.randrange(p) * j2) % p for _ in range(n)]


def task_dp_check(spec: ProblemSpec, opts: Options) -> dict:
    p, n = spec.prime, spec.num_vars
    max_order = spec.raw.get("max_order", 4)
    trunc = spec.truncation if spec.truncation is not None else 2
    tables = dp_table_check(n, p, max_order)
    if spec.module is not None:
        h = _need_kind(spec, HiggsModule, "dp-check")
        if not all(x.is_constant() for m in h.matrices for row in m for x in row):
            raise InputError("dp-check needs constant Higgs matrices")
        instances = [[np.array([[x.constant_term() for x in row] for row in m], dtype=np.int64) for m in h.matrices]]
    else:
        rng = random.Random(opts.seed)
        instances = [_random_constant_thetas(rng, p, n, rng.randint(1, 3)) for _ in range(spec.raw.get("samples", 5))]
    results = []
    ok = all(tables.values())
    for thetas in instances:
        cas = casimir_check(thetas, trunc, p)
        inv = involution_check(thetas, trunc, p)
        ok = ok and cas["ok"] and inv["isomorphism"] and inv["first_field_is_minus_theta"]
        results.append(
            {
                "thetas": [t.tolist() for t in thetas],
                "casimir": cas,
                "involution": {k: v for k, v in inv.items() if k != "matrix"},
            }
        )
    certs = {"tables": tables, "max_order": max_order, "instances": results}
    return _report(spec, "dp-check", _verdict(ok), certs, truncation=trunc, seed=opts.seed)


def task_bzeta_check(spec: ProblemSpec, opts: Options) -> dict:
    lift = _lift(spec)
    top = spec.truncation if spec.truncation is not None else min(3, spec.prime - 1)
    if top >= spec.prime:
        raise InputError("bzeta-check truncation must be below p")
    rows = [b_zeta_check(lift, t) for t in range(top + 1)]
    ok = all(r["ok"] for r in rows)
    return _report(spec, "bzeta-check", _verdict(ok), {"truncations": rows}, truncation=top, seed=opts.seed)


TASKS: dict[str, Callable[[ProblemSpec, Options], dict]] = {
    "p-curvature": task_p_curvature,
    "cartier": task_cartier,
    "inverse-cartier": task_inverse_cartier,
    "derham-cohomology": task_derham,
    "higgs-cohomology": task_higgs_cohomology,
    "compare": task_compare,
    "bk-check": task_bk_check,
    "weyl-center-check": task_weyl_center,
    "dp-check": task_dp_check,
    "bzeta-check": task_bzeta_check,
}


def run(spec: ProblemSpec, task: str | None = None, opts: Options | None = None) -> dict:
    """Run one task and return its report; NotStabilized becomes a verdict."""
    opts = opts or Options(seed=spec.seed or 0)
    name = task or spec.task
    if name not in TASKS:
        raise InputError(f"unknown task {name!r}; expected one of {', '.join(TASKS)}")
    try:
        return TASKS[name](spec, opts)
    except NotStabilized as exc:
        return _report(spec, name, "not-stabilized", {"error": str(exc)}, stabilized=False, seed=opts.seed)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are input errors, not the argparse default of 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="charp", description=__doc__.splitlines()[0])
    ap.add_argument("--task", help="one of: " + ", ".join([*TASKS, "gen-fixture"]))
    ap.add_argument("--spec", help="problem file (JSON)")
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--seed", type=int, help="seed for random instances (default 0)")
    ap.add_argument("--max-degree", type=int, help="maximum polynomial degree of the slices (default 4p)")
    ap.add_argument("--prime-threshold", type=int, help="bk-check: primes at or below this are flagged")
    ap.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")
    fx = ap.add_argument_group("gen-fixture")
    fx.add_argument("--family", choices=FAMILIES)
    fx.add_argument("--prime", type=int, default=5)
    fx.add_argument("--num-vars", type=int, default=1)
    fx.add_argument("--rank", type=int, default=2)
    return ap


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    seed = args.seed
    try:
        if args.task == "gen-fixture":
            if not args.family:
                raise InputError("gen-fixture needs --family")
            check_prime(args.prime)
            _write(dump_json(gen_fixture(seed or 0, args.family, args.prime, args.num_vars, args.rank)), args.out)
            return EXIT_PASS
        if not args.spec:
            raise InputError("--spec is required")
        try:
            with open(args.spec, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.spec}: {exc.strerror}") from None
        spec = parse_problem(text, args.spec)
        if seed is None:
            seed = spec.seed if spec.seed is not None else 0
        opts = Options(seed, args.max_degree, args.prime_threshold)
        start = time.perf_counter()
        report = run(spec, args.task, opts)
        if args.timing:
            report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CharpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(dump_json(_jsonable(report)), args.out)
    return VERDICT_EXIT[report["verdict"]]


if __name__ == "__main__":
    sys.exit(main())

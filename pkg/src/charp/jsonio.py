"""JSON problem files: parsing with located errors, and serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import polymat as pm
from .cartx import FrobeniusLift
from .conn import ConnectionModule
from .errors import InputError, ParseError
from .forms import DiffForm
from .gfpoly import X, XP, Poly, check_prime, format_poly, parse_poly
from .higgs import HiggsModule


def load_json(text: str, where: str = "<spec>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, where) from None


def dump_json(obj: Any) -> str:
    """Canonical serialization: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def _require(data: dict, key: str, where: str):
    if not isinstance(data, dict) or key not in data:
        raise InputError(f"{where}: missing field {key!r}")
    return data[key]


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: expected an integer, got {value!r}")
    return value


def parse_matrix(entries, rank: int, p: int, n: int, ring: str, where: str) -> pm.PolyMatrix:
    """Accept either nested rows or a flat row-major list of rank*rank strings."""
    if not isinstance(entries, list):
        raise InputError(f"{where}: expected a list")
    if len(entries) == rank and all(isinstance(row, list) for row in entries):
        flat = [x for row in entries for x in row]
        if any(len(row) != rank for row in entries):
            raise InputError(f"{where}: every row needs {rank} entries")
    else:
        flat = entries
    if len(flat) != rank * rank:
        raise InputError(f"{where}: expected {rank * rank} entries, got {len(flat)}")
    out = []
    for a in range(rank):
        out.append([parse_poly(flat[a * rank + b], p, n, ring, f"{where}[{a}][{b}]") for b in range(rank)])
    return out


def parse_module(data: dict, p: int, n: int, where: str = "module"):
    kind = _require(data, "kind", where)
    rank = _int(_require(data, "rank", where), f"{where}.rank")
    if rank < 1:
        raise InputError(f"{where}.rank must be positive")
    mats = _require(data, "matrices", where)
    if not isinstance(mats, list) or len(mats) != n:
        raise InputError(f"{where}.matrices: expected one matrix per variable ({n})")
    if kind == "connection":
        return ConnectionModule([parse_matrix(m, rank, p, n, X, f"{where}.matrices[{i}]") for i, m in enumerate(mats)])
    if kind == "higgs":
        return HiggsModule([parse_matrix(m, rank, p, n, XP, f"{where}.matrices[{i}]") for i, m in enumerate(mats)])
    raise InputError(f"{where}.kind must be 'connection' or 'higgs', got {kind!r}")


def module_to_json(module) -> dict:
    kind = "connection" if isinstance(module, ConnectionModule) else "higgs"
    return {
        "kind": kind,
        "rank": module.rank,
        "matrices": [[format_poly(x) for row in m for x in row] for m in module.matrices],
    }


def matrices_to_json(mats) -> list:
    return [[[format_poly(x) for x in row] for row in m] for m in mats]


def parse_lift(data: dict, p: int, n: int, where: str = "lift") -> FrobeniusLift:
    g = _require(data, "g", where)
    if not isinstance(g, list) or len(g) != n:
        raise InputError(f"{where}.g: expected {n} polynomial strings")
    return FrobeniusLift([parse_poly(s, p, n, X, f"{where}.g[{i}]") for i, s in enumerate(g)])


def lift_to_json(lift: FrobeniusLift) -> dict:
    return {"g": [format_poly(g) for g in lift.g]}


def parse_form(data, p: int, n: int, ring: str, where: str = "form") -> DiffForm:
    if not isinstance(data, list) or not data:
        raise InputError(f"{where}: expected a non-empty list of [index, polynomial] pairs")
    comps = {}
    degree = None
    for k, pair in enumerate(data):
        if not isinstance(pair, list) or len(pair) != 2 or not isinstance(pair[0], list):
            raise InputError(f"{where}[{k}]: expected [index list, polynomial string]")
        idx = tuple(_int(i, f"{where}[{k}]") for i in pair[0])
        if degree is None:
            degree = len(idx)
        elif len(idx) != degree:
            raise InputError(f"{where}[{k}]: mixed form degrees")
        f = parse_poly(pair[1], p, n, ring, f"{where}[{k}]")
        comps[idx] = comps[idx] + f if idx in comps else f
    try:
        return DiffForm(p, n, degree, comps, ring)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def form_to_json(form: DiffForm) -> list:
    return [[list(idx), format_poly(f)] for idx, f in sorted(form.comps.items())]


@dataclass
class ProblemSpec:
    prime: int
    num_vars: int
    task: str | None = None
    module: Any = None
    lift: FrobeniusLift | None = None
    f: Poly | None = None
    raw: dict = field(default_factory=dict)
    truncation: int | None = None
    max_degree: int | None = None
    prime_threshold: int | None = None
    seed: int | None = None


def parse_problem(text: str, where: str = "<spec>") -> ProblemSpec:
    data = load_json(text, where)
    if not isinstance(data, dict):
        raise InputError("problem file must contain a JSON object")
    p = check_prime(_int(_require(data, "prime", "problem"), "prime"))
    n = _int(_require(data, "num_vars", "problem"), "num_vars")
    if n < 1:
        raise InputError("num_vars must be positive")
    spec = ProblemSpec(prime=p, num_vars=n, task=data.get("task"), raw=data)
    if "module" in data:
        spec.module = parse_module(data["module"], p, n)
    if "lift" in data:
        spec.lift = parse_lift(data["lift"], p, n)
    if "f" in data:
        spec.f = parse_poly(data["f"], p, n, X, "f")
    for key in ("truncation", "max_degree", "prime_threshold", "seed"):
        if data.get(key) is not None:
            setattr(spec, key, _int(data[key], key))
    return spec

"""``bytree`` command line: documents in, structured text out.

Exit codes: 0 on success, 1 for computational failures, 2 for bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

from .core import (
    BYForest,
    HyperellipticGraph,
    LengthForm,
    check_parity_A,
    check_parity_B,
    check_parity_B_prime,
    from_hyperelliptic_graph,
    to_double_cover,
    validate,
    validate_graph,
)
from .errors import ByTreeError, ComputationError, InputError, ParseError, ValidationError

FOREST_KEYS = {"vertices", "edges", "S", "F", "signs"}
GRAPH_KEYS = {"vertices", "edges", "frob", "iota", "frob_edges", "iota_edges"}


# ---------------------------------------------------------------------------
# parsing


def _keys(obj: Any, allowed: set[str], where: str, required: Sequence[str] = ()) -> Mapping:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"{where}: unknown key {unknown[0]!r}")
    for k in required:
        if k not in obj:
            raise ParseError(f"{where}: missing key {k!r}")
    return obj


def _list(obj: Any, where: str) -> list:
    if not isinstance(obj, list):
        raise ParseError(f"{where}: expected a list")
    return obj


def _ident(x: Any, where: str) -> str:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ParseError(f"{where}: ids must be strings or integers")
    return str(x)


def _int(x: Any, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{where}: expected an integer, got {x!r}")
    return x


def parse_length(x: Any, where: str) -> LengthForm:
    if isinstance(x, str):
        raise ParseError(f"{where}: rational or string lengths are only allowed in graph documents")
    if isinstance(x, dict):
        _keys(x, {"constant", "terms", "parity"}, where, ("terms",))
        terms = x["terms"]
        if not isinstance(terms, dict):
            raise ParseError(f"{where}.terms: expected an object")
        parity = x.get("parity", {})
        if not isinstance(parity, dict):
            raise ParseError(f"{where}.parity: expected an object")
        unknown = sorted(set(parity) - set(terms))
        if unknown:
            raise ParseError(f"{where}.parity: {unknown[0]!r} is not a term")
        try:
            return LengthForm(
                _int(x.get("constant", 0), f"{where}.constant"),
                tuple((str(v), _int(c, f"{where}.terms.{v}")) for v, c in terms.items()),
                tuple((str(v), str(p)) for v, p in parity.items()),
            )
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from exc
    n = _int(x, where)
    if n < 0:
        raise ParseError(f"{where}: negative length")
    return LengthForm(n)


def parse_forest(doc: Any, check: bool = True) -> BYForest:
    """A ``BYForest`` from its document; raises ``ParseError`` or ``ValidationError``."""
    _keys(doc, FOREST_KEYS, "forest", ("vertices", "edges"))
    vertices = [_ident(v, f"vertices[{i}]") for i, v in enumerate(_list(doc["vertices"], "vertices"))]
    edges = []
    for i, e in enumerate(_list(doc["edges"], "edges")):
        where = f"edges[{i}]"
        _keys(e, {"id", "ends", "length"}, where, ("id", "ends", "length"))
        ends = _list(e["ends"], f"{where}.ends")
        if len(ends) != 2:
            raise ParseError(f"{where}.ends: expected two vertices")
        edges.append((_ident(e["id"], f"{where}.id"), _ident(ends[0], where), _ident(ends[1], where), parse_length(e["length"], f"{where}.length")))
    S = _keys(doc.get("S", {}), {"vertices", "edges"}, "S")
    s_vertices = [_ident(v, "S.vertices") for v in _list(S.get("vertices", []), "S.vertices")]
    s_edges = [_ident(v, "S.edges") for v in _list(S.get("edges", []), "S.edges")]
    F = _keys(doc.get("F", {}), {"vertex_map"}, "F")
    vmap = F.get("vertex_map", {})
    if not isinstance(vmap, dict):
        raise ParseError("F.vertex_map: expected an object")
    signs = {}
    for i, s in enumerate(_list(doc.get("signs", []), "signs")):
        where = f"signs[{i}]"
        _keys(s, {"component_rep_edge", "sign"}, where, ("component_rep_edge", "sign"))
        signs[_ident(s["component_rep_edge"], where)] = _int(s["sign"], f"{where}.sign")
    for kind, ids in (("vertex", vertices), ("edge", [e[0] for e in edges])):
        seen: set[str] = set()
        for x in ids:
            if x in seen:
                raise ValidationError(f"{kind} {x} is listed twice")
            seen.add(x)
    P = BYForest.build(vertices, edges, s_vertices, s_edges, {str(k): str(v) for k, v in vmap.items()}, signs)
    if check:
        diags = validate(P)
        if diags:
            raise ValidationError("; ".join(d.message for d in diags), diags)
    return P


def _fraction(x: Any, where: str) -> Fraction:
    if isinstance(x, bool):
        raise ParseError(f"{where}: expected a length")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            num, _, den = x.partition("/")
            return Fraction(int(num), int(den) if den else 1)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: {x!r} is not of the form p/q") from exc
    raise ParseError(f"{where}: expected an integer or a 'p/q' string")


def parse_graph(doc: Any, check: bool = True) -> HyperellipticGraph:
    _keys(doc, GRAPH_KEYS, "graph", ("vertices", "edges"))
    vertices = [_ident(v, f"vertices[{i}]") for i, v in enumerate(_list(doc["vertices"], "vertices"))]
    edges = []
    for i, e in enumerate(_list(doc["edges"], "edges")):
        where = f"edges[{i}]"
        _keys(e, {"id", "ends", "length"}, where, ("id", "ends", "length"))
        ends = _list(e["ends"], f"{where}.ends")
        if len(ends) != 2:
            raise ParseError(f"{where}.ends: expected two vertices")
        edges.append((_ident(e["id"], where), _ident(ends[0], where), _ident(ends[1], where), _fraction(e["length"], f"{where}.length")))
    maps = {}
    for key in ("frob", "iota", "frob_edges", "iota_edges"):
        m = doc.get(key)
        if m is not None and not isinstance(m, dict):
            raise ParseError(f"{key}: expected an object")
        maps[key] = None if m is None else {str(k): str(v) for k, v in m.items()}
    G = HyperellipticGraph.build(vertices, edges, **maps)
    if check:
        diags = validate_graph(G)
        if diags:
            raise ValidationError("; ".join(d.message for d in diags), diags)
    return G


def serialize(obj: BYForest | HyperellipticGraph) -> dict:
    return obj.to_json()


def load_document(path: str | None) -> Any:
    try:
        if path in (None, "-"):
            text = sys.stdin.read()
        else:
            text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# table


def data_path(name: str) -> Path:
    return Path(str(resources.files("bytree") / "data" / name))


def run_table(manifest: str | Path | None = None, grid: Sequence[int] = (1, 2, 3, 4)) -> list[dict]:
    """Symbolic Tamagawa number of every row, compared with its expected formula by sampling."""
    from .tamagawa import parse_formula, sample_points, tamagawa

    path = Path(manifest) if manifest else data_path("genus2.json")
    rows = json.loads(path.read_text())["rows"]
    out = []
    for row in rows:
        P = parse_forest(json.loads((path.parent / row["file"]).read_text()))
        entry = {"name": row["name"], "expected": row["formula"]}
        try:
            result = tamagawa(P, mode="symbolic")
            entry["computed"] = str(result)
            names = list(P.variables())
            expected = parse_formula(row["formula"], names)
            points = 0
            mismatch = None
            for env in sample_points(P.variables(), grid):
                want = expected.subs({s: env[s.name] for s in expected.free_symbols})
                got = result.evaluate(env)
                points += 1
                if int(want) != got:
                    mismatch = {"point": env, "expected": int(want), "computed": got}
                    break
            entry.update(points=points, passed=mismatch is None)
            if mismatch:
                entry["mismatch"] = mismatch
        except ByTreeError as exc:
            entry.update(passed=False, error=str(exc))
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# commands


def _parity(P: BYForest) -> dict:
    out = {}
    for name, check in (("A", check_parity_A), ("B", check_parity_B), ("B_prime", check_parity_B_prime)):
        try:
            rep = check(P)
            out[name] = {"holds": rep.holds, "witness": rep.witness}
        except ByTreeError as exc:
            out[name] = {"holds": None, "reason": str(exc)}
    return out


def cmd_validate(args) -> tuple[dict, int]:
    doc = load_document(args.file)
    if args.graph:
        G = parse_graph(doc, check=False)
        diags = validate_graph(G)
        return {"valid": not diags, "diagnostics": [d.to_json() for d in diags]}, 2 if diags else 0
    P = parse_forest(doc, check=False)
    diags = validate(P)
    out = {"valid": not diags, "diagnostics": [d.to_json() for d in diags]}
    if not diags:
        out["parity"] = _parity(P)
    return out, 2 if diags else 0


def cmd_tamagawa(args) -> tuple[dict, int]:
    from .tamagawa import tamagawa

    P = parse_forest(load_document(args.file))
    if args.symbolic or not P.is_concrete():
        result = tamagawa(P, mode="symbolic", oracle_check=args.oracle_check)
        return {"tamagawa": result.to_json()}, 0
    return {"tamagawa": tamagawa(P, oracle_check=True if args.oracle_check else None)}, 0


def cmd_neron(args) -> tuple[dict, int]:
    from .neron import decompose, direct_pipe, mark_tree, neron_group, recursive_pipe, show
    from .tamagawa import reduce

    P = parse_forest(load_document(args.file))
    out: dict[str, Any] = {"neron": neron_group(P, oracle_check=args.oracle_check)}
    if args.show_pipe:
        pieces = []
        for t in reduce(P):
            item: dict[str, Any] = {"sign": t.sign, "orbit_size": t.orbit_size, "S": sorted(t.forest.s_vertices)}
            if len(t.forest.s_vertices) >= 2:
                m, side = mark_tree(t)
                c = decompose(m)
                item.update(star=m.star, side=side, decomposition=show(c))
                item["pipe"] = recursive_pipe(c).to_dict()
                item["direct_pipe"] = direct_pipe(m).to_dict()
            pieces.append(item)
        out["pieces"] = pieces
    return out, 0


def cmd_oracle(args) -> tuple[dict, int]:
    from .oracle import graph_report, oracle_report

    doc = load_document(args.file)
    if args.graph:
        return graph_report(parse_graph(doc)), 0
    P = parse_forest(doc)
    P.require_concrete()
    return oracle_report(P), 0


def _qlist(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"--qcheck expects a comma separated list of primes, got {text!r}") from exc


def cmd_towers(args) -> tuple[dict, int]:
    from . import towers

    doc = load_document(args.file)
    check_e = tuple(range(5, args.max_e + 1))
    if args.graph:
        G = parse_graph(doc)
        source, N = towers.graph_source(G), towers.graph_order(G)
    else:
        P = parse_forest(doc)
        P.require_concrete()
        towers.require_parity(P)
        source, N = towers.forest_source(P), towers.order_of(P)
    qchecks = [towers.qpower_check_source(source, q, f0).to_json() for q in _qlist(args.qcheck) for f0 in (1, 2)]
    out: dict[str, Any] = {"N": N, "qchecks": qchecks}
    try:
        g = towers.fit_constants(source, N, check_e)
        out.update(constants={str(d): list(v) for d, v in sorted(g.constants.items())}, verified=True)
    except ComputationError as exc:
        out.update(constants=None, verified=False, error=str(exc))
    ok = out["verified"] and all(q["ok"] for q in qchecks)
    return out, 0 if ok else 1


def cmd_double_cover(args) -> tuple[dict, int]:
    P = parse_forest(load_document(args.file))
    return to_double_cover(P).to_json(), 0


def cmd_from_graph(args) -> tuple[dict, int]:
    G = parse_graph(load_document(args.file))
    return from_hyperelliptic_graph(G).to_json(), 0


def cmd_table(args) -> tuple[dict, int]:
    rows = run_table(args.file)
    passed = sum(r["passed"] for r in rows)
    return {"rows": rows, "passed": passed, "total": len(rows)}, 0 if passed == len(rows) else 1


COMMANDS = {
    "validate": cmd_validate,
    "tamagawa": cmd_tamagawa,
    "neron": cmd_neron,
    "oracle": cmd_oracle,
    "towers": cmd_towers,
    "double-cover": cmd_double_cover,
    "from-graph": cmd_from_graph,
    "table": cmd_table,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bytree", description="Tamagawa numbers and Néron component groups of BY trees.")
    p.add_argument("--pretty", action="store_true", help="indent the output")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, file_help: str = "input document (default: standard input)"):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("file", nargs="?", help=file_help)
        sp.add_argument("--pretty", action="store_true", default=argparse.SUPPRESS, help="indent the output")
        return sp

    sp = add("validate", "list violated invariants and report the parity conditions")
    sp.add_argument("--graph", action="store_true", help="the document is a hyperelliptic graph")
    sp = add("tamagawa", "Tamagawa number")
    sp.add_argument("--symbolic", action="store_true", help="keep edge-length variables symbolic")
    sp.add_argument("--oracle-check", action="store_true", help="compare with the lattice oracle")
    sp = add("neron", "Néron component group (invariant factors)")
    sp.add_argument("--oracle-check", action="store_true", help="compare with the lattice oracle")
    sp.add_argument("--show-pipe", action="store_true", help="dump the pipe of every simple piece")
    sp = add("oracle", "brute-force lattice invariants")
    sp.add_argument("--graph", action="store_true", help="the document is a hyperelliptic graph")
    sp = add("towers", "growth constants along base change")
    sp.add_argument("--graph", action="store_true", help="the document is a hyperelliptic graph")
    sp.add_argument("--max-e", type=int, default=6, help="largest ramification degree checked (default 6)")
    sp.add_argument("--qcheck", help="comma separated primes q for the (q-1)-th power check")
    add("double-cover", "hyperelliptic graph of a BY forest")
    add("from-graph", "BY forest of a hyperelliptic graph")
    add("table", "genus-2 table check", "manifest (default: the bundled genus-2 manifest)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out, code = COMMANDS[args.command](args)
    except InputError as exc:
        _report(exc, "input error")
        return 2
    except ByTreeError as exc:
        _report(exc, "computation failed")
        return 1
    indent = 2 if args.pretty else None
    print(json.dumps(out, indent=indent, sort_keys=False, default=_jsonable))
    return code


def _report(exc: ByTreeError, kind: str) -> None:
    doc: dict[str, Any] = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    diags = getattr(exc, "diagnostics", None)
    if diags:
        doc["diagnostics"] = [d.to_json() for d in diags]
    print(json.dumps(doc, default=_jsonable), file=sys.stderr)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    return str(x)


if __name__ == "__main__":
    sys.exit(main())

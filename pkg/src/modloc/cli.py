"""Command-line front end.

Subcommands: gen, eval, invariance, locality, compile, transform,
swap-check.  Exit codes: 0 success, 1 a checking command found a property
violation, 2 usage or parse errors.  All randomness funnels through one
seed (--seed, else the MODLOC_SEED environment variable, else 0), echoed in
the output header; with --deterministic no timestamp is emitted and
identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from typing import Optional, Sequence, TextIO

from . import circuits, generators, locality, logic, structures

USAGE_ERROR = 2
VIOLATION = 1


class _Usage(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MODLOC_SEED")
    return int(env) if env else 0


def _header(args, out: TextIO):
    print(f"# seed: {_seed(args)}", file=out)
    if not args.deterministic:
        print(f"# time: {datetime.datetime.now().isoformat()}", file=out)


def _load_structure(path: str) -> structures.Structure:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return structures.parse_structure(fh.read())
    except OSError as exc:
        raise _Usage(f"cannot read structure file: {exc}")
    except structures.StructureError as exc:
        raise _Usage(f"bad structure file {path}: {exc}")


def _load_formula(path: str, signature=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return logic.parse_formula_file(fh.read(), signature)
    except OSError as exc:
        raise _Usage(f"cannot read formula file: {exc}")
    except logic.FormulaSyntaxError as exc:
        raise _Usage(f"bad formula file {path}: {exc}")


def _load_circuit(path: str, width: Optional[int] = None) -> circuits.Circuit:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return circuits.parse_circuit(fh.read(), width)
    except OSError as exc:
        raise _Usage(f"cannot read circuit file: {exc}")
    except circuits.CircuitError as exc:
        raise _Usage(f"bad circuit file {path}: {exc}")


def _parse_assignment(text: Optional[str]) -> dict[str, int]:
    if not text:
        return {}
    assignment = {}
    for chunk in text.split(","):
        name, sep, value = chunk.partition("=")
        if not sep or not value.lstrip("-").isdigit():
            raise _Usage(f"bad assignment chunk {chunk!r} (want var=int)")
        assignment[name.strip()] = int(value)
    return assignment


def _parse_embedding(text: str, n: int) -> logic.Embedding:
    if text == "identity":
        return logic.Embedding.identity(n)
    parts = text.split(",")
    if len(parts) != n or not all(p.strip().lstrip("-").isdigit() for p in parts):
        raise _Usage(f"embedding literal must list {n} positions")
    try:
        return logic.Embedding(tuple(int(p) for p in parts))
    except logic.LogicError as exc:
        raise _Usage(str(exc))


def _parse_anchors(text: str) -> list[tuple[int, ...]]:
    anchors = []
    for block in text.split(";"):
        parts = [p.strip() for p in block.split(",") if p.strip()]
        if not parts or not all(p.isdigit() for p in parts):
            raise _Usage(f"bad anchor block {block!r}")
        anchors.append(tuple(int(p) for p in parts))
    return anchors


def _fmt_tuple(t: tuple[int, ...]) -> str:
    return "(" + ",".join(str(e) for e in t) + ")"


def _print_report(report: locality.LocalityReport, out: TextIO):
    print(f"notion: {report.notion}", file=out)
    print(f"radius: {report.radius}", file=out)
    if report.t is not None:
        print(f"t: {report.t}", file=out)
    print(f"violations: {report.total}", file=out)
    for witness in report.violations:
        if report.notion == "swap_closure":
            print(f"witness: {witness[0]} -> {witness[1]}", file=out)
        elif report.notion == "shift":
            print("witness: " + "/".join(_fmt_tuple(a) for a in witness), file=out)
        else:
            print(f"witness: {_fmt_tuple(witness[0])}/{_fmt_tuple(witness[1])}", file=out)


# ---------------------------------------------------------------------------
# Commands


def _cmd_gen(args, out: TextIO) -> int:
    _header(args, out)
    if args.family == "cycles":
        lengths = [int(x) for x in args.lengths.split(",") if x]
        s = generators.gen_cycles(lengths)
    elif args.family == "torus":
        s = generators.gen_torus(generators.TorusSpec(args.height, args.width, args.twist))
    elif args.family == "hose":
        s, a, b = generators.gen_hose(args.height, args.width)
        print(f"# witness elements: a={a} b={b}", file=out)
    elif args.family == "string":
        s = generators.gen_string_structure(args.word, args.alphabet)
    elif args.family == "hanf":
        witness = generators.gen_hanf_witness(args.scale)
        word = witness.u if args.which == "u" else witness.v
        print(f"# word: {word}", file=out)
        s = generators.gen_string_structure(word, "012")
    elif args.family == "subdivided":
        edges = _parse_edges(args.edges)
        marked = _parse_edges(args.marked) if args.marked else edges
        s = generators.gen_subdivided(args.nodes, edges, marked, args.factor)
    elif args.family in _SHIFT_FAMILIES:
        fam = _SHIFT_FAMILIES[args.family](args.t or 3, args.scale)
        print(f"# anchors: {';'.join(','.join(map(str, a)) for a in fam.anchors)}", file=out)
        print(f"# radius: {fam.radius}", file=out)
        s = fam.structure
    elif args.family == "anchored-paths":
        fam = generators.gen_anchored_paths(args.t or 2, args.scale)
        print(f"# anchors: {';'.join(','.join(map(str, a)) for a in fam.anchors)}", file=out)
        s = fam.structure
    elif args.family == "formula":
        if not args.name:
            raise _Usage("gen formula needs --name")
        params = {}
        if args.name.startswith("torus") or args.name == "hose_query":
            params["h"] = args.height
        elif args.name == "reach_shift":
            params["t"] = args.t or 3
        try:
            phi = generators.paper_formula(args.name, **params)
        except ValueError as exc:
            raise _Usage(str(exc))
        out.write(logic.format_formula(phi) + "\n")
        return 0
    else:
        raise _Usage(f"unknown family {args.family!r}")
    out.write(structures.format_structure(s))
    return 0


_SHIFT_FAMILIES = {
    "reach": generators.gen_reach_family,
    "cycle-family": generators.gen_cycle_family,
    "triangle-reach": generators.gen_triangle_reach_family,
    "same-distance": generators.gen_same_distance_family,
}


def _parse_edges(text: str) -> list[tuple[int, int]]:
    edges = []
    for chunk in text.split(","):
        a, sep, b = chunk.partition("-")
        if not sep or not a.strip().isdigit() or not b.strip().isdigit():
            raise _Usage(f"bad edge {chunk!r} (want U-V)")
        edges.append((int(a), int(b)))
    return edges


def _cmd_eval(args, out: TextIO) -> int:
    s = _load_structure(args.structure)
    phi, tables = _load_formula(args.formula, s.signature)
    assignment = _parse_assignment(args.assign)
    iota = _parse_embedding(args.embedding, s.size)
    _header(args, out)
    print(f"embedding: {args.embedding}", file=out)
    try:
        value = logic.eval_formula(s, iota, phi, assignment, tables)
    except logic.EvalError as exc:
        print(f"error: {exc}", file=out)
        return 1
    print(f"result: {'true' if value else 'false'}", file=out)
    return 0


def _cmd_invariance(args, out: TextIO) -> int:
    s = _load_structure(args.structure)
    phi, tables = _load_formula(args.formula, s.signature)
    assignment = _parse_assignment(args.assign)
    _header(args, out)
    print(f"mode: {args.mode}", file=out)
    try:
        verdict = logic.check_invariance(
            s,
            phi,
            assignment,
            mode=args.mode,
            count=args.count,
            seed=_seed(args),
            numpreds=tables,
        )
    except logic.SizeOverflowError as exc:
        raise _Usage(str(exc))
    if verdict.mode == "sampled":
        print(f"seed: {verdict.seed}", file=out)
    if verdict.invariant:
        print(f"verdict: invariant ({verdict.tested} embeddings)", file=out)
        return 0
    print(f"verdict: counterexample (after {verdict.tested} embeddings)", file=out)
    e1, e2 = verdict.witness
    print("embedding1: " + ",".join(str(p) for p in e1.mapping), file=out)
    print("embedding2: " + ",".join(str(p) for p in e2.mapping), file=out)
    return VIOLATION


def _cmd_locality(args, out: TextIO) -> int:
    s = _load_structure(args.structure)
    phi, tables = _load_formula(args.formula, s.signature)
    _header(args, out)
    if args.notion == "hanf":
        if not args.structure2:
            raise _Usage("hanf locality needs --structure2")
        s2 = _load_structure(args.structure2)
        equivalent = locality.hanf_equivalent(s, (), s2, (), args.radius)
        v1 = logic.eval_formula(s, logic.Embedding.identity(s.size), phi, {}, tables)
        v2 = logic.eval_formula(s2, logic.Embedding.identity(s2.size), phi, {}, tables)
        print("notion: hanf", file=out)
        print(f"radius: {args.radius}", file=out)
        print(f"equivalent: {'true' if equivalent else 'false'}", file=out)
        print(f"value1: {'true' if v1 else 'false'}", file=out)
        print(f"value2: {'true' if v2 else 'false'}", file=out)
        violation = equivalent and v1 != v2
        print(f"violation: {'true' if violation else 'false'}", file=out)
        return VIOLATION if violation else 0

    q = logic.query_eval(s, phi, policy=args.policy, numpreds=tables)
    k = len(logic.free_vars(phi))
    if k == 0:
        raise _Usage(
            f"{args.notion} locality needs a formula with free variables; use 'locality hanf' for sentences"
        )
    if args.notion == "gaifman":
        report = locality.gaifman_violations(q, s, args.radius, k=k, cap=args.cap)
    elif args.notion == "weak-gaifman":
        report = locality.weak_gaifman_violations(q, s, args.radius, k=k, cap=args.cap)
    elif args.notion == "shift":
        if args.t is None:
            raise _Usage("shift locality needs --t")
        if k % args.t:
            raise _Usage(f"formula arity {k} is not divisible by t={args.t}")
        if args.k is not None and args.k != k // args.t:
            raise _Usage(f"--k {args.k} contradicts formula arity {k} with t={args.t}")
        report = locality.shift_violations(
            q, s, args.radius, args.t, k // args.t, cap=args.cap
        )
    else:
        raise _Usage(f"unknown notion {args.notion!r}")
    _print_report(report, out)
    return 0 if report.ok else VIOLATION


def _cmd_compile(args, out: TextIO) -> int:
    try:
        signature = structures.Signature.from_spec(args.signature)
    except structures.StructureError as exc:
        raise _Usage(str(exc))
    phi, tables = _load_formula(args.formula, signature)
    circuit = circuits.compile_formula(phi, args.n, signature, numpreds=tables)
    depth, size = circuits.circuit_stats(circuit)
    _header(args, out)
    print(f"inputs: {circuit.input_width}", file=out)
    print(f"depth: {depth}", file=out)
    print(f"size: {size}", file=out)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(circuits.format_circuit(circuit))
        print(f"emitted: {args.emit}", file=out)
    return 0


def _cmd_transform(args, out: TextIO) -> int:
    _header(args, out)
    if args.lemma == "lemma1":
        if not (args.structure and args.anchors and args.m):
            raise _Usage("lemma1 needs --structure, --anchors, and --m")
        s = _load_structure(args.structure)
        anchors = _parse_anchors(args.anchors)
        k = len(anchors[0])
        layout = circuits.RepLayout(s.signature, s.size, k * len(anchors))
        circuit = _load_circuit(args.circuit, layout.length)
        try:
            transformed = circuits.lemma1_transform(circuit, s, anchors, args.m)
        except circuits.CircuitError as exc:
            raise _Usage(str(exc))
        print("hypotheses: ok", file=out)
    else:
        if not (args.t and args.m):
            raise _Usage("lemma2 needs --t and --m")
        circuit = _load_circuit(args.circuit, args.m)
        try:
            transformed, r = circuits.lemma2_transform(circuit, args.t, args.m)
        except circuits.Lemma2PreconditionError as exc:
            raise _Usage(str(exc))
        print(f"r: {r}", file=out)
        print("bounds: ok", file=out)
    depth, size = circuits.circuit_stats(transformed)
    print(f"depth: {depth}", file=out)
    print(f"size: {size}", file=out)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(circuits.format_circuit(transformed))
        print(f"emitted: {args.emit}", file=out)
    return 0


def _cmd_swap_check(args, out: TextIO) -> int:
    sig = generators.string_signature(args.alphabet)
    phi, _ = _load_formula(args.formula, sig)
    _header(args, out)
    report = locality.swap_closure_violations(
        phi, args.alphabet, args.n, args.radius, cap=args.cap
    )
    _print_report(report, out)
    return 0 if report.ok else VIOLATION


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modloc")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--deterministic", action="store_true")

    p = sub.add_parser("gen", help="emit an example-family structure")
    p.add_argument(
        "family",
        choices=[
            "cycles", "torus", "hose", "string", "hanf", "subdivided",
            "reach", "cycle-family", "triangle-reach", "same-distance",
            "anchored-paths", "formula",
        ],
    )
    p.add_argument("--name", default=None, help="paper formula name for 'gen formula'")
    p.add_argument("--lengths", default="3")
    p.add_argument("--height", type=int, default=3)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--twist", type=int, default=0)
    p.add_argument("--word", default="10")
    p.add_argument("--alphabet", default=None)
    p.add_argument("--scale", type=int, default=1, help="l for hanf/shift families, m for anchored-paths")
    p.add_argument("--which", choices=["u", "v"], default="u")
    p.add_argument("--nodes", type=int, default=2)
    p.add_argument("--edges", default="0-1")
    p.add_argument("--marked", default=None)
    p.add_argument("--factor", type=int, default=1)
    p.add_argument("--t", type=int, default=None)
    common(p)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("eval", help="evaluate a formula on a structure")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", default="")
    p.add_argument("--embedding", default="identity")
    common(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("invariance", help="check embedding-invariance")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", default="")
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--count", type=int, default=logic.DEFAULT_SAMPLE_COUNT)
    common(p)
    p.set_defaults(fn=_cmd_invariance)

    p = sub.add_parser("locality", help="run a locality tester")
    p.add_argument("notion", choices=["gaifman", "weak-gaifman", "shift", "hanf"])
    p.add_argument("--structure", required=True)
    p.add_argument("--structure2", default=None)
    p.add_argument("--formula", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--cap", type=int, default=locality.DEFAULT_CAP)
    p.add_argument(
        "--policy",
        choices=["identity-embedding", "assert-invariant"],
        default="identity-embedding",
    )
    common(p)
    p.set_defaults(fn=_cmd_locality)

    p = sub.add_parser("compile", help="compile a formula to a circuit")
    p.add_argument("--formula", required=True)
    p.add_argument("--signature", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--emit", default=None)
    common(p)
    p.set_defaults(fn=_cmd_compile)

    p = sub.add_parser("transform", help="apply a circuit transformation")
    p.add_argument("lemma", choices=["lemma1", "lemma2"])
    p.add_argument("--circuit", required=True)
    p.add_argument("--structure", default=None)
    p.add_argument("--anchors", default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--emit", default=None)
    common(p)
    p.set_defaults(fn=_cmd_transform)

    p = sub.add_parser("swap-check", help="check closure under disjoint swaps")
    p.add_argument("--formula", required=True)
    p.add_argument("--alphabet", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--cap", type=int, default=locality.DEFAULT_CAP)
    common(p)
    p.set_defaults(fn=_cmd_swap_check)

    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.fn(args, out)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (structures.StructureError, logic.FormulaSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (logic.LogicError, circuits.CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

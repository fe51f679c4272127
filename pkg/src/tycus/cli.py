"""Command-line interface: ``tycus validate|infer|check|run``.

Exit codes::

    0  success (validate: conformant, run: value)
    1  validation failure, type error (check) or stuck evaluation (run)
    2  shape references cycle through negation
    3  parse error
    4  evaluation ran out of fuel
    5  run: the program failed type checking
    6  run: the graph does not conform to the shapes
"""

from __future__ import annotations

import argparse
import json
import sys

from .evaluator import default_fuel, evaluate
from .inference import infer_shapes
from .pcq import parse_query
from .rdf import GraphSyntaxError, format_node, parse_graph
from .shacl import (
    ShapeError, StratificationError, ValidationFailure, compute_faithful_assignment,
    format_constraint, format_shape, format_shapes, parse_shapes,
)
from .syntax import ParseError
from .terms import format_term, format_type, parse_program
from .typecheck import TypeCheckError, typecheck

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_STRATIFICATION = 2
EXIT_PARSE = 3
EXIT_FUEL = 4
EXIT_ILL_TYPED = 5
EXIT_NONCONFORMANT = 6


class _Output:
    def __init__(self, machine: bool, out, err):
        self.machine = machine
        self.out = out
        self.err = err

    def emit(self, record: dict, text: str, *, error=False):
        if self.machine:
            print(json.dumps(record, sort_keys=True), file=self.out)
        else:
            print(text, file=self.err if error else self.out)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_shapes(path, known=()):
    if not path:
        return []
    return parse_shapes(_read(path), known)


def _report_violations(out: _Output, failure: ValidationFailure):
    for v in failure.violations:
        out.emit({
            "kind": "violation",
            "shape": v.shape,
            "node": format_node(v.node),
            "condition": v.condition,
            "conjunct": None if v.conjunct is None else format_constraint(v.conjunct),
        }, f"violation: {v}")


def cmd_validate(args, out: _Output) -> int:
    g = parse_graph(_read(args.graph))
    shapes = _load_shapes(args.shapes)
    try:
        sigma = compute_faithful_assignment(shapes, g)
    except StratificationError as exc:
        out.emit({"kind": "stratification", "cycle": exc.cycle}, f"error: {exc}", error=True)
        return EXIT_STRATIFICATION
    except ValidationFailure as failure:
        _report_violations(out, failure)
        return EXIT_FAIL
    for s in sorted(sigma.shape_names):
        nodes = sorted(format_node(v) for v in sigma.members(s))
        out.emit({"kind": "assignment", "shape": s, "nodes": nodes},
                 f"{s}: {', '.join(nodes) if nodes else '(none)'}")
    out.emit({"kind": "result", "conforms": True, "triples": len(g)}, f"conforms ({len(g)} triples)")
    return EXIT_OK


def cmd_infer(args, out: _Output) -> int:
    q = parse_query(_read(args.query))
    inferred = infer_shapes(q, args.id)
    if out.machine:
        for s in inferred:
            out.emit({"kind": "shape", "name": s.name, "text": format_shape(s)}, "")
    else:
        out.out.write(format_shapes(inferred))
    return EXIT_OK


def _load_program(args):
    ambient = _load_shapes(args.shapes)
    program_shapes, term = parse_program(_read(args.program), [s.name for s in ambient])
    shapes = ambient + program_shapes
    return shapes, term


def _emit_type_error(out: _Output, exc: TypeCheckError):
    out.emit(dict(kind="type-error", **exc.record()), f"type error: {exc}", error=True)


def cmd_check(args, out: _Output) -> int:
    shapes, term = _load_program(args)
    try:
        result = typecheck(shapes, term)
    except TypeCheckError as exc:
        _emit_type_error(out, exc)
        return EXIT_FAIL
    record = {"kind": "typed", "type": format_type(result.type), "new_shapes": len(result.new_shapes)}
    text = f"type: {format_type(result.type)}\nnew shapes: {len(result.new_shapes)}"
    if args.emit_elaborated:
        record["elaborated"] = format_term(result.term)
        text += f"\nelaborated: {format_term(result.term)}"
    out.emit(record, text)
    return EXIT_OK


def cmd_run(args, out: _Output) -> int:
    shapes, term = _load_program(args)
    g = parse_graph(_read(args.graph))
    if not args.no_validate:
        try:
            compute_faithful_assignment(shapes, g)
        except StratificationError as exc:
            out.emit({"kind": "stratification", "cycle": exc.cycle}, f"error: {exc}", error=True)
            return EXIT_STRATIFICATION
        except ValidationFailure as failure:
            _report_violations(out, failure)
            return EXIT_NONCONFORMANT
    if not args.unchecked:
        try:
            term = typecheck(shapes, term).term
        except TypeCheckError as exc:
            _emit_type_error(out, exc)
            return EXIT_ILL_TYPED
    fuel = args.fuel if args.fuel is not None else default_fuel()
    outcome = evaluate(term, g, fuel)
    if outcome.kind == "value":
        out.emit({"kind": "value", "value": format_term(outcome.term), "steps": outcome.steps},
                 format_term(outcome.term))
        return EXIT_OK
    if outcome.kind == "stuck":
        out.emit({"kind": "stuck", "reason": outcome.reason, "term": format_term(outcome.term)},
                 f"stuck ({outcome.reason}): {format_term(outcome.term)}", error=True)
        return EXIT_FAIL
    out.emit({"kind": "out-of-fuel", "steps": outcome.steps},
             f"out of fuel after {outcome.steps} steps", error=True)
    return EXIT_FUEL


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("fuel must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tycus", description="Shape-typed programs over RDF graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--machine", action="store_true", help="print one JSON record per line")
        return p

    p = add("validate", "validate a graph against shapes")
    p.add_argument("--graph", required=True)
    p.add_argument("--shapes", required=True)
    p.set_defaults(handler=cmd_validate)

    p = add("infer", "infer shapes from a query")
    p.add_argument("--query", required=True)
    p.add_argument("--id", default="q", help="query id used in shape names (default: q)")
    p.set_defaults(handler=cmd_infer)

    p = add("check", "type-check a program")
    p.add_argument("--shapes")
    p.add_argument("--program", required=True)
    p.add_argument("--emit-elaborated", action="store_true")
    p.set_defaults(handler=cmd_check)

    p = add("run", "evaluate a program against a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--shapes")
    p.add_argument("--program", required=True)
    p.add_argument("--fuel", type=_positive, help="step budget (default: $TYCUS_FUEL or 1000000)")
    p.add_argument("--unchecked", action="store_true", help="skip type checking")
    p.add_argument("--no-validate", action="store_true", help="skip graph validation")
    p.set_defaults(handler=cmd_run)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Output(args.machine, stdout or sys.stdout, stderr or sys.stderr)
    try:
        return args.handler(args, out)
    except (ParseError, GraphSyntaxError, ShapeError) as exc:
        out.emit({"kind": "parse-error", "message": str(exc), "line": getattr(exc, "line", 0)},
                 f"parse error: {exc}", error=True)
        return EXIT_PARSE
    except OSError as exc:
        out.emit({"kind": "io-error", "message": str(exc)}, f"error: {exc}", error=True)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

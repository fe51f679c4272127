"""SHACL in its logical abstraction: constraints, assignments and validation.

Constraints are built from ``Top``, ``ShapeRef``, ``Const``, ``And``, ``Not``
and qualified ``AtLeast``; ``at_most``, ``exactly`` and ``Or`` are sugar
that expands into those forms immediately.

Shape file syntax::

    shape StudentShape
      target (x) <- x type Student
      constraint >=1 studiesAt . ref UniversityShape and >=1 type . node Person

Constraint operators, loosest first: ``or``, ``and``, then the prefix forms
``not φ``, ``>=n r . φ``, ``<=n r . φ`` and ``=n r . φ``. Atoms are ``top``,
``ref <shape>``, ``node <node>`` and parenthesised constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import networkx as nx

from .pcq import (
    Pcq, PathExpr, QueryParser, eval_path, eval_query, format_path,
)
from .rdf import Blank, Iri, Literal, Node, RdfGraph, format_node
from .syntax import ParseError, unescape_string

__all__ = [
    "Top", "ShapeRef", "Const", "And", "Not", "AtLeast", "Constraint",
    "Or", "at_most", "exactly", "conj", "conjuncts", "format_constraint",
    "shape_refs", "is_negation_free",
    "Shape", "ShapeError", "parse_shapes", "parse_constraint", "format_shape", "format_shapes",
    "Assignment", "InverseAssignment", "invert", "eval_constraint", "ConstraintEvaluator",
    "Violation", "ValidationFailure", "StratificationError",
    "compute_faithful_assignment", "faithfulness_violations", "target_nodes",
]


@dataclass(frozen=True)
class Top:
    pass


TOP = Top()


@dataclass(frozen=True)
class ShapeRef:
    name: str


@dataclass(frozen=True)
class Const:
    node: Node


@dataclass(frozen=True)
class And:
    left: "Constraint"
    right: "Constraint"


@dataclass(frozen=True)
class Not:
    body: "Constraint"


@dataclass(frozen=True)
class AtLeast:
    n: int
    path: PathExpr
    body: "Constraint"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qualified minimum cardinality must be >= 1, got {self.n}")


Constraint = Union[Top, ShapeRef, Const, And, Not, AtLeast]


def Or(left: Constraint, right: Constraint) -> Constraint:
    return Not(And(Not(left), Not(right)))


def at_most(n: int, path: PathExpr, body: Constraint) -> Constraint:
    return Not(AtLeast(n + 1, path, body))


def exactly(n: int, path: PathExpr, body: Constraint) -> Constraint:
    return And(at_most(n, path, body), AtLeast(n, path, body))


def conjuncts(phi: Constraint) -> tuple:
    """Flatten nested conjunctions; ``Top`` conjuncts disappear."""
    if isinstance(phi, And):
        return conjuncts(phi.left) + conjuncts(phi.right)
    if isinstance(phi, Top):
        return ()
    return (phi,)


def conj(parts: Iterable[Constraint], *, normalize=True) -> Constraint:
    """Right-nested conjunction; with ``normalize`` the conjuncts are deduplicated and sorted."""
    flat = [c for p in parts for c in conjuncts(p)]
    if normalize:
        flat = sorted(set(flat), key=format_constraint)
    if not flat:
        return TOP
    result = flat[-1]
    for c in reversed(flat[:-1]):
        result = And(c, result)
    return result


def shape_refs(phi: Constraint, negated=False):
    """Yield ``(shape name, occurs under an odd number of negations)``."""
    if isinstance(phi, ShapeRef):
        yield phi.name, negated
    elif isinstance(phi, And):
        yield from shape_refs(phi.left, negated)
        yield from shape_refs(phi.right, negated)
    elif isinstance(phi, Not):
        yield from shape_refs(phi.body, not negated)
    elif isinstance(phi, AtLeast):
        yield from shape_refs(phi.body, negated)


def is_negation_free(phi: Constraint) -> bool:
    if isinstance(phi, Not):
        return False
    if isinstance(phi, And):
        return is_negation_free(phi.left) and is_negation_free(phi.right)
    if isinstance(phi, AtLeast):
        return is_negation_free(phi.body)
    return True


def _or_parts(phi):
    if isinstance(phi, Not) and isinstance(phi.body, And):
        a, b = phi.body.left, phi.body.right
        if isinstance(a, Not) and isinstance(b, Not):
            return a.body, b.body
    return None


def format_constraint(phi: Constraint, prec: int = 0) -> str:
    if isinstance(phi, Top):
        return "top"
    if isinstance(phi, ShapeRef):
        return f"ref {phi.name}"
    if isinstance(phi, Const):
        return f"node {format_node(phi.node)}"
    parts = _or_parts(phi)
    if parts is not None:
        text = f"{format_constraint(parts[0], 2)} or {format_constraint(parts[1], 1)}"
        return f"({text})" if prec > 1 else text
    if isinstance(phi, And):
        text = f"{format_constraint(phi.left, 3)} and {format_constraint(phi.right, 2)}"
        return f"({text})" if prec > 2 else text
    if isinstance(phi, Not):
        if isinstance(phi.body, AtLeast):
            a = phi.body
            return f"<={a.n - 1} {format_path(a.path)} . {format_constraint(a.body, 3)}"
        return f"not {format_constraint(phi.body, 3)}"
    if isinstance(phi, AtLeast):
        return f">={phi.n} {format_path(phi.path)} . {format_constraint(phi.body, 3)}"
    raise TypeError(f"not a constraint: {phi!r}")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Shape:
    name: str
    constraint: Constraint
    target: Pcq | None = None

    def __post_init__(self):
        if not self.name:
            raise ShapeError("shape name must be non-empty")
        if self.target is not None and len(self.target.head) != 1:
            raise ShapeError(f"target of shape {self.name} must have exactly one answer variable")


def format_shape(shape: Shape) -> str:
    lines = [f"shape {shape.name}"]
    if shape.target is not None:
        lines.append(f"  target {shape.target}")
    lines.append(f"  constraint {format_constraint(shape.constraint)}")
    return "\n".join(lines)


def format_shapes(shapes: Iterable[Shape]) -> str:
    return "\n".join(format_shape(s) + "\n" for s in shapes)


# -- parsing -----------------------------------------------------------------


class ShapeParser(QueryParser):
    def parse_constraint(self) -> Constraint:
        left = self._conj()
        if self.at_keyword("or") or self.at("∨") or self.at("|"):
            self.next()
            return Or(left, self.parse_constraint())
        return left

    def _conj(self) -> Constraint:
        left = self._unary()
        if self.at_keyword("and") or self.at("and"):
            self.next()
            return And(left, self._conj())
        return left

    def _count(self) -> int:
        tok = self.expect("number")
        if "." in tok.value:
            self.error("cardinality must be an integer", tok)
        return int(tok.value)

    def _qualified(self):
        n = self._count()
        path = self.parse_path()
        self.expect(".")
        return n, path, self._unary()

    def _unary(self) -> Constraint:
        tok = self.peek()
        if self.at_keyword("not") or self.accept("¬"):
            if tok.kind == "ident":
                self.next()
            return Not(self._unary())
        if self.accept("ge"):
            n, path, body = self._qualified()
            if n < 1:
                self.error(">= needs a positive cardinality", tok)
            return AtLeast(n, path, body)
        if self.accept("le"):
            return at_most(*self._qualified())
        if self.accept("="):
            n, path, body = self._qualified()
            if n < 1:
                return at_most(0, path, body)
            return exactly(n, path, body)
        return self._atom()

    def _atom(self) -> Constraint:
        tok = self.peek()
        if self.accept("("):
            phi = self.parse_constraint()
            self.expect(")")
            return phi
        if self.accept("⊤") or self.at_keyword("top"):
            if tok.kind == "ident":
                self.next()
            return TOP
        if self.at_keyword("ref"):
            self.next()
            return ShapeRef(self.expect("ident").value)
        if self.at_keyword("node"):
            self.next()
            return Const(self.parse_node())
        self.error(f"expected a constraint, found {tok.value or tok.kind!r}")

    def parse_node(self) -> Node:
        tok = self.next()
        if tok.kind == "ident":
            return Iri(tok.value)
        if tok.kind == "iri":
            return Iri(tok.value[1:-1])
        if tok.kind == "blank":
            return Blank(tok.value[2:])
        if tok.kind == "string":
            return Literal(unescape_string(tok.value))
        if tok.kind == "number":
            return Literal(tok.value)
        self.error(f"expected a node, found {tok.value or tok.kind!r}", tok)

    def parse_shape(self) -> Shape:
        start = self.expect_keyword("shape")
        name = self.expect("ident").value
        target = None
        if self.at_keyword("target"):
            self.next()
            target = self.parse_query()
            if len(target.head) != 1:
                raise ParseError(f"target of shape {name} must have exactly one answer variable",
                                 start.line, start.col)
        self.expect_keyword("constraint")
        phi = self.parse_constraint()
        self.accept(";")
        return Shape(name, phi, target)

    def parse_shape_block(self, known: Iterable[str] = ()) -> list[Shape]:
        shapes: list[Shape] = []
        seen: dict[str, Shape] = {}
        positions = []
        while self.at_keyword("shape"):
            positions.append(self.peek())
            shape = self.parse_shape()
            if shape.name in seen:
                raise ParseError(f"duplicate shape name {shape.name!r}", positions[-1].line, positions[-1].col)
            seen[shape.name] = shape
            shapes.append(shape)
        defined = set(seen) | set(known)
        for shape, tok in zip(shapes, positions):
            for ref, _ in shape_refs(shape.constraint):
                if ref not in defined:
                    raise ParseError(f"shape {shape.name} references undefined shape {ref!r}", tok.line, tok.col)
        return shapes


def parse_shapes(text: str, known: Iterable[str] = ()) -> list[Shape]:
    """Parse a shape file; ``known`` names may be referenced without being declared."""
    parser = ShapeParser(text)
    shapes = parser.parse_shape_block(known)
    parser.expect_eof()
    return shapes


def parse_constraint(text: str) -> Constraint:
    parser = ShapeParser(text)
    phi = parser.parse_constraint()
    parser.expect_eof()
    return phi


# -- assignments -------------------------------------------------------------


class Assignment:
    """A total assignment over ``nodes`` x ``shape_names``.

    Only the positive entries are stored; every other (node, shape) pair
    is read as the negated shape name.
    """

    def __init__(self, nodes: Iterable[Node], shape_names: Iterable[str], positive=None):
        self.nodes = frozenset(nodes)
        self.shape_names = frozenset(shape_names)
        members = {s: frozenset() for s in self.shape_names}
        for s, vs in (positive or {}).items():
            if s not in members:
                raise KeyError(f"unknown shape name {s!r}")
            vs = frozenset(vs)
            stray = vs - self.nodes
            if stray:
                raise KeyError(f"nodes {sorted(map(str, stray))} outside the assignment domain")
            members[s] = vs
        self._members = members

    def has(self, node: Node, shape: str) -> bool:
        return node in self._members.get(shape, ())

    def __call__(self, node: Node) -> frozenset:
        """Positive shape names of ``node``."""
        return frozenset(s for s, vs in self._members.items() if node in vs)

    def signed(self, node: Node) -> frozenset:
        return frozenset(s if self.has(node, s) else f"¬{s}" for s in self.shape_names)

    def members(self, shape: str) -> frozenset:
        return self._members[shape]

    def flip(self, node: Node, shape: str) -> "Assignment":
        members = dict(self._members)
        members[shape] = members[shape] ^ {node}
        return Assignment(self.nodes, self.shape_names, members)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return (self.nodes, self.shape_names, self._members) == (other.nodes, other.shape_names, other._members)

    def __hash__(self):
        return hash((self.nodes, frozenset(self._members.items())))

    def __repr__(self):
        parts = []
        for s in sorted(self._members):
            inner = ", ".join(sorted(format_node(v) for v in self._members[s]))
            parts.append(f"{s}: {{{inner}}}")
        return "Assignment(" + "; ".join(parts) + ")"


@dataclass(frozen=True)
class InverseAssignment:
    """Shape name -> nodes view of an assignment."""

    nodes: frozenset
    members: dict = field(hash=False)

    def __call__(self, shape: str) -> frozenset:
        return self.members[shape]


def invert(sigma):
    """Switch between the node-indexed and the shape-indexed view."""
    if isinstance(sigma, Assignment):
        return InverseAssignment(sigma.nodes, {s: sigma.members(s) for s in sigma.shape_names})
    return Assignment(sigma.nodes, sigma.members, sigma.members)


# -- evaluation --------------------------------------------------------------


class ConstraintEvaluator:
    """Evaluates constraints on one graph, caching successor sets per path."""

    def __init__(self, g: RdfGraph):
        self.graph = g
        self._paths: dict = {}
        self._succ: dict = {}

    def successors(self, path: PathExpr, node: Node) -> frozenset:
        table = self._succ.get(path)
        if table is None:
            table = {}
            for a, b in eval_path(path, self.graph, self._paths):
                table.setdefault(a, set()).add(b)
            table = {a: frozenset(bs) for a, bs in table.items()}
            self._succ[path] = table
        return table.get(node, frozenset())

    def holds(self, phi: Constraint, node: Node, sigma) -> bool:
        if isinstance(phi, Top):
            return True
        if isinstance(phi, ShapeRef):
            return sigma.has(node, phi.name)
        if isinstance(phi, Const):
            return node == phi.node
        if isinstance(phi, And):
            return self.holds(phi.left, node, sigma) and self.holds(phi.right, node, sigma)
        if isinstance(phi, Not):
            return not self.holds(phi.body, node, sigma)
        if isinstance(phi, AtLeast):
            count = 0
            for succ in self.successors(phi.path, node):
                if self.holds(phi.body, succ, sigma):
                    count += 1
                    if count >= phi.n:
                        return True
            return False
        raise TypeError(f"not a constraint: {phi!r}")


def eval_constraint(phi: Constraint, node: Node, g: RdfGraph, sigma: Assignment) -> bool:
    return ConstraintEvaluator(g).holds(phi, node, sigma)


def target_nodes(shape: Shape, g: RdfGraph) -> frozenset:
    if shape.target is None:
        return frozenset()
    x = shape.target.head[0]
    return frozenset(m[x] for m in eval_query(shape.target, g))


@dataclass(frozen=True)
class Violation:
    shape: str
    node: Node
    conjunct: Constraint | None = None
    condition: str = "target"

    def __str__(self):
        what = f": violates {format_constraint(self.conjunct)}" if self.conjunct is not None else ""
        return f"{format_node(self.node)} does not conform to {self.shape} ({self.condition}){what}"


class ValidationFailure(Exception):
    def __init__(self, violations, assignment=None):
        self.violations = list(violations)
        self.assignment = assignment
        super().__init__("; ".join(str(v) for v in self.violations))


class StratificationError(Exception):
    def __init__(self, cycle):
        self.cycle = sorted(cycle)
        super().__init__("shape references cycle through negation: " + ", ".join(self.cycle))


def _strata(index: dict) -> list[list[str]]:
    graph = nx.DiGraph()
    graph.add_nodes_from(index)
    negative = set()
    for s, shape in index.items():
        for ref, neg in shape_refs(shape.constraint):
            if ref not in index:
                raise ShapeError(f"shape {s} references undefined shape {ref!r}")
            graph.add_edge(s, ref)
            if neg:
                negative.add((s, ref))
    condensed = nx.condensation(graph)
    for comp in condensed.nodes:
        members = condensed.nodes[comp]["members"]
        if any((a, b) in negative for a in members for b in members if graph.has_edge(a, b)):
            raise StratificationError(members)
    # dependencies first: edges point from a shape to the shapes it references
    order = list(reversed(list(nx.topological_sort(condensed))))
    return [sorted(condensed.nodes[c]["members"]) for c in order]


def _first_failing_conjunct(ev, phi, node, sigma):
    for c in conjuncts(phi):
        if not ev.holds(c, node, sigma):
            return c
    return phi


def compute_faithful_assignment(shapes: Iterable[Shape], g: RdfGraph) -> Assignment:
    """Validate ``g`` against ``shapes`` and return a faithful assignment.

    Shapes are processed stratum by stratum. Inside a stratum the least
    fixpoint above the target nodes is tried first; if a target node fails
    there, the greatest fixpoint decides whether any faithful choice exists.
    A lower stratum settled on its least fixpoint may still starve a higher
    one, so on failure a second pass takes greatest fixpoints throughout.

    Raises ``StratificationError`` for reference cycles through negation and
    ``ValidationFailure`` when no faithful assignment is found.
    """
    index = {s.name: s for s in shapes}
    strata = _strata(index)
    ev = ConstraintEvaluator(g)
    sigma, violations = _fixpoint_pass(index, strata, g, ev, prefer_least=True)
    if not violations:
        return sigma
    retry, still = _fixpoint_pass(index, strata, g, ev, prefer_least=False)
    if not still:
        return retry
    raise ValidationFailure(violations, sigma)


def _fixpoint_pass(index, strata, g, ev, prefer_least):
    graph_nodes = g.nodes
    members: dict[str, frozenset] = {s: frozenset() for s in index}
    violations = []

    def current():
        return Assignment(graph_nodes, index, members)

    for stratum in strata:
        seeds = {s: target_nodes(index[s], g) for s in stratum}

        def iterate(start):
            state = dict(start)
            while True:
                members.update(state)
                sigma = current()
                new = {
                    s: seeds[s] | frozenset(v for v in graph_nodes if ev.holds(index[s].constraint, v, sigma))
                    for s in stratum
                }
                if new == state:
                    return state
                state = new

        def failing(state):
            members.update(state)
            sigma = current()
            return [(s, v) for s in stratum for v in sorted(seeds[s], key=str)
                    if not ev.holds(index[s].constraint, v, sigma)]

        greatest_start = {s: graph_nodes for s in stratum}
        first = iterate(seeds if prefer_least else greatest_start)
        bad = failing(first)
        if bad:
            if prefer_least:
                greatest = iterate(greatest_start)
                if not failing(greatest):
                    continue
            members.update(first)
            sigma = current()
            for s, v in bad:
                violations.append(Violation(s, v, _first_failing_conjunct(ev, index[s].constraint, v, sigma)))
    return current(), violations


def faithfulness_violations(shapes: Iterable[Shape], g: RdfGraph, sigma: Assignment) -> list[Violation]:
    """Every (shape, node) pair breaking one of the three faithfulness conditions."""
    ev = ConstraintEvaluator(g)
    found = []
    for shape in shapes:
        for v in target_nodes(shape, g):
            if not sigma.has(v, shape.name):
                found.append(Violation(shape.name, v, None, "target"))
        for v in g.nodes:
            holds = ev.holds(shape.constraint, v, sigma)
            if sigma.has(v, shape.name) and not holds:
                found.append(Violation(shape.name, v, shape.constraint, "assigned but constraint false"))
            elif not sigma.has(v, shape.name) and holds:
                found.append(Violation(shape.name, v, shape.constraint, "unassigned but constraint true"))
    return found

"""Infer one shape per query variable from a path conjunctive query.

Each pattern contributes an existential constraint for the variables it
mentions; conjunctions merge the per-pattern shape sets with a full outer
join on shape names. The shape for variable ``x`` of query ``q`` is named
``<query id>$x`` and targets ``q`` projected onto ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .pcq import ObjVar, Pattern, Pcq, SubjVar, inverse
from .rdf import RdfGraph
from .shacl import AtLeast, Assignment, Const, Shape, ShapeRef, conj, target_nodes

__all__ = [
    "InferredShapeSet", "shape_name", "infer_pattern", "shape_join", "infer_shapes",
    "retarget", "construct_query_assignment",
]


def shape_name(query_id: str, var: str) -> str:
    return f"{query_id}${var}"


@dataclass(frozen=True)
class InferredShapeSet:
    shapes: tuple[Shape, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.shapes, key=lambda s: s.name))
        names = [s.name for s in ordered]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate shape names in {names}")
        object.__setattr__(self, "shapes", ordered)

    def __iter__(self) -> Iterator[Shape]:
        return iter(self.shapes)

    def __len__(self):
        return len(self.shapes)

    def __getitem__(self, name: str) -> Shape:
        for s in self.shapes:
            if s.name == name:
                return s
        raise KeyError(name)

    def names(self) -> list[str]:
        return [s.name for s in self.shapes]


def _dedup(patterns: Iterable[Pattern]) -> tuple[Pattern, ...]:
    return tuple(dict.fromkeys(patterns))


def infer_pattern(p: Pattern, query_id: str) -> InferredShapeSet:
    """Shapes for a single pattern, each targeting ``(x) <- p``."""
    if isinstance(p, SubjVar):
        entries = [(p.var, AtLeast(1, p.path, Const(p.node)))]
    elif isinstance(p, ObjVar):
        entries = [(p.var, AtLeast(1, inverse(p.path), Const(p.node)))]
    elif p.subject == p.object:
        s = ShapeRef(shape_name(query_id, p.subject))
        entries = [(p.subject, conj([AtLeast(1, p.path, s), AtLeast(1, inverse(p.path), s)]))]
    else:
        entries = [
            (p.subject, AtLeast(1, p.path, ShapeRef(shape_name(query_id, p.object)))),
            (p.object, AtLeast(1, inverse(p.path), ShapeRef(shape_name(query_id, p.subject)))),
        ]
    return InferredShapeSet(tuple(
        Shape(shape_name(query_id, x), conj([phi]), Pcq((x,), (p,))) for x, phi in entries
    ))


def shape_join(a: InferredShapeSet, b: InferredShapeSet) -> InferredShapeSet:
    """Full outer join on shape names.

    Shared names get the conjunction of both constraints and a target over
    both bodies; names present on one side only are carried over unchanged.
    """
    right = {s.name: s for s in b}
    joined = []
    for s in a:
        other = right.pop(s.name, None)
        if other is None:
            joined.append(s)
            continue
        body = _dedup(s.target.body + other.target.body)
        joined.append(Shape(s.name, conj([s.constraint, other.constraint]), Pcq(s.target.head, body)))
    joined.extend(right.values())
    return InferredShapeSet(tuple(joined))


def retarget(shapes: InferredShapeSet, q: Pcq) -> InferredShapeSet:
    """Point every shape's target at ``q`` projected onto the shape's variable."""
    return InferredShapeSet(tuple(
        Shape(s.name, s.constraint, Pcq(s.target.head, q.body)) for s in shapes
    ))


def infer_shapes(q: Pcq, query_id: str) -> InferredShapeSet:
    result = InferredShapeSet()
    for p in q.body:
        result = shape_join(result, infer_pattern(p, query_id))
    # projection keeps the body's shapes; targets range over the whole body
    return retarget(result, q)


def construct_query_assignment(inferred: InferredShapeSet, g: RdfGraph) -> Assignment:
    """Assign every inferred shape to exactly the answers of its target query."""
    return Assignment(g.nodes, inferred.names(), {s.name: target_nodes(s, g) for s in inferred})

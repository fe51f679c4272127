"""Sound, incomplete shape subsumption and structural subtyping.

``s1 <: s2`` is decided by showing that any node carrying ``s1`` in a
faithful assignment must also satisfy ``φ_s2`` (and hence carry ``s2``).
The prover works on saturated premise sets: conjunctions are split,
shape references are unfolded into their constraints, and a shape whose
target is a tree-shaped query is added whenever the premises already
imply membership in that target. Every failure to find a proof is
reported as ``False``; nothing is guessed.

A ``world`` (any object with ``has(node, shape)`` and ``__call__(node)``
like :class:`~tycus.shacl.Assignment`) adds the facts of one concrete
faithful assignment: a premise ``node v`` then implies every shape that
``v`` carries.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .pcq import Inverse, ObjVar, Pcq, Plus, Seq, SubjVar, TwoVars, inverse
from .shacl import TOP, And, AtLeast, Const, Constraint, Not, Shape, ShapeRef, Top, conj, conjuncts
from .terms import BoolT, Func, ListT, RecordT, ShapeT, Type

__all__ = ["ShapeReasoner", "target_formula", "path_leq", "shape_subsumes", "subtype"]

_MAX_DEPTH = 12


def path_leq(a, b) -> bool:
    """Syntactic path inclusion: ``a(G) ⊆ b(G)`` on every graph."""
    if a == b:
        return True
    if isinstance(b, Plus):
        if path_leq(a, b.path):
            return True
        if isinstance(a, Plus) and path_leq(a.path, b.path):
            return True
    if isinstance(a, Inverse) and isinstance(b, Inverse):
        return path_leq(a.path, b.path)
    if isinstance(a, Seq) and isinstance(b, Seq):
        return path_leq(a.first, b.first) and path_leq(a.second, b.second)
    return False


def target_formula(q: Pcq):
    """A constraint equivalent to membership in a tree-shaped unary query.

    Returns None unless the variable graph of the body is a tree with no
    self-loops; only then does the constraint imply the target.
    """
    if len(q.head) != 1:
        return None
    body = tuple(dict.fromkeys(q.body))
    variables = q.vars
    edges = [p for p in body if isinstance(p, TwoVars)]
    if any(p.subject == p.object for p in edges):
        return None
    if len(edges) != len(variables) - 1:
        return None
    adjacency: dict = {v: [] for v in variables}
    for p in body:
        if isinstance(p, TwoVars):
            adjacency[p.subject].append(p)
            adjacency[p.object].append(p)
        else:
            adjacency[p.var].append(p)
    seen = set()

    def build(x, via):
        seen.add(x)
        parts = []
        for p in adjacency[x]:
            if p is via:
                continue
            if isinstance(p, SubjVar):
                parts.append(AtLeast(1, p.path, Const(p.node)))
            elif isinstance(p, ObjVar):
                parts.append(AtLeast(1, inverse(p.path), Const(p.node)))
            elif p.subject == x:
                if p.object in seen:
                    raise _NotATree
                parts.append(AtLeast(1, p.path, build(p.object, p)))
            else:
                if p.subject in seen:
                    raise _NotATree
                parts.append(AtLeast(1, inverse(p.path), build(p.subject, p)))
        return conj(parts)

    try:
        phi = build(q.head[0], None)
    except _NotATree:
        return None
    if seen != set(variables):
        return None
    return phi


class _NotATree(Exception):
    pass


def _negate(c: Constraint) -> Constraint:
    return c.body if isinstance(c, Not) else Not(c)


class ShapeReasoner:
    """Entailment between constraints relative to a shape set."""

    def __init__(self, shapes: Iterable[Shape] | Mapping[str, Shape], world=None, max_depth=_MAX_DEPTH):
        if isinstance(shapes, Mapping):
            self.shapes = dict(shapes)
        else:
            self.shapes = {s.name: s for s in shapes}
        self.world = world
        self.max_depth = max_depth
        self._targets: dict = {}
        self._memo: dict = {}
        self._saturating: set = set()

    def add(self, shapes: Iterable[Shape]):
        for s in shapes:
            self.shapes[s.name] = s
        self._memo.clear()

    def _target_formulas(self):
        out = []
        for name, s in self.shapes.items():
            if s.target is None:
                continue
            if name not in self._targets:
                self._targets[name] = target_formula(s.target)
            if self._targets[name] is not None:
                out.append((name, self._targets[name]))
        return out

    # -- premises ----------------------------------------------------------

    def saturate(self, premises: Iterable[Constraint], depth=0) -> frozenset:
        facts: set = set()
        pending = list(premises)

        def absorb():
            while pending:
                c = pending.pop()
                if isinstance(c, Top) or c in facts:
                    continue
                if isinstance(c, And):
                    pending.extend((c.left, c.right))
                    continue
                if isinstance(c, Not) and isinstance(c.body, Not):
                    pending.append(c.body.body)
                    continue
                facts.add(c)
                if isinstance(c, ShapeRef) and c.name in self.shapes:
                    pending.append(self.shapes[c.name].constraint)
                elif isinstance(c, Not) and isinstance(c.body, ShapeRef) and c.body.name in self.shapes:
                    pending.append(_negate(self.shapes[c.body.name].constraint))
                elif isinstance(c, Const) and self.world is not None:
                    for s in self.world(c.node):
                        if s in self.shapes:
                            pending.append(ShapeRef(s))

        absorb()
        key = frozenset(facts)
        if key in self._saturating or depth > self.max_depth:
            return key
        self._saturating.add(key)
        try:
            changed = True
            while changed:
                changed = False
                for name, phi in self._target_formulas():
                    if ShapeRef(name) in facts:
                        continue
                    if self._entails(frozenset(facts), phi, depth + 1, ()):
                        pending.append(ShapeRef(name))
                        absorb()
                        changed = True
        finally:
            self._saturating.discard(key)
        return frozenset(facts)

    # -- goals -------------------------------------------------------------

    def entails(self, premises: Iterable[Constraint], goal: Constraint) -> bool:
        return self._entails(self.saturate(premises), goal, 0, ())

    def _entails(self, facts: frozenset, goal: Constraint, depth: int, unfolding: tuple) -> bool:
        if depth > self.max_depth:
            return False
        key = (facts, goal, unfolding)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        result = self._prove(facts, goal, depth, unfolding)
        self._memo[key] = result
        return result

    def _inconsistent(self, facts: frozenset) -> bool:
        if Not(TOP) in facts:
            return True
        consts = {c.node for c in facts if isinstance(c, Const)}
        if len(consts) > 1:
            return True
        return any(Not(c) in facts for c in facts)

    def _prove(self, facts, goal, depth, unfolding) -> bool:
        if isinstance(goal, Top):
            return True
        if isinstance(goal, And):
            return all(self._entails(facts, c, depth, unfolding) for c in conjuncts(goal))
        if goal in facts or self._inconsistent(facts):
            return True
        if isinstance(goal, ShapeRef):
            shape = self.shapes.get(goal.name)
            if shape is not None and goal.name not in unfolding:
                # the constraint forces membership; cycles are not assumed to hold
                if self._entails(facts, shape.constraint, depth + 1, unfolding + (goal.name,)):
                    return True
        elif isinstance(goal, AtLeast):
            for c in facts:
                if isinstance(c, AtLeast) and c.n >= goal.n and path_leq(c.path, goal.path):
                    inner = self.saturate([c.body], depth + 1)
                    if self._entails(inner, goal.body, depth + 1, ()):
                        return True
        elif isinstance(goal, Not):
            if self._prove_negation(facts, goal.body, depth, unfolding):
                return True
        return self._case_split(facts, goal, depth, unfolding)

    def _prove_negation(self, facts, g, depth, unfolding) -> bool:
        if isinstance(g, Const):
            if any(isinstance(c, Const) and c.node != g.node for c in facts):
                return True
        negative = [c.body for c in facts if isinstance(c, Not) and c.body != g]
        if negative:
            # adding g to the premises would force some p while not p holds
            extended = self.saturate(list(facts) + [g], depth + 1)
            if self._inconsistent(extended):
                return True
            if any(self._entails(extended, p, depth + 1, ()) for p in negative):
                return True
        parts = conjuncts(g)
        if len(parts) >= 2:
            # not (a and b) follows from not a or from not b
            if any(self._entails(facts, _negate(p), depth + 1, unfolding) for p in parts):
                return True
        if isinstance(g, ShapeRef) and g.name in self.shapes and g.name not in unfolding:
            shape = self.shapes[g.name]
            if self._entails(facts, _negate(shape.constraint), depth + 1, unfolding + (g.name,)):
                return True
        return False

    def _case_split(self, facts, goal, depth, unfolding) -> bool:
        if depth > self.max_depth // 2:
            return False
        for c in sorted(facts, key=repr):
            if isinstance(c, Not) and len(conjuncts(c.body)) >= 2:
                rest = facts - {c}
                cases = [self.saturate(list(rest) + [_negate(p)], depth + 1) for p in conjuncts(c.body)]
                return all(self._entails(case, goal, depth + 1, unfolding) for case in cases)
        return False

    # -- public ------------------------------------------------------------

    def subsumes(self, s1: str, s2: str) -> bool:
        if s1 == s2:
            return True
        if s1 not in self.shapes or s2 not in self.shapes:
            return False
        return self.entails([ShapeRef(s1)], ShapeRef(s2))

    def shape_entails(self, s: str, goal: Constraint) -> bool:
        return self.entails([ShapeRef(s)], goal)

    def exactly_one(self, s: str, path) -> bool:
        """Every node carrying ``s`` has exactly one ``path`` successor."""
        return self.shape_entails(s, AtLeast(1, path, TOP)) and self.shape_entails(s, Not(AtLeast(2, path, TOP)))

    def subtype(self, t1: Type, t2: Type) -> bool:
        if t1 == t2:
            return True
        if isinstance(t1, BoolT) or isinstance(t2, BoolT):
            return isinstance(t1, BoolT) and isinstance(t2, BoolT)
        if isinstance(t1, ShapeT) and isinstance(t2, ShapeT):
            return self.subsumes(t1.name, t2.name)
        if isinstance(t1, ListT) and isinstance(t2, ListT):
            return self.subtype(t1.elem, t2.elem)
        if isinstance(t1, Func) and isinstance(t2, Func):
            return self.subtype(t2.arg, t1.arg) and self.subtype(t1.result, t2.result)
        if isinstance(t1, RecordT) and isinstance(t2, RecordT):
            for label, ft in t2.fields:
                mine = t1.get(label)
                if mine is None or not self.subtype(mine, ft):
                    return False
            return True
        return False


def shape_subsumes(shapes, s1: str, s2: str, world=None) -> bool:
    return ShapeReasoner(shapes, world).subsumes(s1, s2)


def subtype(shapes, t1: Type, t2: Type, world=None) -> bool:
    return ShapeReasoner(shapes, world).subtype(t1, t2)

"""Search for graphs and faithful assignments that separate two shapes.

Every graph over a fixed node vocabulary and predicate set is encoded at
once: one boolean per possible triple and one per (shape, node) pair. The
solver looks for a graph, a faithful assignment and a node carrying ``s1``
but not ``s2``; ``unsat`` means no such graph exists within the bounds.
"""

import itertools

import z3

from tycus.pcq import Inverse, ObjVar, Plus, Seq, SubjVar
from tycus.rdf import Iri
from tycus.shacl import And, AtLeast, Const, Not, ShapeRef, Top


class Refuter:
    def __init__(self, nodes, predicates):
        self.nodes = list(nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        self.predicates = list(predicates)
        n = len(self.nodes)
        self.edge = {
            p: [[z3.Bool(f"e_{p}_{i}_{j}") for j in range(n)] for i in range(n)] for p in self.predicates
        }
        # a vocabulary node belongs to the graph when some triple mentions it
        self.present = [
            z3.Or([self.edge[p][i][j] for p in self.predicates for j in range(n)]
                  + [self.edge[p][j][i] for p in self.predicates for j in range(n)])
            for i in range(n)
        ]
        self._paths = {}

    def relation(self, r):
        if r in self._paths:
            return self._paths[r]
        n = len(self.nodes)
        if isinstance(r, Iri):
            rel = self.edge[r.name] if r.name in self.edge else [[z3.BoolVal(False)] * n for _ in range(n)]
        elif isinstance(r, Inverse):
            inner = self.relation(r.path)
            rel = [[inner[j][i] for j in range(n)] for i in range(n)]
        elif isinstance(r, Seq):
            a, b = self.relation(r.first), self.relation(r.second)
            rel = [[z3.Or([z3.And(a[i][k], b[k][j]) for k in range(n)]) for j in range(n)] for i in range(n)]
        elif isinstance(r, Plus):
            step = self.relation(r.path)
            rel = step
            for _ in range(n):
                rel = [[z3.Or(rel[i][j], z3.Or([z3.And(rel[i][k], step[k][j]) for k in range(n)]))
                        for j in range(n)] for i in range(n)]
                rel = [[z3.simplify(c) for c in row] for row in rel]
        else:
            raise TypeError(r)
        self._paths[r] = rel
        return rel

    def holds(self, phi, i, sigma):
        if isinstance(phi, Top):
            return z3.BoolVal(True)
        if isinstance(phi, ShapeRef):
            return sigma[phi.name][i]
        if isinstance(phi, Const):
            return z3.BoolVal(self.index.get(phi.node) == i)
        if isinstance(phi, And):
            return z3.And(self.holds(phi.left, i, sigma), self.holds(phi.right, i, sigma))
        if isinstance(phi, Not):
            return z3.Not(self.holds(phi.body, i, sigma))
        if isinstance(phi, AtLeast):
            rel = self.relation(phi.path)
            terms = [z3.If(z3.And(rel[i][j], self.holds(phi.body, j, sigma)), 1, 0) for j in range(len(self.nodes))]
            return z3.Sum(terms) >= phi.n
        raise TypeError(phi)

    def _pattern(self, p, binding):
        if isinstance(p, SubjVar):
            return self.relation(p.path)[binding[p.var]][self.index[p.node]] if p.node in self.index else z3.BoolVal(False)
        if isinstance(p, ObjVar):
            return self.relation(p.path)[self.index[p.node]][binding[p.var]] if p.node in self.index else z3.BoolVal(False)
        return self.relation(p.path)[binding[p.subject]][binding[p.object]]

    def in_target(self, q, i):
        x = q.head[0]
        others = [v for v in q.vars if v != x]
        cases = []
        for values in itertools.product(range(len(self.nodes)), repeat=len(others)):
            binding = dict(zip(others, values))
            binding[x] = i
            cases.append(z3.And([self._pattern(p, binding) for p in q.body]))
        return z3.Or(cases)

    def separating_model(self, shapes, s1, s2, timeout_ms=20000):
        """A model with a faithful assignment where some node has s1 but not s2, or None."""
        n = len(self.nodes)
        sigma = {s.name: [z3.Bool(f"sigma_{s.name}_{i}") for i in range(n)] for s in shapes}
        solver = z3.Solver()
        solver.set("timeout", timeout_ms)
        for s in shapes:
            for i in range(n):
                solver.add(z3.Implies(z3.Not(self.present[i]), z3.Not(sigma[s.name][i])))
                solver.add(z3.Implies(self.present[i], sigma[s.name][i] == self.holds(s.constraint, i, sigma)))
                if s.target is not None:
                    solver.add(z3.Implies(self.in_target(s.target, i), sigma[s.name][i]))
        solver.add(z3.Or([z3.And(self.present[i], sigma[s1][i], z3.Not(sigma[s2][i])) for i in range(n)]))
        verdict = solver.check()
        if verdict == z3.unsat:
            return None
        if verdict == z3.sat:
            return solver.model()
        raise RuntimeError(f"solver returned {verdict}")

    def describe(self, model):
        triples = []
        for p in self.predicates:
            for i, a in enumerate(self.nodes):
                for j, b in enumerate(self.nodes):
                    if z3.is_true(model.eval(self.edge[p][i][j], model_completion=True)):
                        triples.append(f"{a} {p} {b}")
        return triples

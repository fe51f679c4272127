import random

from hypothesis import given, settings
from hypothesis import strategies as st

from generators import is_tree_query, random_graph, random_query
from oracles import constraint_holds, graph_nodes, is_faithful
from tycus.inference import (
    InferredShapeSet, construct_query_assignment, infer_pattern, infer_shapes, retarget, shape_join,
)
from tycus.pcq import Inverse, Pcq, eval_query, parse_query
from tycus.rdf import Blank, Iri, RdfGraph
from tycus.shacl import AtLeast, Const, Shape, ShapeRef, conj, conjuncts, is_negation_free

Q1 = parse_query("(x1, x2) <- x1 type Student ^ x1 studiesAt x2")
TYPE_PATTERN, STUDIES_PATTERN = Q1.body


def _normal(shapes):
    # conjunction is order-insensitive both in constraints and in target bodies
    return {(s.name, frozenset(conjuncts(s.constraint)), s.target.head, frozenset(s.target.body)) for s in shapes}


def test_subject_pattern():
    got = infer_pattern(TYPE_PATTERN, "q1")
    assert list(got) == [Shape("q1$x1", AtLeast(1, Iri("type"), Const(Iri("Student"))),
                               Pcq(("x1",), (TYPE_PATTERN,)))]


def test_two_variable_pattern():
    got = infer_pattern(STUDIES_PATTERN, "q1")
    assert got["q1$x1"].constraint == AtLeast(1, Iri("studiesAt"), ShapeRef("q1$x2"))
    assert got["q1$x2"].constraint == AtLeast(1, Inverse(Iri("studiesAt")), ShapeRef("q1$x1"))


def test_object_pattern_uses_inverse():
    q = parse_query("(y) <- alice knows y")
    got = infer_shapes(q, "q")
    assert got["q$y"].constraint == AtLeast(1, Inverse(Iri("knows")), Const(Iri("alice")))


def test_q1_shapes():
    got = infer_shapes(Q1, "q1")
    assert got.names() == ["q1$x1", "q1$x2"]
    x1, x2 = got["q1$x1"], got["q1$x2"]
    assert set(conjuncts(x1.constraint)) == {
        AtLeast(1, Iri("type"), Const(Iri("Student"))),
        AtLeast(1, Iri("studiesAt"), ShapeRef("q1$x2")),
    }
    assert x2.constraint == infer_pattern(STUDIES_PATTERN, "q1")["q1$x2"].constraint
    assert x1.target == Q1.project("x1")
    assert x2.target == Q1.project("x2")


def test_join_of_parts_is_whole_after_retarget():
    joined = shape_join(infer_pattern(TYPE_PATTERN, "q1"), infer_pattern(STUDIES_PATTERN, "q1"))
    assert _normal(retarget(joined, Q1)) == _normal(infer_shapes(Q1, "q1"))


def test_join_identity_and_disjoint_union():
    part = infer_pattern(STUDIES_PATTERN, "q1")
    assert shape_join(part, InferredShapeSet()) == part
    assert shape_join(InferredShapeSet(), part) == part
    other = infer_pattern(parse_query("(z) <- z type Person").body[0], "q1")
    assert set(shape_join(part, other)) == set(part) | set(other)


def test_join_deduplicates_bodies():
    part = infer_pattern(TYPE_PATTERN, "q1")
    twice = shape_join(part, part)
    assert twice["q1$x1"].target.body == (TYPE_PATTERN,)
    assert twice["q1$x1"].constraint == part["q1$x1"].constraint


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_join_commutative_and_associative(rng):
    _, nodes = random_graph(rng, 4)
    parts = [infer_pattern(p, "q") for p in random_query(rng, nodes, max_patterns=3).body]
    while len(parts) < 3:
        parts.append(InferredShapeSet())
    a, b, c = parts[:3]
    assert _normal(shape_join(a, b)) == _normal(shape_join(b, a))
    assert _normal(shape_join(shape_join(a, b), c)) == _normal(shape_join(a, shape_join(b, c)))


def test_query_assignment_on_g1(g1):
    sigma = construct_query_assignment(infer_shapes(Q1, "q1"), g1)
    assert sigma.members("q1$x1") == {Iri("bob")}
    assert sigma.members("q1$x2") == {Blank("b1")}
    assert sigma.nodes == g1.nodes


def test_query_assignment_single_pattern(g1):
    sigma = construct_query_assignment(infer_shapes(parse_query("(x) <- x type Student"), "q"), g1)
    assert sigma.members("q$x") == {Iri("alice"), Iri("bob")}


def test_query_assignment_on_empty_graph():
    sigma = construct_query_assignment(infer_shapes(Q1, "q1"), RdfGraph())
    assert sigma.members("q1$x1") == frozenset() and sigma.members("q1$x2") == frozenset()


def test_q1_assignment_is_faithful(g1):
    inferred = infer_shapes(Q1, "q1")
    sigma = construct_query_assignment(inferred, g1)
    assert is_faithful(list(inferred), g1, {s: sigma.members(s) for s in sigma.shape_names})


def test_inferred_constraints_are_negation_free():
    rng = random.Random(11)
    for _ in range(300):
        _, nodes = random_graph(rng, 4)
        q = random_query(rng, nodes)
        for s in infer_shapes(q, "q"):
            assert is_negation_free(s.constraint)
            assert s.target.head == (s.name.split("$")[1],)
            assert s.target.body == q.body


def test_one_shape_per_body_variable():
    rng = random.Random(12)
    for _ in range(200):
        _, nodes = random_graph(rng, 4)
        q = random_query(rng, nodes, project=True)
        assert infer_shapes(q, "q7").names() == sorted(f"q7${x}" for x in q.vars)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_answers_satisfy_inferred_constraints(rng):
    g, nodes = random_graph(rng, 6)
    q = random_query(rng, nodes)
    inferred = infer_shapes(q, "q")
    sigma = construct_query_assignment(inferred, g)
    members = {s: sigma.members(s) for s in sigma.shape_names}
    for m in eval_query(q, g):
        for x in q.vars:
            assert constraint_holds(inferred[f"q${x}"].constraint, m[x], g, members)


def _tree_instances(rng, count, max_nodes=5):
    found = 0
    while found < count:
        g, nodes = random_graph(rng, max_nodes)
        q = random_query(rng, nodes, max_patterns=3, depth=2)
        if is_tree_query(q):
            found += 1
            yield g, q


def test_tree_shaped_queries_give_faithful_and_unique_assignments():
    rng = random.Random(13)
    for g, q in _tree_instances(rng, 150):
        inferred = list(infer_shapes(q, "q"))
        sigma = construct_query_assignment(infer_shapes(q, "q"), g)
        base = {s.name: set(sigma.members(s.name)) for s in inferred}
        assert is_faithful(inferred, g, base), str(q)
        for v in graph_nodes(g):
            for s in inferred:
                flipped = {k: set(vs) for k, vs in base.items()}
                flipped[s.name] ^= {v}
                assert not is_faithful(inferred, g, flipped), (str(q), s.name, v)


def test_conjunct_normal_form_is_sorted():
    got = infer_shapes(Q1, "q1")["q1$x1"].constraint
    assert conj([got]) == got

import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from tycus.rdf import (
    Blank, GraphSyntaxError, Iri, Literal, RdfGraph, Triple, nodes, parse_graph, serialize_graph,
)


def test_single_triple():
    g = parse_graph("alice type Student .")
    assert g.triples == {Triple(Iri("alice"), Iri("type"), Iri("Student"))}


def test_empty_text_gives_empty_graph():
    assert len(parse_graph("")) == 0
    assert len(parse_graph("# only a comment\n\n")) == 0


def test_duplicate_lines_collapse():
    assert len(parse_graph("a p b .\na p b .\n")) == 1


def test_g1_listing(g1):
    assert len(g1) == 10
    assert Triple(Iri("bob"), Iri("studiesAt"), Blank("b1")) in g1
    assert Triple(Blank("b1"), Iri("locatedIn"), Blank("b2")) in g1
    assert Triple(Iri("bob"), Iri("age"), Literal("25")) in g1


def test_g1_nodes_counted_by_hand(g1):
    # subjects and objects of the ten listed triples
    expected = {
        Iri("alice"), Iri("Student"), Iri("Person"), Literal("Alice A."), Iri("bob"),
        Literal("Bob"), Literal("25"), Blank("b1"), Iri("University"), Blank("b2"),
    }
    assert nodes(g1) == expected
    assert len(nodes(g1)) == 10
    # predicates are not nodes unless they show up as subject or object
    assert Iri("type") not in nodes(g1)


def test_nodes_trivial_cases():
    assert nodes(RdfGraph()) == frozenset()
    assert nodes(parse_graph("a p b .")) == {Iri("a"), Iri("b")}


def test_predicate_counted_when_used_as_object():
    g = parse_graph("a p b .\nc q p .")
    assert Iri("p") in nodes(g)
    assert Iri("q") not in nodes(g)


def test_pairs_and_predicates(g1):
    assert g1.pairs(Iri("studiesAt")) == {(Iri("bob"), Blank("b1"))}
    assert g1.pairs(Iri("missing")) == frozenset()
    assert Iri("locatedIn") in g1.predicates


def test_node_kinds_never_equal():
    assert Iri("x") != Literal("x")
    assert Iri("x") != Blank("x")
    assert Literal("x") != Blank("x")
    assert Iri("x") == Iri("x")


def test_empty_names_rejected():
    with pytest.raises(ValueError):
        Iri("")
    with pytest.raises(ValueError):
        Blank("")


@pytest.mark.parametrize("text, line", [
    ('"lit" p o .', 1),
    ("a p b .\na \"p\" b .", 2),
    ("a _:p b .", 1),
    ("a p .", 1),
    ("a p b", 1),
    ("a p b c .", 1),
    ("a p b .\n\n a p ! .", 3),
])
def test_malformed_lines(text, line):
    with pytest.raises(GraphSyntaxError) as info:
        parse_graph(text)
    assert info.value.line == line


def test_serialize_empty_and_single():
    assert serialize_graph(RdfGraph()) == ""
    assert serialize_graph(parse_graph("alice type Student .")) == "alice type Student .\n"


def test_serialize_is_sorted_and_escapes():
    g = parse_graph('b p "say \\"hi\\"" .\na p <http://x/y> .\n')
    text = serialize_graph(g)
    assert text.splitlines() == sorted(text.splitlines())
    assert parse_graph(text) == g


def test_g1_round_trip(g1):
    assert parse_graph(serialize_graph(g1)) == g1


names = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,5}", fullmatch=True)
iris = st.one_of(names, st.from_regex(r"http://[a-z]{1,4}/[a-z0-9#]{1,4}", fullmatch=True)).map(Iri)
blanks = st.from_regex(r"[A-Za-z0-9_]{1,4}", fullmatch=True).map(Blank)
literals = st.one_of(
    st.text(st.characters(blacklist_categories=("Cs",)), max_size=8),
    st.integers(-1000, 1000).map(str),
).map(Literal)
subjects = st.one_of(iris, blanks)
triples = st.builds(Triple, subjects, iris, st.one_of(iris, blanks, literals))


@given(st.frozensets(triples, max_size=12))
# str.splitlines also breaks on these separators
@example(frozenset([Triple(Iri("A"), Iri("A"), Literal("\x1e\x85\u2028"))]))
def test_round_trip(ts):
    g = RdfGraph(ts)
    assert parse_graph(serialize_graph(g)) == g


@given(st.frozensets(triples, max_size=8), triples)
def test_nodes_of_union(ts, t):
    g = RdfGraph(ts)
    assert nodes(g | [t]) == nodes(g) | {t.subject, t.object}

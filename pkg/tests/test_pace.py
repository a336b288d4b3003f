import pytest

from groupedtw.decomposition import from_bags, validate_td
from groupedtw.pace import ParseError, format_graph, format_td, parse_graph, parse_td

from conftest import path


def test_parse_path():
    g = parse_graph("p tw 3 2\n1 2\n2 3")
    assert g.n == 3 and g.edges() == [(0, 1), (1, 2)]


def test_parse_isolated_vertex():
    g = parse_graph("p tw 1 0\n")
    assert g.n == 1 and g.m == 0


def test_comments_and_blank_lines_ignored():
    g = parse_graph("c hello\n\np tw 2 1\nc mid\n1 2\n")
    assert g.edges() == [(0, 1)]


@pytest.mark.parametrize("text,line", [
    ("p tw 2 1\n1 1", 2),
    ("p tw 2 2\n1 2\n2 1", 3),
    ("p tw 2 1\n1 3", 2),
    ("p tx 2 1\n1 2", 1),
    ("1 2\n", 1),
    ("p tw 2 1\n1 x", 2),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_graph(text)
    assert info.value.lineno == line
    assert str(info.value).startswith(f"line {line}:")


def test_edge_count_mismatch():
    with pytest.raises(ParseError, match="declares 2 edges"):
        parse_graph("p tw 3 2\n1 2\n")


def test_graph_round_trip():
    g = path(6)
    assert parse_graph(format_graph(g)) == g


def test_td_round_trip_keeps_validity():
    g = path(4)
    t = from_bags([[0, 1], [1, 2], [2, 3]], [(0, 1), (1, 2)])
    back = parse_td(format_td(t, g.n))
    assert validate_td(g, back) == []
    assert sorted(nd.bag for nd in back.nodes.values()) == [(0, 1), (1, 2), (2, 3)]


@pytest.mark.parametrize("text,msg", [
    ("s td 2 2 3\nb 1 1 2\nb 2 2 3\n", "tree edges"),
    ("s td 3 2 3\nb 1 1 2\nb 2 2 3\nb 3 3\n1 2\n2 3\n3 1\n", "tree edges"),
    ("s td 2 2 3\nb 1 1 2\nb 1 2 3\n1 2\n", "duplicate bag"),
    ("s td 1 1 2\nb 1 5\n", "out of range"),
    ("b 1 1\n", "before header"),
])
def test_td_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_td(text)


def test_td_cycle_detected():
    text = "s td 3 1 3\nb 1 1\nb 2 2\nb 3 3\n1 2\n2 1\n"
    with pytest.raises(ParseError):
        parse_td(text)

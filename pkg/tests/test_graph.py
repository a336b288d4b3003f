import pytest

from groupedtw.graph import Graph, GraphError, connected_components, induced_edges

from conftest import complete, path


def test_from_edges_is_symmetric():
    g = Graph.from_edges(3, [(0, 1), (2, 1)])
    assert g.has_edge(1, 0) and g.has_edge(1, 2) and not g.has_edge(0, 2)
    assert g.m == 2
    assert g.edges() == [(0, 1), (1, 2)]


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)], [(-1, 0)]])
def test_from_edges_rejects_non_simple_or_out_of_range(edges):
    with pytest.raises(GraphError):
        Graph.from_edges(3, edges)


def test_induced_edges():
    assert induced_edges(path(3), {0, 1}) == {(0, 1)}
    assert induced_edges(path(3), {0, 2}) == set()
    assert induced_edges(complete(3), {0, 1, 2}) == {(0, 1), (0, 2), (1, 2)}


def test_induced_edges_out_of_range():
    with pytest.raises(GraphError):
        induced_edges(path(3), {0, 7})


def test_connected_components():
    assert connected_components(path(3)) == [[0, 1, 2]]
    assert connected_components(Graph.from_edges(2, [])) == [[0], [1]]
    assert connected_components(Graph.from_edges(4, [(0, 1), (1, 2)])) == [[0, 1, 2], [3]]


def test_subgraph_relabels_in_order():
    sub, old = path(5).subgraph([4, 2, 3])
    assert old == [2, 3, 4]
    assert sub.edges() == [(0, 1), (1, 2)]

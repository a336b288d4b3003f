import pytest

from groupedtw.decomposition import (INTERSECTION, MAIN, DecompositionError, TreeDecomposition,
                                     coarsen, from_bags, heuristic_decomposition, is_unique_home,
                                     join, make_grouped, make_unique_home, restrict, single_bag,
                                     validate_grouped, validate_td)
from groupedtw.oracle import GeneratorSpec, generate

from conftest import complete, path


def conditions(report):
    return {v.condition for v in report}


def test_single_bag_triangle_is_valid():
    t = single_bag([0, 1, 2])
    assert validate_td(complete(3), t) == []
    assert t.width == 2


def test_path_bags_valid():
    t = from_bags([[0, 1], [1, 2]], [(0, 1)])
    assert validate_td(path(3), t) == []
    assert t.width == 1


def test_uncovered_edge_has_witness():
    t = from_bags([[0, 1], [2]], [(0, 1)])
    report = validate_td(path(3), t)
    assert [v.witness for v in report if v.condition == "edge-coverage"] == [(1, 2)]


def test_missing_vertex_and_disconnected_occurrences():
    t = from_bags([[0, 1], [2], [1, 2]], [(0, 1), (1, 2)])
    report = validate_td(path(4), t)
    assert "vertex-coverage" in conditions(report)
    assert "connectivity" in conditions(report)


def test_structure_problems_reported():
    t = from_bags([[0, 1], [1, 2]], [(0, 1)])
    child = t.nodes[t.root].children[0]
    t.nodes[child].parent = None
    assert "structure" in conditions(validate_td(path(3), t))


def test_unique_home_absorbs_subset_child():
    t = from_bags([[0, 1], [0], [0, 2]], [(0, 1), (1, 2)])
    u = make_unique_home(t)
    bags = sorted(nd.bag for nd in u.nodes.values())
    assert bags == [(0, 1), (0, 2)]
    assert is_unique_home(u)


def test_unique_home_inserts_forget_chain():
    t = from_bags([[0], [0, 1, 2]], [(0, 1)])
    u = make_unique_home(t)
    assert [u.nodes[x].bag for x in u.preorder()] == [(0,), (0, 1), (0, 1, 2)]
    assert is_unique_home(u)


def test_unique_home_identity_on_unique_home_input():
    t = from_bags([[0, 1], [1, 2], [2, 3]], [(0, 1), (1, 2)])
    u = make_unique_home(t)
    assert [u.nodes[x].bag for x in u.preorder()] == [t.nodes[x].bag for x in t.preorder()]


def test_unique_home_does_not_mutate_input():
    t = from_bags([[0], [0, 1, 2]], [(0, 1)])
    make_unique_home(t)
    assert len(t.nodes) == 2


def test_grouped_chain():
    g = make_grouped(from_bags([[0, 1], [1, 2]], [(0, 1)]))
    order = g.preorder()
    assert [(g.nodes[x].kind, g.nodes[x].bag) for x in order] == [
        (MAIN, (0, 1)), (INTERSECTION, (1,)), (MAIN, (1, 2))]
    assert validate_grouped(g) == []


def test_grouped_shares_intersection():
    g = make_grouped(from_bags([[0, 1, 2], [0, 1, 3], [0, 1, 4]], [(0, 1), (0, 2)]))
    inter = [x for x in g.nodes if g.nodes[x].kind == INTERSECTION]
    assert len(inter) == 1 and g.nodes[inter[0]].bag == (0, 1)
    assert len(g.nodes[inter[0]].children) == 2


def test_grouped_single_node_unchanged():
    g = make_grouped(single_bag([0, 1, 2]))
    assert len(g.nodes) == 1 and validate_grouped(g) == []


def test_grouped_rejects_disconnected():
    with pytest.raises(DecompositionError, match="disconnected"):
        make_grouped(from_bags([[0, 1], [2, 3]], [(0, 1)]))


def test_validate_grouped_detects_equal_siblings_and_main_under_main():
    t = TreeDecomposition()
    r = t.add_node([0, 1], MAIN)
    a = t.add_node([1], INTERSECTION, parent=r)
    b = t.add_node([1], INTERSECTION, parent=r)
    t.add_node([1, 2], MAIN, parent=a)
    t.add_node([1, 3], MAIN, parent=b)
    assert "property-5" in conditions(validate_grouped(t))
    t2 = from_bags([[0, 1], [1, 2]], [(0, 1)])
    assert "property-3" in conditions(validate_grouped(t2))


@pytest.mark.parametrize("seed", range(15))
def test_grouped_of_random_witness_is_valid(seed):
    g, wit = generate(GeneratorSpec("partial-k-tree", 30, 2, 1.0, seed))
    t = make_grouped(wit)
    assert validate_td(g, t) == []
    assert validate_grouped(t) == []
    assert t.width == 2


def test_heuristic_and_coarsen_stay_valid():
    g, _ = generate(GeneratorSpec("partial-k-tree", 60, 3, 0.7, 4))
    h = heuristic_decomposition(g)
    assert validate_td(g, h) == []
    c = coarsen(h, 9)
    assert validate_td(g, c) == []
    assert c.width <= 8 and len(c.nodes) <= len(h.nodes)


def test_restrict_and_join():
    t = from_bags([[0, 1], [1, 2], [2, 3]], [(0, 1), (1, 2)])
    r = restrict(t, [2, 3], relabel={2: 0, 3: 1})
    assert sorted(nd.bag for nd in r.nodes.values()) == [(), (0,), (0, 1)]
    j = join([single_bag([0]), single_bag([1])])
    assert len(j.nodes) == 2 and j.nodes[j.root].children

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpoincare.errors import BudgetError, InputError, WindowError
from graphpoincare.graphs import (
    Graph,
    ball,
    classify_region,
    cycle,
    distances,
    generate,
    grid_chords,
    homogeneous_tree,
    line,
    parse_family,
    random_bounded,
    random_tree,
    read_edge_list,
    tree_ball_center,
    write_edge_list,
)


def _edges(g):
    return {frozenset(e) for e in g.nx_graph.edges}


def test_line_labels_and_boundary():
    g = line(3)
    assert len(g) == 7
    assert g.boundary == {0, 6}
    assert g.exact_metric
    assert g.label_of(0) == -3
    assert g.id_of(0) == 3
    assert not g.is_complete(0)
    assert g.is_complete(3)


def test_ball_on_line(short_line):
    e = ball(short_line, short_line.id_of(0), 2)
    assert len(e) == 5
    assert e.diam == 4
    assert e.r == 2
    assert e.quasiconvex
    assert len(e.halo) == 7
    assert e.to_json() == {"members": e.sorted_members(), "diam": 4, "connected": True, "quasiconvex": True}


def test_ball_touching_boundary_raises():
    g = line(3)
    with pytest.raises(WindowError):
        ball(g, g.id_of(0), 3)


def test_homogeneous_tree_size():
    g = homogeneous_tree(2, 3)
    assert len(g) == 22
    assert len(g.boundary) == 12
    assert g.is_forest
    assert max(g.degree(v) for v in g.order) == 3


def test_tree_ball_diameter(binary_tree):
    e = ball(binary_tree, 0, 2)
    assert len(e) == 10
    assert e.diam == 4
    assert e.connected and e.quasiconvex


def test_disconnected_region_has_witness(ring):
    e = classify_region(ring, [0, 5])
    assert e.diam == 5
    assert not e.connected
    assert not e.quasiconvex
    assert e.witness == (0, 5)
    assert e.witness_distance is None


def test_region_with_boundary_vertex_raises():
    g = line(3)
    with pytest.raises(WindowError):
        classify_region(g, [0, 1])


def test_empty_region_raises(ring):
    with pytest.raises(InputError):
        classify_region(ring, [])


def test_distances_beyond_window_raise():
    g = grid_chords(6, 6)
    corner = g.id_of((3, 3))
    assert distances(g, corner, 1)[corner] == 0
    with pytest.raises(WindowError):
        distances(g, corner, 20)


def test_degree_bound_enforced():
    with pytest.raises(InputError):
        Graph(nx.star_graph(4), degree_bound=2)


def test_disconnected_graph_rejected():
    graph = nx.Graph([(0, 1), (2, 3)])
    with pytest.raises(InputError):
        Graph(graph)


def test_random_bounded_respects_cap_and_seed():
    g = random_bounded(200, 2, seed=11)
    again = random_bounded(200, 2, seed=11)
    assert max(g.degree(v) for v in g.order) <= 3
    assert nx.is_connected(g.nx_graph)
    assert _edges(g) == _edges(again)


def test_random_tree_top_is_boundary():
    g = random_tree(3, 5, seed=2)
    assert 0 in g.boundary
    assert g.is_forest
    assert all(g.degree(v) <= 4 for v in g.order)


def test_grid_chords_odd_row_chords():
    g = grid_chords(8, 6)
    a = g.id_of((0, 5))
    assert g.id_of((4, 5)) in g.neighbors(a)
    assert g.id_of((5, 5)) in g.neighbors(a)
    assert g.id_of((3, 5)) not in g.neighbors(a)
    assert g.id_of((4, 4)) not in g.neighbors(g.id_of((0, 4)))


def test_grid_budget():
    with pytest.raises(BudgetError) as info:
        grid_chords(4000, 4005, 3995)
    assert info.value.budget == "window_edges"


def test_parse_family():
    spec = parse_family("homogeneous_tree:2,5")
    assert spec.name == "homogeneous_tree"
    assert spec.params == (2.0, 5.0)
    assert str(spec) == "homogeneous_tree:2,5"
    with pytest.raises(InputError):
        parse_family("lattice:3")
    with pytest.raises(InputError):
        generate("homogeneous_tree:2")


def test_generate_is_deterministic():
    g = generate("random_bounded:50,3", seed=4)
    h = generate("random_bounded:50,3", seed=4)
    assert _edges(g) == _edges(h)
    assert len(generate("cycle:9")) == 9


def test_edge_list_keeps_window(tmp_path):
    g = homogeneous_tree(2, 2)
    path = tmp_path / "tree.txt"
    write_edge_list(g, path)
    back = read_edge_list(path)
    assert _edges(back) == _edges(g)
    assert back.boundary == g.boundary
    assert back.degree_bound == 2
    assert back.exact_metric


def test_edge_list_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 1\n1 x\n")
    with pytest.raises(InputError):
        read_edge_list(path)


def test_grid_chord_shortcut_through_odd_row():
    g = grid_chords(16, 16)
    # (0,8) -> (0,9) -> (8,9) -> (8,8); row 8 carries no chords
    dist = distances(g, g.id_of((0, 8)), 3)
    assert dist[g.id_of((8, 8))] == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 29), st.integers(0, 29), st.integers(0, 29))
def test_distance_is_a_metric(seed, a, b, c):
    g = random_bounded(30, 2, seed=seed)
    da, db = distances(g, a, 30), distances(g, b, 30)
    assert da[b] == db[a]
    assert da[c] <= da[b] + db[c]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sets(st.integers(0, 200), min_size=1, max_size=12))
def test_tree_regions_are_quasiconvex_iff_connected(seed, picks):
    g = random_tree(2, 6, seed=seed)
    inside = [v for v in g.order if v not in g.boundary]
    members = {inside[i % len(inside)] for i in picks}
    e = classify_region(g, members)
    assert e.quasiconvex == e.connected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sets(st.integers(0, 24), min_size=2, max_size=10))
def test_quasiconvex_regions_are_connected(seed, members):
    g = random_bounded(25, 3, seed=seed)
    e = classify_region(g, members)
    if e.quasiconvex:
        assert e.connected
    if not e.connected:
        assert e.witness is not None


def test_tree_ball_center(binary_tree):
    e = ball(binary_tree, 0, 2)
    assert tree_ball_center(binary_tree, e) == 0
    child = binary_tree.neighbors(0)[0]
    assert tree_ball_center(binary_tree, ball(binary_tree, child, 2)) == child


def test_tree_ball_center_rejects_other_regions(binary_tree, ring):
    assert tree_ball_center(binary_tree, classify_region(binary_tree, [0])) is None
    path_like = classify_region(binary_tree, [0, *binary_tree.neighbors(0)[:2]])
    assert tree_ball_center(binary_tree, path_like) is None
    assert tree_ball_center(ring, ball(ring, 0, 2)) is None

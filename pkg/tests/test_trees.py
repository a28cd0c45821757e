import json

import networkx as nx
import numpy as np
import pytest

from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import Graph, ball, cycle, homogeneous_tree
from graphpoincare.measures import from_weights
from graphpoincare.trees import (
    balanced_split,
    chain_count,
    flow_from_leaves,
    flow_from_top,
    flow_mass_bound,
    kirchhoff_residual,
    root_tree,
    subtriangles,
    triangle,
)


@pytest.fixture
def rooted(binary_tree):
    return root_tree(binary_tree, 0)


@pytest.fixture
def unit_flow(rooted):
    return flow_from_leaves(rooted, {v: 1.0 for v in rooted.frontier})


def test_root_tree_levels():
    g = homogeneous_tree(2, 3)
    t = root_tree(g, 0)
    assert t.depth == 3
    assert t.level[0] == 3
    assert t.frontier == g.boundary
    assert len(t.children[0]) == 3
    with pytest.raises(InputError):
        root_tree(cycle(5), 0)


def test_rooted_tree_json(rooted, binary_tree):
    data = json.loads(rooted.to_json())
    assert data["top"] == 0
    assert data["frontier_level"] == 0
    assert len(data["edges"]) == len(binary_tree) - 1


def test_partial_order(rooted):
    leaf = min(rooted.frontier)
    assert rooted.geq(0, leaf)
    assert not rooted.geq(leaf, 0)
    assert rooted.geq(leaf, leaf)
    assert rooted.ancestors(leaf)[-1] == 0
    assert len(rooted.ancestors(leaf)) == 5


def test_flow_from_leaves_sums_upward(rooted, unit_flow):
    assert unit_flow.kind == "flow"
    assert unit_flow.weight(0) == 24.0
    child = rooted.children[0][0]
    assert unit_flow.weight(child) == 8.0
    assert kirchhoff_residual(rooted, unit_flow) == 0.0


def test_flow_needs_every_frontier_value(rooted):
    values = {v: 1.0 for v in sorted(rooted.frontier)[1:]}
    with pytest.raises(InputError):
        flow_from_leaves(rooted, values)


def test_flow_from_top(rooted):
    m = flow_from_top(rooted, 5.0, np.random.default_rng(3))
    assert m.weight(0) == pytest.approx(5.0, rel=1e-9)
    assert kirchhoff_residual(rooted, m) <= 1e-12


def test_triangle_shape(rooted):
    c = rooted.children[0][0]
    tri = triangle(rooted, c, 2)
    assert tri.x0 == c
    assert tri.root_edge == (c, 0)
    assert len(tri.members) == 7
    assert len(tri.base) == 4
    assert [len(s.members) for s in subtriangles(rooted, tri)] == [3, 3]


def test_triangle_limits(rooted):
    c = rooted.children[0][0]
    with pytest.raises(WindowError):
        triangle(rooted, c, 4)
    with pytest.raises(InputError):
        triangle(rooted, 0, 1)


def test_balanced_split_guarantees(rooted, unit):
    c = rooted.children[0][0]
    t0 = triangle(rooted, c, 3)
    inner = balanced_split(rooted, unit, t0)
    assert inner is not None
    inside = unit.mass(inner.members)
    rest = unit.mass(t0.members - inner.members)
    assert inside <= 2 * rest
    assert rest <= 1.5 * (2 + 1) * inside
    assert inner.base <= t0.base
    assert inner.x0 == min(rooted.children[c])


def test_balanced_split_without_stop_level():
    t = root_tree(Graph(nx.path_graph(4)), 0)
    m = from_weights({0: 1.0, 1: 1.0, 2: 1.0, 3: 100.0})
    assert balanced_split(t, m, triangle(t, 1, 2)) is None


def test_balanced_split_stops_at_short_branch():
    # vertex 4 hangs off 1 one level above the bottom of the other branch
    t = root_tree(Graph(nx.Graph([(0, 1), (1, 2), (2, 3), (1, 4)])), 0)
    m = from_weights({0: 1.0, 1: 1.0, 2: 1.0, 3: 1.0, 4: 100.0})
    assert balanced_split(t, m, triangle(t, 1, 2)) is None


def test_chain_count_bounded_by_diameter(rooted):
    e = ball(rooted.graph, 0, 2)
    assert chain_count(rooted, e, 0) == 1
    counts = [chain_count(rooted, e, x) for x in e.sorted_members()]
    assert max(counts) == 3
    assert all(n <= e.diam + 1 for n in counts)


def test_flow_mass_bound(rooted, unit_flow):
    e = ball(rooted.graph, 0, 2)
    check = flow_mass_bound(rooted, unit_flow, e, 0)
    assert check.lhs == 24 + 3 * 8 + 6 * 4
    assert check.stated_rhs == 24 * 4
    assert check.stated_holds and check.relaxed_holds
    assert not check.degenerate


def test_flow_mass_bound_rejects_non_flow(rooted, unit):
    e = ball(rooted.graph, 0, 2)
    with pytest.raises(InputError):
        flow_mass_bound(rooted, unit, e, 0)

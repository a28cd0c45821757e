import networkx as nx
import pytest

from graphpoincare.calculus import INF, Exponent, poincare_ratio
from graphpoincare.certify import P2, certify_constant_p2, estimate_constant
from graphpoincare.engine import thm21_bound
from graphpoincare.errors import SizeError
from graphpoincare.graphs import Graph, ball, classify_region, homogeneous_tree, path, random_bounded
from graphpoincare.services.extremal import extremal_function
from graphpoincare.trees import root_tree


def test_single_edge_closed_form(unit):
    g = path(2)
    e = classify_region(g, [0, 1])
    result = certify_constant_p2(g, e, unit, seed=0, restarts=3, iters=50)
    assert result.lower == pytest.approx(0.5, rel=1e-9)
    assert result.upper == pytest.approx(0.5, rel=1e-6)
    assert result.complete


def test_singleton_region_is_zero(unit):
    g = path(3)
    e = ball(g, 1, 0)
    estimate = estimate_constant(g, e, unit, P2, seed=0, restarts=2, iters=10)
    assert estimate.lower == 0.0
    certified = certify_constant_p2(g, e, unit, restarts=2, iters=10)
    assert certified.upper == 0.0


def test_binary_tree_ball_bracket_closes(unit):
    g = homogeneous_tree(2, 3)
    e = ball(g, 0, 2)
    result = certify_constant_p2(g, e, unit, seed=1, restarts=5, iters=100)
    assert result.complete
    assert result.upper is not None
    assert result.upper - result.lower <= 1e-6 * result.upper
    assert poincare_ratio(g, result.witness, e, unit, P2) == pytest.approx(result.lower)


def test_certifier_size_limit(unit):
    g = homogeneous_tree(2, 4)
    e = ball(g, 0, 3)
    with pytest.raises(SizeError):
        certify_constant_p2(g, e, unit, restarts=1, iters=1)


def test_estimate_is_deterministic_and_witnessed(short_line, unit):
    e = ball(short_line, short_line.id_of(0), 3)
    p = Exponent(1.5)
    first = estimate_constant(short_line, e, unit, p, seed=9, restarts=4, iters=60)
    second = estimate_constant(short_line, e, unit, p, seed=9, restarts=4, iters=60)
    assert first.lower == second.lower
    assert first.witness == second.witness
    assert first.lower == poincare_ratio(short_line, first.witness, e, unit, p)
    assert 0 < first.lower <= thm21_bound(e, unit, 1.0, p)


def test_estimate_beats_linear_function_at_sup(short_line, unit):
    e = ball(short_line, short_line.id_of(0), 3)
    linear = {v: float(short_line.label_of(v)) for v in short_line.order}
    baseline = poincare_ratio(short_line, linear, e, unit, INF)
    result = estimate_constant(short_line, e, unit, INF, seed=2, restarts=4, iters=80)
    assert result.lower >= baseline * (1 - 1e-9)


@pytest.mark.parametrize("p", [Exponent(1.0), INF])
def test_single_edge_ratio_at_extreme_exponents(unit, p):
    g = path(2)
    e = classify_region(g, [0, 1])
    result = estimate_constant(g, e, unit, p, seed=0, restarts=2, iters=20)
    assert result.lower == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("graph", [Graph(nx.star_graph(3)), path(3)], ids=["star", "path"])
def test_small_graph_bracket_closes(unit, graph):
    e = classify_region(graph, graph.order)
    result = certify_constant_p2(graph, e, unit, seed=4, restarts=3, iters=60)
    assert result.complete
    assert result.upper - result.lower <= 1e-6 * result.upper


@pytest.mark.parametrize("seed", range(50))
def test_bracket_closes_on_seeded_small_graphs(unit, seed):
    g = random_bounded(4 + seed % 3, 2, extra=1, seed=seed)
    e = classify_region(g, g.order)
    result = certify_constant_p2(g, e, unit, seed=seed, restarts=2, iters=40)
    assert result.complete
    assert result.lower <= result.upper * (1 + 1e-6)
    assert result.upper - result.lower <= 1e-6 * result.upper


def test_estimate_ignores_measure_scale(short_line, unit):
    e = ball(short_line, short_line.id_of(0), 3)
    p = Exponent(3.0)
    plain = estimate_constant(short_line, e, unit, p, seed=5, restarts=3, iters=40)
    heavy = estimate_constant(short_line, e, unit.scaled(7.0), p, seed=5, restarts=3, iters=40)
    assert heavy.lower == pytest.approx(plain.lower, rel=1e-6)


def test_more_restarts_never_lose(short_line, unit):
    e = ball(short_line, short_line.id_of(0), 3)
    p = Exponent(1.5)
    values = [estimate_constant(short_line, e, unit, p, seed=8, restarts=k, iters=30).lower for k in (0, 2, 6)]
    assert values[0] <= values[1] * (1 + 1e-9)
    assert values[1] <= values[2] * (1 + 1e-9)


@pytest.mark.parametrize("p", [INF, Exponent(1.0)])
def test_tree_ball_estimate_starts_from_construction(unit, p):
    g = homogeneous_tree(2, 6)
    e = ball(g, 0, 4)
    built = extremal_function(root_tree(g, 0), unit, 0, 4, p)
    result = estimate_constant(g, e, unit, p, seed=0, restarts=0, iters=0)
    assert not built.degenerate
    assert result.lower >= built.ratio * (1 - 1e-9)

import numpy as np
import pytest

from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import ball, classify_region, cycle, homogeneous_tree, line
from graphpoincare.measures import (
    Measure,
    ball_size_bound,
    counting,
    degree_doubling_relation,
    doubling_constant,
    from_weights,
    inverse_distance,
    region_mass,
    uniform_random,
)


def test_counting_measure(short_line, unit):
    e = ball(short_line, short_line.id_of(0), 3)
    assert unit.weight(12345) == 1.0
    assert region_mass(unit, e) == 7.0
    assert unit.in_class(1.0, 1.0)
    assert not unit.in_class(2.0)


def test_from_weights_rejects_nonpositive():
    with pytest.raises(InputError):
        from_weights({0: 1.0, 1: 0.0})
    with pytest.raises(InputError):
        from_weights({0: 1.0, 1: 2.0}, alpha=1.5)


def test_inverse_distance_is_not_bounded_below():
    g = line(4)
    m = inverse_distance(g, g.id_of(0))
    assert m.weight(g.id_of(0)) == 1.0
    assert m.weight(g.id_of(2)) == 0.5
    assert m.weight(g.id_of(-4)) == 0.25
    assert m.alpha == 0.0
    assert not m.in_class(alpha=0.01)


def test_uniform_random_range():
    g = cycle(30)
    m = uniform_random(g, 0.5, np.random.default_rng(1))
    weights = [m.weight(v) for v in g.order]
    assert min(weights) >= 0.5
    assert max(weights) <= 5.0
    assert m.in_class(0.5, 5.0)


def test_scaled_measure(unit):
    m = unit.scaled(3.0)
    assert m.weight(0) == 3.0
    assert m.alpha == 3.0
    assert m.kind == "custom"
    with pytest.raises(InputError):
        unit.scaled(0.0)


def test_measure_json(short_line):
    m = inverse_distance(short_line, short_line.id_of(0))
    back = Measure.from_json(m.to_json())
    assert back.weights == m.weights
    assert back.alpha == 0.0
    assert Measure.from_json(counting().to_json()).weight(7) == 1.0


def test_ball_size_bound():
    assert ball_size_bound(1, 3) == 7
    assert ball_size_bound(2, 3) == 24
    g = homogeneous_tree(2, 5)
    for r in range(4):
        assert len(ball(g, 0, r)) <= ball_size_bound(2, r)
    with pytest.raises(InputError):
        ball_size_bound(0, 1)


def test_doubling_on_cycle(unit):
    report = doubling_constant(cycle(20), unit, 2, [0, 5])
    assert report.per_radius[0] == 1.0
    assert report.per_radius[1] == pytest.approx(5 / 3)
    assert report.D_of_R == pytest.approx(9 / 5)
    assert report.bound == 3.0
    assert report.within_bound


def test_doubling_truncated_by_window(unit):
    with pytest.raises(WindowError):
        doubling_constant(homogeneous_tree(2, 2), unit, 2, [0])


def test_degree_doubling_relation(unit):
    report = degree_doubling_relation(cycle(8), unit)
    assert report.holds
    assert report.max_degree == 2
    assert report.D_half == 3.0


def test_degree_doubling_without_lower_bound():
    g = line(3)
    report = degree_doubling_relation(g, inverse_distance(g, g.id_of(0)))
    assert report.holds is None
    assert not report.bounded_below
    assert "not in M_alpha" in report.message


@pytest.mark.parametrize("seed", [0, 3, 17])
def test_region_mass_grows_with_region(seed):
    g = homogeneous_tree(2, 5)
    m = uniform_random(g, 0.5, np.random.default_rng(seed))
    masses = [region_mass(m, ball(g, 0, r)) for r in range(5)]
    assert masses == sorted(masses)
    inner = classify_region(g, [0, 1, 4])
    outer = classify_region(g, [0, 1, 2, 4, 5])
    assert region_mass(m, inner) < region_mass(m, outer)
    assert region_mass(m, outer) - region_mass(m, inner) == pytest.approx(m.weight(2) + m.weight(5))

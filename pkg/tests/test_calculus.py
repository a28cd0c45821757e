import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpoincare.calculus import (
    INF,
    Exponent,
    centered,
    difference,
    gradient,
    lp_norm,
    poincare_ratio,
    weighted_mean,
)
from graphpoincare.errors import HaloError, InputError, PreconditionError
from graphpoincare.graphs import ball, classify_region, cycle, homogeneous_tree, line
from graphpoincare.measures import counting, from_weights, uniform_random
from graphpoincare.trees import root_tree

RING = cycle(9)
RING_REGION = ball(RING, 0, 2)
TREE = homogeneous_tree(2, 4)
ROOTED = root_tree(TREE, 0)
BELOW_TOP = ball(TREE, ROOTED.children[ROOTED.children[0][0]][0], 1)


def test_exponent_parsing():
    assert Exponent.parse("inf").is_infinite
    assert str(Exponent.parse("inf")) == "inf"
    assert str(Exponent.parse("1.5")) == "1.5"
    assert str(Exponent.parse(2)) == "2"
    assert Exponent(1.0) < INF
    with pytest.raises(InputError):
        Exponent.parse("0.5")
    with pytest.raises(InputError):
        Exponent.parse("many")


def test_conjugates():
    assert Exponent(2.0).conjugate == Exponent(2.0)
    assert Exponent(1.0).conjugate == INF
    assert INF.conjugate == Exponent(1.0)
    assert INF.inverse == 0.0


def test_gradient_on_line(short_line):
    e = ball(short_line, short_line.id_of(0), 2)
    f = {v: float(short_line.label_of(v)) for v in short_line.order}
    assert set(gradient(short_line, f, e).values()) == {2.0}


def test_gradient_needs_halo(short_line):
    e = ball(short_line, short_line.id_of(0), 2)
    f = {v: 1.0 for v in e.members}
    with pytest.raises(HaloError):
        gradient(short_line, f, e)


def test_weighted_mean_and_norms():
    g = line(2)
    e = ball(g, g.id_of(0), 1)
    a, b, c = e.sorted_members()
    m = from_weights({a: 1.0, b: 2.0, c: 1.0})
    f = {a: -1.0, b: 0.0, c: 3.0}
    assert weighted_mean(f, e, m) == 0.5
    assert lp_norm(f, e, m, Exponent(1.0)) == 4.0
    assert lp_norm(f, e, m, Exponent(2.0)) == pytest.approx(math.sqrt(10.0))
    assert lp_norm(f, e, m, INF) == 3.0
    assert centered(f, e, m) == {a: -1.5, b: -0.5, c: 2.5}


def test_ratio_of_constant_is_zero():
    f = {v: 4.0 for v in RING.order}
    assert poincare_ratio(RING, f, RING_REGION, counting(), Exponent(2.0)) == 0.0


def test_difference_operator(binary_tree):
    t = root_tree(binary_tree, 0)
    f = {v: float(t.level[v]) for v in binary_tree.order}
    below = t.children[t.children[0][0]][0]
    e = ball(binary_tree, below, 1)
    assert set(difference(t, f, e).values()) <= {-1.0}
    with pytest.raises(InputError):
        difference(t, f, ball(binary_tree, 0, 1))


values = st.lists(st.integers(-20, 20), min_size=len(RING), max_size=len(RING))


@settings(max_examples=60, deadline=None)
@given(values, st.integers(1, 6), st.integers(-50, 50), st.sampled_from(["1", "1.5", "2", "3", "inf"]))
def test_ratio_invariant_under_affine_maps(raw, scale, shift, p):
    f = dict(zip(RING.order, map(float, raw)))
    g = {v: scale * x + shift for v, x in f.items()}
    m = counting()
    p = Exponent.parse(p)
    before = poincare_ratio(RING, f, RING_REGION, m, p)
    after = poincare_ratio(RING, g, RING_REGION, m, p)
    assert after == pytest.approx(before, rel=1e-9, abs=1e-12)


def test_difference_rejects_non_adjacent_parent():
    g = line(3)
    t = root_tree(g, g.id_of(-3))
    x = g.id_of(0)
    detached = dataclasses.replace(t, parent={**t.parent, x: g.id_of(-3)})
    f = {v: 0.0 for v in g.order}
    f[g.id_of(-3)] = 5.0
    with pytest.raises(PreconditionError) as info:
        difference(detached, f, classify_region(g, [x]))
    assert info.value.hypothesis == "parent_is_neighbor"


def test_flat_gradient_on_two_pieces():
    e = classify_region(RING, [0, 5])
    assert not e.connected
    f = {v: 1.0 if 3 <= v <= 7 else 0.0 for v in RING.order}
    assert poincare_ratio(RING, f, e, counting(), Exponent(2.0)) == math.inf
    with pytest.raises(PreconditionError):
        poincare_ratio(RING, f, dataclasses.replace(e, connected=True), counting(), Exponent(2.0))


tree_values = st.lists(st.integers(-30, 30).map(float), min_size=len(TREE), max_size=len(TREE))


@settings(max_examples=60, deadline=None)
@given(tree_values)
def test_difference_bounded_by_gradient(raw):
    f = dict(zip(TREE.order, raw))
    df = difference(ROOTED, f, BELOW_TOP)
    grad = gradient(TREE, f, BELOW_TOP)
    assert all(abs(df[x]) <= grad[x] for x in BELOW_TOP.members)


@settings(max_examples=60, deadline=None)
@given(values, st.sampled_from(["1", "1.5", "2", "3"]), st.integers(0, 1000))
def test_l1_norm_below_scaled_lp_norm(raw, p, seed):
    f = dict(zip(RING.order, map(float, raw)))
    m = uniform_random(RING, 0.5, np.random.default_rng(seed))
    p = Exponent.parse(p)
    mass = m.mass(RING_REGION.sorted_members())
    l1 = lp_norm(f, RING_REGION, m, Exponent(1.0))
    assert l1 <= mass ** (1 - p.inverse) * lp_norm(f, RING_REGION, m, p) * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(values, st.integers(-100, 100))
def test_values_beyond_halo_do_not_matter(raw, far_value):
    f = dict(zip(RING.order, map(float, raw)))
    far = [v for v in RING.order if v not in RING_REGION.halo]
    assert far
    g = {**f, **{v: float(far_value) for v in far}}
    for p in ("1", "2", "inf"):
        p = Exponent.parse(p)
        assert gradient(RING, g, RING_REGION) == gradient(RING, f, RING_REGION)
        assert lp_norm(centered(g, RING_REGION, counting()), RING_REGION, counting(), p) == lp_norm(
            centered(f, RING_REGION, counting()), RING_REGION, counting(), p
        )
        assert poincare_ratio(RING, g, RING_REGION, counting(), p) == poincare_ratio(RING, f, RING_REGION, counting(), p)

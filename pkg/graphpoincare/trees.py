"""Rooted tree windows, flow measures, triangles and balanced splits.

The window's top vertex stands in for the fixed half-infinite geodesic that
orients the tree: levels increase towards it, every other vertex has exactly
one parent one level up, and the bottom level is the Kirchhoff frontier
below which the window has no children.
"""

import json
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from pydantic import BaseModel

from graphpoincare.config import KIRCHHOFF_TOLERANCE
from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import Graph, Region
from graphpoincare.measures import Measure, from_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RootedTree:
    """A tree window oriented away from its top vertex."""

    graph: Graph
    top: int
    level: Mapping[int, int]
    parent: Mapping[int, int]
    children: Mapping[int, tuple[int, ...]]
    depth: int

    @property
    def frontier(self) -> frozenset[int]:
        return frozenset(v for v, lv in self.level.items() if lv == 0)

    def ancestors(self, vertex: int) -> list[int]:
        """The parent chain from vertex up to the top, vertex included."""
        if vertex not in self.level:
            raise InputError(f"Vertex {vertex} not in tree")
        chain = [vertex]
        while chain[-1] != self.top:
            chain.append(self.parent[chain[-1]])
        return chain

    def geq(self, y: int, x: int) -> bool:
        """Partial order: y >= x iff the parent chain from x reaches y."""
        if y not in self.level or x not in self.level:
            raise InputError(f"Vertex {y if y not in self.level else x} not in tree")
        v = x
        while self.level[v] < self.level[y]:
            v = self.parent[v]
        return v == y

    def descendants(self, vertex: int, height: int) -> list[list[int]]:
        """Layers 0..height of the subtree below vertex."""
        layers = [[vertex]]
        for _ in range(height):
            layers.append([c for v in layers[-1] for c in self.children[v]])
        return layers

    def to_json(self) -> str:
        edges = sorted(tuple(sorted(e)) for e in self.graph.nx_graph.edges)
        frontier_level = min(self.level.values())
        return json.dumps({"edges": edges, "top": self.top, "frontier_level": frontier_level})


def root_tree(g: Graph, top: int) -> RootedTree:
    """Orient a tree window away from ``top``; the top gets level = window depth."""
    if top not in g:
        raise InputError(f"Vertex {top} not in graph")
    if not nx.is_tree(g.nx_graph):
        raise InputError("Graph is not a tree")
    dist = nx.single_source_shortest_path_length(g.nx_graph, top)
    depth = max(dist.values())
    level = {v: depth - d for v, d in dist.items()}
    parent = {}
    children = {}
    for v in g.order:
        below = [u for u in g.neighbors(v) if dist[u] == dist[v] + 1]
        children[v] = tuple(below)
        if v != top:
            parent[v] = next(u for u in g.neighbors(v) if dist[u] == dist[v] - 1)
    return RootedTree(graph=g, top=top, level=level, parent=parent, children=children, depth=depth)


@dataclass(frozen=True)
class FlowMeasure(Measure):
    """Measure obeying Kirchhoff's law strictly above ``frontier_level``."""

    frontier_level: int = 0


def flow_from_leaves(t: RootedTree, leaf_values: Mapping[int, float]) -> FlowMeasure:
    """Build a flow by summing frontier values upward.

    Every frontier vertex needs a strictly positive value; every vertex
    above the frontier needs at least one child.
    """
    frontier = t.frontier
    missing = sorted(frontier - set(leaf_values))
    if missing:
        raise InputError(f"No value for frontier vertex {missing[0]}")
    extra = sorted(set(leaf_values) - frontier)
    if extra:
        raise InputError(f"Vertex {extra[0]} is not on the frontier")
    bad = sorted(v for v, w in leaf_values.items() if not (w > 0 and math.isfinite(w)))
    if bad:
        raise InputError(f"Nonpositive flow value at vertex {bad[0]}")
    weights = {v: float(leaf_values[v]) for v in frontier}
    for v in sorted(t.level, key=lambda u: (t.level[u], u)):
        if t.level[v] == 0:
            continue
        if not t.children[v]:
            raise InputError(f"Leaf {v} sits above the frontier; no flow passes through it")
        weights[v] = math.fsum(weights[c] for c in t.children[v])
    base = from_weights(weights, kind="flow")
    return FlowMeasure(weights=base.weights, alpha=base.alpha, beta=base.beta, kind="flow", frontier_level=0)


def flow_from_top(t: RootedTree, total: float, rng: np.random.Generator) -> FlowMeasure:
    """Split ``total`` randomly down the tree, then rebuild the flow leaf-up."""
    if total <= 0:
        raise InputError(f"Total flow must be positive, got {total}")
    values = {t.top: float(total)}
    for v in sorted(t.level, key=lambda u: (-t.level[u], u)):
        kids = t.children[v]
        if not kids or t.level[v] == 0:
            continue
        shares = rng.dirichlet(np.ones(len(kids)))
        for c, s in zip(kids, shares):
            values[c] = values[v] * max(float(s), 1e-12)
    return flow_from_leaves(t, {v: values[v] for v in t.frontier})


def kirchhoff_residual(t: RootedTree, m: Measure, vertices=None) -> float:
    """Largest relative violation of mu(x) = sum of mu over children, above the frontier."""
    worst = 0.0
    for v in sorted(vertices if vertices is not None else t.level):
        if t.level[v] == 0 or not t.children[v]:
            continue
        mu = m.weight(v)
        worst = max(worst, abs(mu - math.fsum(m.weight(c) for c in t.children[v])) / mu)
    return worst


@dataclass(frozen=True)
class Triangle:
    """Subtree below x0 truncated at depth ``height``; root edge (x0, parent of x0)."""

    root_edge: tuple[int, int]
    height: int
    members: frozenset[int]
    base: frozenset[int]
    layers: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def x0(self) -> int:
        return self.root_edge[0]


def triangle(t: RootedTree, x0: int, height: int) -> Triangle:
    """Triangle of the given height below x0."""
    if x0 not in t.level:
        raise InputError(f"Vertex {x0} not in tree")
    if x0 == t.top:
        raise InputError("The top vertex has no parent, so it roots no triangle")
    if height < 0:
        raise InputError(f"Height must be >= 0, got {height}")
    if t.level[x0] < height:
        raise WindowError(f"Triangle of height {height} below {x0} crosses the frontier")
    layers = t.descendants(x0, height)
    cut = [v for layer in layers[:-1] for v in layer if v in t.graph.boundary]
    if cut:
        raise WindowError(f"Vertex {cut[0]} inside the triangle is truncated by the window")
    return Triangle(
        root_edge=(x0, t.parent[x0]),
        height=height,
        members=frozenset(v for layer in layers for v in layer),
        base=frozenset(layers[-1]),
        layers=tuple(tuple(layer) for layer in layers),
    )


def subtriangles(t: RootedTree, tri: Triangle) -> list[Triangle]:
    """Triangles of height one less rooted at the children of x0."""
    if tri.height == 0:
        return []
    return [triangle(t, c, tri.height - 1) for c in t.children[tri.x0]]


def balanced_split(t: RootedTree, m: Measure, t0: Triangle) -> Triangle | None:
    """Descend into heaviest subtriangles until mu(T_n) <= 2 mu(T_0 minus T_n).

    Ties between equally heavy subtriangles go to the smallest root id.
    Returns None when no level satisfies the stop rule.
    """
    if t0.height < 1:
        raise InputError("Balanced split needs a triangle of height >= 1")
    total = m.mass(t0.members)
    current = t0
    for n in range(1, t0.height + 1):
        candidates = subtriangles(t, current)
        if not candidates:
            logger.debug("Balanced split ran out of subtriangles at n=%d below %d", n, t0.x0)
            return None
        current = max(candidates, key=lambda tri: (m.mass(tri.members), -tri.x0))
        inside = m.mass(current.members)
        if inside <= 2 * (total - inside):
            logger.debug("Balanced split stopped at n=%d below %d", n, t0.x0)
            return current
    return None


def chain_count(t: RootedTree, e: Region, x: int) -> int:
    """Number of z in E with z >= x."""
    if x not in e.members:
        raise InputError(f"Vertex {x} not in region")
    return sum(1 for z in t.ancestors(x) if z in e.members)


class FlowMassCheck(BaseModel):
    """Mass of E below z against mu(z) diam(E) and mu(z) (diam(E) + 1)."""

    z: int
    lhs: float
    stated_rhs: float
    relaxed_rhs: float
    stated_holds: bool
    relaxed_holds: bool
    degenerate: bool


def flow_mass_bound(t: RootedTree, m: Measure, e: Region, z: int) -> FlowMassCheck:
    """Compare the mass of {x in E : z >= x} with mu(z) diam(E)."""
    if z not in e.members:
        raise InputError(f"Vertex {z} not in region")
    low = [v for v in e.members if t.level[v] == 0]
    if low:
        raise WindowError(f"Region touches frontier vertex {min(low)}")
    residual = kirchhoff_residual(t, m, e.members)
    if residual > KIRCHHOFF_TOLERANCE:
        raise InputError(f"Measure violates Kirchhoff's law inside the region (residual {residual:.3g})")
    lhs = math.fsum(m.weight(x) for x in sorted(e.members) if t.geq(z, x))
    mu_z = m.weight(z)
    tol = 1 + 1e-9
    return FlowMassCheck(
        z=z,
        lhs=lhs,
        stated_rhs=mu_z * e.diam,
        relaxed_rhs=mu_z * (e.diam + 1),
        stated_holds=lhs <= mu_z * e.diam * tol,
        relaxed_holds=lhs <= mu_z * (e.diam + 1) * tol,
        degenerate=e.diam == 0,
    )

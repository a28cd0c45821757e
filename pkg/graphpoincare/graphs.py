"""Finite windows of infinite graphs, metric queries and region predicates.

A window is an induced subgraph of some ambient, locally finite, connected
graph. Vertices whose ambient neighborhood is not entirely inside the window
form the window's boundary; every query that would need information beyond
the boundary raises WindowError instead of answering from a truncated graph.
"""

import logging
from collections.abc import Hashable, Iterable
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from graphpoincare.config import MAX_WINDOW_EDGES, MAX_WINDOW_VERTICES
from graphpoincare.errors import BudgetError, InputError, WindowError

logger = logging.getLogger(__name__)

# Rows of the ambient distance matrix computed per csgraph call
_DISTANCE_CHUNK = 256


class Graph:
    """Immutable window of a locally finite, connected, undirected graph.

    Vertex ids are opaque integers. Structured labels (grid coordinates,
    tree paths, integers on the line) live in a registry on the side.
    """

    def __init__(
        self,
        graph: nx.Graph,
        *,
        degree_bound: int | None = None,
        boundary: Iterable[int] = (),
        labels: dict[int, Hashable] | None = None,
        family: str = "custom",
        seed: int | None = None,
        margin: int = 0,
        exact_metric: bool = False,
        window_note: str = "",
    ):
        if graph.number_of_nodes() == 0:
            raise InputError("Graph has no vertices")
        if nx.number_of_selfloops(graph):
            raise InputError("Graph has self-loops")
        if graph.is_directed() or graph.is_multigraph():
            raise InputError("Graph must be simple and undirected")
        if not nx.is_connected(graph):
            raise InputError("Graph is not connected")
        self.boundary = frozenset(boundary)
        if not self.boundary <= set(graph.nodes):
            raise InputError("Boundary contains vertices outside the graph")
        if graph.number_of_nodes() == 1 and not self.boundary:
            raise InputError("A single-vertex window must mark its vertex as boundary")
        if degree_bound is not None:
            if degree_bound < 1:
                raise InputError(f"Degree bound must be >= 1, got {degree_bound}")
            worst = max(d for _, d in graph.degree)
            if worst > degree_bound + 1:
                raise InputError(f"Vertex of degree {worst} exceeds bound {degree_bound + 1}")

        self.nx_graph = nx.freeze(graph)
        self.order: tuple[int, ...] = tuple(sorted(graph.nodes))
        self.index = {v: i for i, v in enumerate(self.order)}
        self.adjacency: dict[int, tuple[int, ...]] = {
            v: tuple(sorted(graph.adj[v])) for v in self.order
        }
        self.degree_bound = degree_bound
        self.labels = dict(labels or {})
        self._ids = {label: v for v, label in self.labels.items()}
        self.family = family
        self.seed = seed
        self.margin = margin
        # Ambient distances coincide with window distances everywhere
        self.exact_metric = exact_metric or not self.boundary
        self.window_note = window_note

    def __contains__(self, vertex: object) -> bool:
        return vertex in self.adjacency

    def __len__(self) -> int:
        return len(self.order)

    def __repr__(self) -> str:
        return f"Graph(family={self.family!r}, vertices={len(self)}, edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return self.nx_graph.number_of_edges()

    @cached_property
    def is_forest(self) -> bool:
        return nx.is_forest(self.nx_graph)

    @cached_property
    def csr(self):
        return csr_matrix(nx.to_scipy_sparse_array(self.nx_graph, nodelist=self.order, format="csr"))

    def neighbors(self, vertex: int) -> tuple[int, ...]:
        try:
            return self.adjacency[vertex]
        except KeyError:
            raise InputError(f"Vertex {vertex} not in graph") from None

    def degree(self, vertex: int) -> int:
        return len(self.neighbors(vertex))

    def is_complete(self, vertex: int) -> bool:
        """True when every ambient neighbor of the vertex is in the window."""
        return vertex in self.adjacency and vertex not in self.boundary

    def label_of(self, vertex: int) -> Hashable:
        return self.labels.get(vertex, vertex)

    def id_of(self, label: Hashable) -> int:
        try:
            return self._ids[label]
        except KeyError:
            raise InputError(f"Unknown vertex label: {label!r}") from None

    def header(self) -> str:
        parts = [f"family={self.family}", f"seed={self.seed}", f"margin={self.margin}"]
        if self.degree_bound is not None:
            parts.append(f"degree_bound={self.degree_bound}")
        if self.boundary:
            parts.append("boundary=" + ",".join(str(v) for v in sorted(self.boundary)))
        if self.exact_metric and self.boundary:
            parts.append("exact_metric=1")
        return "# " + " ".join(parts)


@dataclass(frozen=True)
class Region:
    """Finite vertex set with cached metric facts."""

    members: frozenset[int]
    diam: int
    connected: bool
    quasiconvex: bool
    halo: frozenset[int]
    witness: tuple[int, int] | None = None
    witness_distance: int | None = None

    @property
    def r(self) -> Fraction:
        """Half the diameter."""
        return Fraction(self.diam, 2)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, vertex: object) -> bool:
        return vertex in self.members

    def sorted_members(self) -> list[int]:
        return sorted(self.members)

    def to_json(self) -> dict:
        return {
            "members": self.sorted_members(),
            "diam": self.diam,
            "connected": self.connected,
            "quasiconvex": self.quasiconvex,
        }


def distances(g: Graph, source: int, cutoff: int) -> dict[int, int]:
    """Graph distances from source to every vertex within cutoff.

    Window distances are exact up to two more than the distance to the
    nearest boundary vertex; larger cutoffs on a graph whose window metric
    is not known to be exact raise WindowError.
    """
    if source not in g:
        raise InputError(f"Vertex {source} not in graph")
    if cutoff < 0:
        raise InputError(f"Cutoff must be >= 0, got {cutoff}")
    dist = nx.single_source_shortest_path_length(g.nx_graph, source, cutoff=cutoff)
    if not g.exact_metric:
        reach = [d for v, d in dist.items() if v in g.boundary]
        if reach and cutoff > min(reach) + 2:
            raise WindowError(
                f"Boundary vertex at distance {min(reach)} from {source}; "
                f"distances up to {cutoff} are not certified"
            )
    return dist


def ball(g: Graph, center: int, radius: int) -> Region:
    """Closed ball of the given radius, with its halo inside the window."""
    if radius < 0:
        raise InputError(f"Radius must be >= 0, got {radius}")
    dist = _raw_distances(g, center, radius + 1)
    touched = [v for v, d in dist.items() if d <= radius and v in g.boundary]
    if touched:
        raise WindowError(
            f"Ball of radius {radius} around {center} reaches boundary vertex {min(touched)}"
        )
    members = {v for v, d in dist.items() if d <= radius}
    return classify_region(g, members)


def _raw_distances(g: Graph, source: int, cutoff: int) -> dict[int, int]:
    if source not in g:
        raise InputError(f"Vertex {source} not in graph")
    return nx.single_source_shortest_path_length(g.nx_graph, source, cutoff=cutoff)


def halo_of(g: Graph, members: Iterable[int]) -> frozenset[int]:
    halo = set(members)
    for x in list(halo):
        halo.update(g.neighbors(x))
    return frozenset(halo)


def classify_region(g: Graph, members: Iterable[int]) -> Region:
    """Compute ambient diameter, connectivity and quasiconvexity of a set.

    Quasiconvexity asks that every pair be joined inside the set by a path
    of length at most twice the ambient diameter. On failure the pair with
    the largest induced distance is kept as a witness.
    """
    members = frozenset(members)
    if not members:
        raise InputError("Region is empty")
    missing = sorted(v for v in members if v not in g)
    if missing:
        raise InputError(f"Vertex {missing[0]} not in graph")
    incomplete = sorted(v for v in members if v in g.boundary)
    if incomplete:
        raise WindowError(f"Halo of vertex {incomplete[0]} is not inside the window")
    halo = halo_of(g, members)

    if len(members) == 1:
        return Region(members=members, diam=0, connected=True, quasiconvex=True, halo=halo)

    induced = g.nx_graph.subgraph(members)
    if g.is_forest and g.exact_metric and nx.is_connected(induced):
        return Region(
            members=members,
            diam=_tree_diameter(induced, min(members)),
            connected=True,
            quasiconvex=True,
            halo=halo,
        )

    ordered = sorted(members)
    idx = np.array([g.index[v] for v in ordered])
    ambient = _member_distances(g, idx)
    diam = int(ambient[:, idx].max())
    if not g.exact_metric and g.boundary:
        b_idx = np.array([g.index[v] for v in sorted(g.boundary)])
        nearest = ambient[:, b_idx].min(axis=1)
        farthest = ambient[:, idx].max(axis=1)
        bad = np.flatnonzero(farthest > nearest + 2)
        if bad.size:
            v = ordered[bad[0]]
            raise WindowError(
                f"Distances from {v} reach {int(farthest[bad[0]])} but the boundary is "
                f"{int(nearest[bad[0]])} away; enlarge the window"
            )

    sub = g.csr[np.ix_(idx, idx)]
    inner = shortest_path(sub, directed=False, unweighted=True)
    connected = bool(np.isfinite(inner).all())
    upper = np.triu(np.ones_like(inner, dtype=bool), k=1)
    violating = upper & (inner > 2 * diam)
    quasiconvex = connected and not violating.any()

    witness = witness_distance = None
    if not quasiconvex:
        scores = np.where(violating, inner, -1.0)
        i, j = np.unravel_index(int(np.argmax(scores)), scores.shape)
        witness = (ordered[i], ordered[j])
        witness_distance = int(inner[i, j]) if np.isfinite(inner[i, j]) else None
        logger.debug("Region not quasiconvex: witness %s, induced distance %s", witness, witness_distance)

    return Region(
        members=members,
        diam=diam,
        connected=connected,
        quasiconvex=quasiconvex,
        halo=halo,
        witness=witness,
        witness_distance=witness_distance,
    )


def _tree_diameter(tree: nx.Graph, start: int) -> int:
    first = nx.single_source_shortest_path_length(tree, start)
    far = max(first, key=lambda v: (first[v], -v))
    return max(nx.single_source_shortest_path_length(tree, far).values())


def tree_ball_center(g: Graph, e: Region) -> int | None:
    """Center c with B_{diam/2}(c) = E when E is a ball of a tree window, else None."""
    if not g.is_forest or not e.connected or e.diam < 2 or e.diam % 2:
        return None
    induced = g.nx_graph.subgraph(e.members)
    first = nx.single_source_shortest_path_length(induced, min(e.members))
    end = max(first, key=lambda v: (first[v], -v))
    paths = nx.single_source_shortest_path(induced, end)
    far = max(paths, key=lambda v: (len(paths[v]), -v))
    center = paths[far][e.diam // 2]
    try:
        candidate = ball(g, center, e.diam // 2)
    except WindowError:
        return None
    return center if candidate.members == e.members else None


def _member_distances(g: Graph, idx: np.ndarray) -> np.ndarray:
    blocks = [
        shortest_path(g.csr, directed=False, unweighted=True, indices=idx[start:start + _DISTANCE_CHUNK])
        for start in range(0, len(idx), _DISTANCE_CHUNK)
    ]
    return np.vstack(blocks)


# ---------------------------------------------------------------------------
# Generators


@dataclass(frozen=True)
class FamilySpec:
    """Parsed generator spec such as ``homogeneous_tree:2,5``."""

    name: str
    params: tuple[float, ...] = ()

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}:" + ",".join(_fmt_param(p) for p in self.params)


def _fmt_param(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


FAMILIES = ("grid_chords", "line", "homogeneous_tree", "random_tree", "cycle", "path", "random_bounded")


def parse_family(text: str) -> FamilySpec:
    name, _, rest = text.strip().partition(":")
    if name not in FAMILIES:
        raise InputError(f"Unknown graph family: {name}")
    try:
        params = tuple(float(p) for p in rest.split(",")) if rest else ()
    except ValueError:
        raise InputError(f"Invalid parameters for {name}: {rest}") from None
    return FamilySpec(name, params)


def generate(family: str | FamilySpec, seed: int = 0) -> Graph:
    """Build a graph from a family spec; deterministic for fixed (family, seed)."""
    spec = parse_family(family) if isinstance(family, str) else family
    params = spec.params
    builders = {
        "grid_chords": (grid_chords, 2, 3),
        "line": (line, 1, 1),
        "homogeneous_tree": (homogeneous_tree, 2, 2),
        "random_tree": (random_tree, 2, 3),
        "cycle": (cycle, 1, 1),
        "path": (path, 1, 1),
        "random_bounded": (random_bounded, 2, 3),
    }
    builder, low, high = builders[spec.name]
    if not low <= len(params) <= high:
        raise InputError(f"{spec.name} takes {low}..{high} parameters, got {len(params)}")
    ints = [int(p) for p in params]
    if spec.name == "random_tree":
        branching = params[2] if len(params) > 2 else 0.5
        return random_tree(ints[0], ints[1], seed, branching)
    if spec.name == "random_bounded":
        return random_bounded(*ints, seed=seed)
    return builder(*ints)


def _check_budget(n_vertices: int, n_edges: int) -> None:
    if n_vertices > MAX_WINDOW_VERTICES:
        raise BudgetError(
            "window_vertices", f"Window needs {n_vertices} vertices (budget {MAX_WINDOW_VERTICES})"
        )
    if n_edges > MAX_WINDOW_EDGES:
        raise BudgetError("window_edges", f"Window needs {n_edges} edges (budget {MAX_WINDOW_EDGES})")


def chords_adjacent(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Adjacency rule of the grid with chords on odd rows."""
    (j1, k1), (j2, k2) = a, b
    if abs(j1 - j2) + abs(k1 - k2) == 1:
        return True
    return k1 == k2 and k1 % 2 == 1 and j1 <= k1 and j2 <= k1 and abs(j1 - j2) >= 4


def grid_chords(J: int, K: int, k_min: int = 0) -> Graph:
    """Window of the grid with chords: columns 0..J, rows k_min..K.

    Grid neighbors are joined, and on every odd row k any two vertices with
    columns at most k and at least 4 apart are joined as well.
    """
    if J < 0 or K < k_min or k_min < 0:
        raise InputError(f"Invalid grid window: J={J}, rows {k_min}..{K}")
    width = J + 1
    rows = range(k_min, K + 1)
    chord_count = 0
    for k in rows:
        if k % 2:
            m = min(k, J) + 1
            chord_count += max(m - 4, 0) * max(m - 3, 0) // 2
    _check_budget(width * len(rows), 2 * width * len(rows) + chord_count)

    def vid(j: int, k: int) -> int:
        return (k - k_min) * width + j

    graph = nx.Graph()
    labels = {}
    boundary = set()
    for k in rows:
        for j in range(width):
            v = vid(j, k)
            graph.add_node(v)
            labels[v] = (j, k)
            if j < J:
                graph.add_edge(v, vid(j + 1, k))
            if k < K:
                graph.add_edge(v, vid(j, k + 1))
            cut_chord = k % 2 == 1 and k > J and j <= k - 4
            if j == J or k == K or (k == k_min and k > 0) or cut_chord:
                boundary.add(v)
        if k % 2:
            top = min(k, J)
            graph.add_edges_from(
                (vid(j1, k), vid(j2, k)) for j1 in range(top + 1) for j2 in range(j1 + 4, top + 1)
            )
    return Graph(
        graph,
        boundary=boundary,
        labels=labels,
        family=f"grid_chords:{J},{K},{k_min}",
        margin=K - k_min,
        window_note=f"grid with odd-row chords, columns 0..{J}, rows {k_min}..{K}",
    )


def line(k_max: int) -> Graph:
    """The integers -k_max..k_max as a window of the line."""
    if k_max < 0:
        raise InputError(f"k_max must be >= 0, got {k_max}")
    _check_budget(2 * k_max + 1, 2 * k_max)
    graph = nx.path_graph(2 * k_max + 1)
    labels = {v: v - k_max for v in graph.nodes}
    return Graph(
        graph,
        degree_bound=1,
        boundary={0, 2 * k_max},
        labels=labels,
        family=f"line:{k_max}",
        margin=k_max,
        exact_metric=True,
        window_note=f"integers -{k_max}..{k_max}",
    )


def homogeneous_tree(b: int, depth: int) -> Graph:
    """Ball of the given depth around vertex 0 in the tree where every degree is b+1."""
    if b < 1 or depth < 0:
        raise InputError(f"Invalid homogeneous tree: b={b}, depth={depth}")
    size = 1 + (b + 1) * (depth if b == 1 else (b**depth - 1) // (b - 1))
    _check_budget(size, size - 1)
    graph = nx.Graph()
    graph.add_node(0)
    labels: dict[int, tuple] = {0: ()}
    frontier = [0]
    for level in range(depth):
        nxt = []
        for v in frontier:
            for i in range(b + 1 if level == 0 else b):
                child = graph.number_of_nodes()
                graph.add_edge(v, child)
                labels[child] = labels[v] + (i,)
                nxt.append(child)
        frontier = nxt
    return Graph(
        graph,
        degree_bound=b,
        boundary=frontier,
        labels=labels,
        family=f"homogeneous_tree:{b},{depth}",
        margin=depth,
        exact_metric=True,
        window_note=f"ball of radius {depth} in the homogeneous tree of degree {b + 1}",
    )


def random_tree(b: int, depth: int, seed: int, branching: float = 0.5) -> Graph:
    """Random rooted tree window: every vertex above the bottom level has 1..b children.

    Vertex 0 is the top; it stands for the direction of the fixed half-infinite
    geodesic, so it is a boundary vertex along with the bottom level.
    """
    if b < 1 or depth < 0:
        raise InputError(f"Invalid random tree: b={b}, depth={depth}")
    if not 0.0 <= branching <= 1.0:
        raise InputError(f"Branching must be in [0, 1], got {branching}")
    rng = np.random.default_rng(seed)
    graph = nx.Graph()
    graph.add_node(0)
    labels: dict[int, tuple] = {0: ()}
    frontier = [0]
    for _ in range(depth):
        counts = 1 + rng.binomial(b - 1, branching, size=len(frontier))
        _check_budget(graph.number_of_nodes() + int(counts.sum()), graph.number_of_nodes() + int(counts.sum()))
        nxt = []
        for v, count in zip(frontier, counts):
            for i in range(int(count)):
                child = graph.number_of_nodes()
                graph.add_edge(v, child)
                labels[child] = labels[v] + (i,)
                nxt.append(child)
        frontier = nxt
    return Graph(
        graph,
        degree_bound=b,
        boundary=set(frontier) | {0},
        labels=labels,
        family=f"random_tree:{b},{depth},{branching}",
        seed=seed,
        margin=depth,
        exact_metric=True,
        window_note=f"random tree window of depth {depth}, at most {b} children per vertex",
    )


def cycle(n: int) -> Graph:
    if n < 3:
        raise InputError(f"Cycle needs n >= 3, got {n}")
    _check_budget(n, n)
    return Graph(nx.cycle_graph(n), degree_bound=1, family=f"cycle:{n}", window_note=f"cycle on {n} vertices")


def path(n: int) -> Graph:
    """Finite path on n vertices, a graph in its own right."""
    if n < 2:
        raise InputError(f"Path needs n >= 2, got {n}")
    _check_budget(n, n - 1)
    return Graph(nx.path_graph(n), degree_bound=1, family=f"path:{n}", window_note=f"path on {n} vertices")


def random_bounded(n: int, b: int, extra: int | None = None, *, seed: int = 0) -> Graph:
    """Random connected finite graph with every degree at most b+1.

    A random recursive tree respecting the degree cap, plus up to ``extra``
    random chords (default n // 4) between vertices with spare degree.
    """
    if n < 2 or b < 1:
        raise InputError(f"Invalid bounded graph: n={n}, b={b}")
    extra = n // 4 if extra is None else extra
    _check_budget(n, n - 1 + extra)
    rng = np.random.default_rng(seed)
    cap = b + 1
    graph = nx.Graph()
    graph.add_node(0)
    open_slots = [0]
    for v in range(1, n):
        u = open_slots[int(rng.integers(len(open_slots)))]
        graph.add_edge(v, u)
        if graph.degree[u] >= cap:
            open_slots.remove(u)
        open_slots.append(v)
    for _ in range(extra):
        spare = [u for u in range(n) if graph.degree[u] < cap]
        if len(spare) < 2:
            break
        u, w = (int(x) for x in rng.choice(spare, size=2, replace=False))
        graph.add_edge(u, w)
    return Graph(
        graph,
        degree_bound=b,
        family=f"random_bounded:{n},{b},{extra}",
        seed=seed,
        window_note=f"random connected graph, {n} vertices, degree <= {cap}",
    )


# ---------------------------------------------------------------------------
# Serialization


def write_edge_list(g: Graph, path: Path) -> None:
    lines = [g.header()]
    lines += [f"{u} {v}" for u, v in sorted(tuple(sorted(e)) for e in g.nx_graph.edges)]
    if g.n_edges == 0:
        lines.append(str(g.order[0]))
    path.write_text("\n".join(lines) + "\n")


def read_edge_list(path: Path) -> Graph:
    """Read a newline-delimited edge list written by write_edge_list."""
    meta: dict[str, str] = {}
    graph = nx.Graph()
    for number, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            for token in text.lstrip("#").split():
                key, _, value = token.partition("=")
                meta[key] = value
            continue
        fields = text.split()
        try:
            ids = [int(x) for x in fields]
        except ValueError:
            raise InputError(f"{path}:{number}: malformed line {raw!r}") from None
        if len(ids) == 1:
            graph.add_node(ids[0])
        elif len(ids) == 2:
            if ids[0] == ids[1]:
                raise InputError(f"{path}:{number}: self-loop on {ids[0]}")
            graph.add_edge(*ids)
        else:
            raise InputError(f"{path}:{number}: expected 'u v', got {raw!r}")
    seed = meta.get("seed")
    return Graph(
        graph,
        degree_bound=int(meta["degree_bound"]) if "degree_bound" in meta else None,
        boundary=[int(v) for v in meta["boundary"].split(",")] if meta.get("boundary") else (),
        family=meta.get("family", "custom"),
        seed=int(seed) if seed not in (None, "None") else None,
        margin=int(meta.get("margin", 0)),
        exact_metric=meta.get("exact_metric") == "1",
        window_note=f"read from {Path(path).name}",
    )

"""Optimal Poincare constants of finite regions: ascent estimates and exact p = 2 brackets.

The constant of (E, mu, p) is the supremum over nonconstant f of
||f - f_E||_p / ||grad f||_p. ``estimate_constant`` finds a witnessed lower
bound by projected subgradient ascent. ``certify_constant_p2`` closes the
bracket for p = 2 by walking the faces of the sign cones of the edge
differences: on each cone the squared gradient norm is a quadratic form, so
the cone maximum is a generalized eigenvalue attained inside the cone or a
maximum over a smaller face.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from scipy.optimize import linprog

from graphpoincare.calculus import Exponent, VertexFunction, poincare_ratio
from graphpoincare.config import (
    CERTIFIER_FACE_BUDGET,
    CERTIFIER_MAX_EDGES,
    DEFAULT_ITERATIONS,
    DEFAULT_RESTARTS,
)
from graphpoincare.errors import InputError, PoincareError, SizeError
from graphpoincare.graphs import Graph, Region, tree_ball_center
from graphpoincare.measures import Measure
from graphpoincare.pool import trial_rng

logger = logging.getLogger(__name__)

P2 = Exponent(2.0)

# Geodesic starting points tried before random restarts
MAX_GEODESIC_STARTS = 16
STEP_SIZE = 0.3
# Relative gain below which a new iterate does not replace the best one
IMPROVEMENT = 4 * np.finfo(float).eps
# Eigenvalue and cone tolerances of the certifier
SPECTRAL_TOLERANCE = 1e-10
CONE_TOLERANCE = 1e-9


class ConstantEstimate(BaseModel):
    """Bracket on the optimal Poincare constant of one region."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    lower: float
    upper: float | None = None
    witness: dict[int, float] = Field(default_factory=dict)
    p: str
    seed: int
    restarts: int
    iterations: int
    faces: int | None = None
    complete: bool | None = None
    note: str | None = None


@dataclass
class _Layout:
    """Variables of the ratio problem over E and the halo vertices that matter."""

    variables: list[int]
    n_members: int
    weights: np.ndarray
    edges: list[tuple[int, int]]
    pinned: dict[int, int]

    @property
    def term_owner(self) -> np.ndarray:
        return self._terms[0]

    @property
    def term_a(self) -> np.ndarray:
        return self._terms[1]

    @property
    def term_b(self) -> np.ndarray:
        return self._terms[2]

    def __post_init__(self):
        owner, a, b = [], [], []
        for u, v in self.edges:
            if u < self.n_members:
                owner.append(u), a.append(u), b.append(v)
            if v < self.n_members:
                owner.append(v), a.append(v), b.append(u)
        self._terms = (np.array(owner, dtype=int), np.array(a, dtype=int), np.array(b, dtype=int))

    def to_function(self, values: np.ndarray) -> dict[int, float]:
        f = {v: float(x) for v, x in zip(self.variables, values)}
        for h, x in self.pinned.items():
            f[h] = f[x]
        return f

    def from_function(self, f: VertexFunction) -> np.ndarray:
        return np.array([float(f.get(v, 0.0)) for v in self.variables])


def _layout(g: Graph, e: Region, m: Measure) -> _Layout:
    """Halo vertices with a single neighbor in E are pinned to that neighbor."""
    members = e.sorted_members()
    member_set = e.members
    pinned = {}
    kept = []
    for h in sorted(e.halo - member_set):
        inside = [x for x in g.neighbors(h) if x in member_set]
        if len(inside) == 1:
            pinned[h] = inside[0]
        else:
            kept.append(h)
    variables = members + kept
    pos = {v: i for i, v in enumerate(variables)}
    edges = set()
    for x in members:
        for y in g.neighbors(x):
            if y in pinned:
                continue
            edges.add(tuple(sorted((pos[x], pos[y]))))
    weights = np.array([m.weight(x) for x in members])
    return _Layout(variables=variables, n_members=len(members), weights=weights, edges=sorted(edges), pinned=pinned)


class _Objective:
    """Ratio N/D and a subgradient, in numpy over the layout's variables."""

    def __init__(self, layout: _Layout, p: Exponent):
        self.layout = layout
        self.p = p
        self.w = layout.weights
        self.total = float(self.w.sum())
        self.nE = layout.n_members
        self.nV = len(layout.variables)

    def _parts(self, f: np.ndarray):
        lay = self.layout
        g = f[: self.nE] - float(self.w @ f[: self.nE]) / self.total
        diff = f[lay.term_a] - f[lay.term_b]
        G = np.bincount(lay.term_owner, weights=np.abs(diff), minlength=self.nE)
        return g, diff, G

    def norms(self, f: np.ndarray) -> tuple[float, float]:
        g, _, G = self._parts(f)
        if self.p.is_infinite:
            return float(np.abs(g).max()), float(G.max())
        q = self.p.value
        return float(self.w @ np.abs(g) ** q) ** (1 / q), float(self.w @ G**q) ** (1 / q)

    def ratio(self, f: np.ndarray) -> float:
        N, D = self.norms(f)
        if N == 0:
            return 0.0
        return N / D if D else math.inf

    def subgradient(self, f: np.ndarray) -> tuple[float, np.ndarray]:
        lay = self.layout
        g, diff, G = self._parts(f)
        s = np.sign(diff)
        dN = np.zeros(self.nV)
        if self.p.is_infinite:
            N = float(np.abs(g).max())
            D = float(G.max())
            i = int(np.argmax(np.abs(g)))
            dN[: self.nE] = -np.sign(g[i]) * self.w / self.total
            dN[i] += np.sign(g[i])
            coef = (lay.term_owner == int(np.argmax(G))).astype(float)
        else:
            q = self.p.value
            N = float(self.w @ np.abs(g) ** q) ** (1 / q)
            D = float(self.w @ G**q) ** (1 / q)
            if N == 0 or D == 0:
                return 0.0, dN
            cN = N ** (1 - q) * self.w * np.abs(g) ** (q - 1) * np.sign(g)
            dN[: self.nE] = cN - self.w / self.total * cN.sum()
            cD = D ** (1 - q) * self.w * G ** (q - 1)
            coef = cD[lay.term_owner]
        if D == 0:
            return 0.0, dN
        flow = coef * s
        dD = np.bincount(lay.term_a, weights=flow, minlength=self.nV) - np.bincount(
            lay.term_b, weights=flow, minlength=self.nV
        )
        return N / D, (dN * D - N * dD) / D**2

    def normalize(self, f: np.ndarray) -> np.ndarray | None:
        f = f - float(self.w @ f[: self.nE]) / self.total
        _, D = self.norms(f)
        if D == 0 or not math.isfinite(D):
            return None
        return f / D


def _geodesic_starts(g: Graph, e: Region, layout: _Layout) -> list[np.ndarray]:
    members = e.sorted_members()
    if len(members) > MAX_GEODESIC_STARTS:
        picks = np.linspace(0, len(members) - 1, MAX_GEODESIC_STARTS).round().astype(int)
        members = [members[i] for i in sorted(set(picks))]
    starts = []
    cutoff = e.diam + 2
    for x in members:
        dist = nx.single_source_shortest_path_length(g.nx_graph, x, cutoff=cutoff)
        starts.append(np.array([float(dist.get(v, cutoff)) for v in layout.variables]))
    return starts


def _extremal_starts(g: Graph, e: Region, m: Measure, p: Exponent) -> list[VertexFunction]:
    """The tree-ball construction as one more start when E is a ball of a forest window."""
    center = tree_ball_center(g, e)
    if center is None:
        return []
    from graphpoincare.services.extremal import extremal_start

    try:
        start = extremal_start(g, e, center, m, p)
    except PoincareError as exc:
        logger.debug("No extremal start around %d: %s", center, exc)
        return []
    return [start] if start is not None else []


def _ascend(objective: _Objective, start: np.ndarray, iterations: int) -> tuple[float, np.ndarray]:
    f = objective.normalize(start)
    if f is None:
        return 0.0, start
    best, best_f = objective.ratio(f), f.copy()
    for t in range(1, iterations + 1):
        _, grad = objective.subgradient(f)
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0 or not math.isfinite(gnorm):
            break
        step = STEP_SIZE / math.sqrt(t) * float(np.linalg.norm(f)) / gnorm
        moved = objective.normalize(f + step * grad)
        if moved is None:
            break
        f = moved
        value = objective.ratio(f)
        if value > best * (1 + IMPROVEMENT):
            best, best_f = value, f.copy()
    return best, best_f


def estimate_constant(
    g: Graph,
    e: Region,
    m: Measure,
    p: Exponent,
    seed: int,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERATIONS,
    starts: list[VertexFunction] | None = None,
) -> ConstantEstimate:
    """Best ratio found by projected subgradient ascent.

    Starts are, in order: graph-distance functions from members of E, the
    tree-ball construction when E is a ball of a forest window, any
    supplied ``starts``, then ``restarts`` random starts whose seeds derive
    from (seed, restart index). The returned ``lower`` is the ratio of the
    returned witness as evaluated by poincare_ratio.
    """
    if restarts < 0 or iters < 0:
        raise InputError("restarts and iterations must be non-negative")
    layout = _layout(g, e, m)
    if layout.n_members == 1:
        f = layout.to_function(np.zeros(len(layout.variables)))
        return ConstantEstimate(lower=0.0, witness=f, p=str(p), seed=seed, restarts=restarts, iterations=iters)

    objective = _Objective(layout, p)
    candidates = _geodesic_starts(g, e, layout)
    candidates += [layout.from_function(s) for s in _extremal_starts(g, e, m, p) + list(starts or [])]
    for i in range(restarts):
        candidates.append(trial_rng(seed, i).standard_normal(len(layout.variables)))

    best, best_f = -1.0, None
    for start in candidates:
        value, f = _ascend(objective, start, iters)
        if best_f is None or value > best * (1 + IMPROVEMENT):
            best, best_f = value, f
    witness = layout.to_function(best_f)
    lower = poincare_ratio(g, witness, e, m, p)
    logger.debug("Ascent over %d starts: best %.12g", len(candidates), lower)
    return ConstantEstimate(lower=lower, witness=witness, p=str(p), seed=seed, restarts=restarts, iterations=iters)


# ---------------------------------------------------------------------------
# Exact p = 2 certifier


@dataclass(frozen=True)
class _Face:
    """Functions constant on each class of ``parts`` and ordered along ``active``.

    ``active`` holds edges (hi, lo) of variable indices whose classes differ,
    constrained by f[hi] >= f[lo].
    """

    parts: tuple[int, ...]
    active: tuple[tuple[int, int], ...]

    def key(self):
        return self.parts, self.active


def _canonical_parts(parts: list[int]) -> tuple[int, ...]:
    first: dict[int, int] = {}
    return tuple(first.setdefault(c, i) for i, c in enumerate(parts))


def _acyclic(parts: tuple[int, ...], active) -> bool:
    dag = nx.DiGraph()
    dag.add_edges_from((parts[hi], parts[lo]) for hi, lo in active)
    return nx.is_directed_acyclic_graph(dag)


def _contract(face: _Face, edge: tuple[int, int], oriented: list[tuple[int, int]]) -> _Face | None:
    keep, gone = face.parts[edge[0]], face.parts[edge[1]]
    parts = _canonical_parts([keep if c == gone else c for c in face.parts])
    active = tuple((hi, lo) for hi, lo in oriented if parts[hi] != parts[lo])
    if not _acyclic(parts, active):
        return None
    return _Face(parts, active)


class _Pencil:
    """Quadratic forms of the p = 2 problem restricted to faces."""

    def __init__(self, layout: _Layout):
        self.layout = layout
        nV, nE = len(layout.variables), layout.n_members
        w = layout.weights
        self.A = np.zeros((nV, nV))
        self.A[:nE, :nE] = np.diag(w) - np.outer(w, w) / w.sum()
        self.mean_row = np.zeros(nV)
        self.mean_row[:nE] = w

    def gradient_form(self, oriented) -> np.ndarray:
        lay = self.layout
        nV, nE = len(lay.variables), lay.n_members
        S = np.zeros((nE, nV))
        for hi, lo in oriented:
            for owner in (hi, lo):
                if owner < nE:
                    S[owner, hi] += 1.0
                    S[owner, lo] -= 1.0
        return S.T @ (lay.weights[:, None] * S)

    def spectrum(self, face: _Face, oriented) -> tuple[float, list[tuple[float, np.ndarray]]]:
        """Largest eigenvalue on the face span and the finite eigenpairs, descending."""
        rows = [self.mean_row]
        nV = len(face.parts)
        rep: dict[int, int] = {}
        for v, c in enumerate(face.parts):
            if c in rep:
                row = np.zeros(nV)
                row[v], row[rep[c]] = 1.0, -1.0
                rows.append(row)
            else:
                rep[c] = v
        Z = linalg.null_space(np.vstack(rows))
        if Z.shape[1] == 0:
            return 0.0, []
        B_full = self.gradient_form(oriented)
        A, B = Z.T @ self.A @ Z, Z.T @ B_full @ Z
        sw, sv = linalg.eigh(A + B)
        keep = sw > SPECTRAL_TOLERANCE * max(float(sw.max()), 1.0)
        if not keep.any():
            return 0.0, []
        Y = sv[:, keep]
        Z, A, B = Z @ Y, Y.T @ A @ Y, Y.T @ B @ Y
        bw = linalg.eigvalsh(B)
        if bw.min() > SPECTRAL_TOLERANCE * max(float(bw.max()), 1.0):
            lam, vec = linalg.eigh(A, B)
            pairs = [(float(lam[i]), Z @ vec[:, i]) for i in range(len(lam) - 1, -1, -1)]
            return pairs[0][0], pairs
        lam, vec = linalg.eig(A, B)
        pairs = []
        for i, value in enumerate(lam):
            if np.isfinite(value) and abs(value.imag) <= SPECTRAL_TOLERANCE * max(abs(value.real), 1.0):
                pairs.append((float(value.real), Z @ np.real(vec[:, i])))
        pairs.sort(key=lambda pair: -pair[0])
        return math.inf, pairs


def _in_cone(f: np.ndarray, active) -> bool:
    scale = float(np.abs(f).max())
    if scale == 0:
        return False
    return all(f[hi] - f[lo] >= -CONE_TOLERANCE * scale for hi, lo in active)


def _interior_point(basis: np.ndarray, active) -> np.ndarray | None:
    """A combination of basis columns strictly inside the cone, if one exists."""
    k = basis.shape[1]
    G = np.array([basis[hi] - basis[lo] for hi, lo in active])
    # maximize t subject to G c >= t, -1 <= c <= 1, t <= 1
    c_obj = np.zeros(k + 1)
    c_obj[-1] = -1.0
    A_ub = np.hstack([-G, np.ones((len(active), 1))])
    res = linprog(
        c_obj,
        A_ub=A_ub,
        b_ub=np.zeros(len(active)),
        bounds=[(-1, 1)] * k + [(None, 1)],
        method="highs",
    )
    if res.status != 0 or -res.fun <= CONE_TOLERANCE:
        return None
    return basis @ res.x[:k]


def _eigen_groups(pairs: list[tuple[float, np.ndarray]]):
    groups: list[tuple[float, list[np.ndarray]]] = []
    for value, vector in pairs:
        if groups and abs(groups[-1][0] - value) <= 1e-8 * max(abs(value), 1.0):
            groups[-1][1].append(vector)
        else:
            groups.append((value, [vector]))
    return groups


def certify_constant_p2(
    g: Graph,
    e: Region,
    m: Measure,
    *,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERATIONS,
    max_edges: int = CERTIFIER_MAX_EDGES,
    face_budget: int = CERTIFIER_FACE_BUDGET,
) -> ConstantEstimate:
    """Bracket the p = 2 constant between a witnessed lower and a proven upper bound.

    Sign patterns range over acyclic orientations of the edges touching E
    (pinned halo edges removed), one of each pair f, -f. A face is pruned
    once its largest eigenvalue cannot beat the best witnessed value. When
    every face is processed the bracket is closed up to rounding.

    Raises:
        SizeError: more than ``max_edges`` edges remain
    """
    layout = _layout(g, e, m)
    if len(layout.edges) > max_edges:
        raise SizeError(
            f"Region has {len(layout.edges)} edges after pruning (limit {max_edges}); use estimate_constant"
        )
    estimate = estimate_constant(g, e, m, P2, seed, restarts, iters)
    if layout.n_members == 1:
        return estimate.model_copy(update={"upper": 0.0, "faces": 0, "complete": True})

    pencil = _Pencil(layout)
    edges = layout.edges
    best = estimate.lower**2
    best_f: np.ndarray | None = None
    unresolved = 0.0
    faces = 0
    seen: set = set()
    identity = tuple(range(len(layout.variables)))

    stack: list[tuple[_Face, float]] = []
    for signs in itertools.product((1, -1), repeat=len(edges) - 1):
        oriented = tuple(
            (u, v) if s > 0 else (v, u) for (u, v), s in zip(edges, (1, *signs))
        )
        if _acyclic(identity, oriented):
            stack.append((_Face(identity, oriented), math.inf))

    while stack:
        face, inherited = stack.pop()
        if face.key() in seen or inherited <= best:
            continue
        seen.add(face.key())
        if faces >= face_budget:
            unresolved = max(unresolved, inherited)
            continue
        faces += 1
        top, pairs = pencil.spectrum(face, face.active)
        if top <= best:
            continue
        for value, vectors in _eigen_groups(pairs):
            if value <= best:
                break
            found = None
            for vec in vectors:
                for cand in (vec, -vec):
                    if _in_cone(cand, face.active):
                        found = cand
                        break
                if found is not None:
                    break
            if found is None and len(vectors) > 1:
                found = _interior_point(np.column_stack(vectors), face.active)
            if found is not None:
                best, best_f = value, found
                break
        if top <= best:
            continue
        for edge in face.active:
            child = _contract(face, edge, list(face.active))
            if child is not None and child.key() not in seen:
                stack.append((child, top))

    complete = unresolved == 0.0
    witness, lower = estimate.witness, estimate.lower
    if best_f is not None:
        candidate = layout.to_function(best_f)
        value = poincare_ratio(g, candidate, e, m, P2)
        if value > lower:
            witness, lower = candidate, value
    upper = max(math.sqrt(max(best, unresolved)), lower)
    logger.debug("Certifier visited %d faces, complete=%s", faces, complete)
    return estimate.model_copy(
        update={
            "lower": lower,
            "upper": upper if math.isfinite(upper) else None,
            "witness": witness,
            "faces": faces,
            "complete": complete,
            "note": None if complete else "face budget exhausted; upper bound is partial",
        }
    )

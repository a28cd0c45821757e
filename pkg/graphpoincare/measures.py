"""Vertex measures, boundedness classes and doubling constants."""

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel

from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import Graph, Region, distances

MeasureKind = Literal["counting", "flow", "custom"]


@dataclass(frozen=True)
class Measure:
    """Strictly positive weight per vertex.

    ``alpha`` and ``beta`` are the infimum and supremum of the weights. They
    are taken from the window unless the constructor knows the analytic
    values; ``alpha == 0`` records a measure not bounded below by any
    positive constant.
    """

    weights: Mapping[int, float] = field(default_factory=dict)
    default: float | None = None
    alpha: float | None = None
    beta: float | None = None
    kind: MeasureKind = "custom"

    def weight(self, vertex: int) -> float:
        value = self.weights.get(vertex, self.default)
        if value is None:
            raise InputError(f"Measure has no weight at vertex {vertex}")
        return value

    def mass(self, vertices: Iterable[int]) -> float:
        return math.fsum(self.weight(v) for v in vertices)

    def scaled(self, factor: float) -> "Measure":
        if factor <= 0:
            raise InputError(f"Scale factor must be positive, got {factor}")
        return Measure(
            weights={v: w * factor for v, w in self.weights.items()},
            default=None if self.default is None else self.default * factor,
            alpha=None if self.alpha is None else self.alpha * factor,
            beta=None if self.beta is None else self.beta * factor,
            kind="custom" if self.kind == "counting" and factor != 1 else self.kind,
        )

    def in_class(self, alpha: float | None = None, beta: float | None = None) -> bool:
        """Membership in the class bounded below by alpha and above by beta."""
        if alpha is not None and (self.alpha is None or self.alpha < alpha or alpha <= 0):
            return False
        if beta is not None and (self.beta is None or self.beta > beta):
            return False
        return True

    def to_json(self) -> str:
        payload = {str(v): w for v, w in sorted(self.weights.items())}
        meta = {"alpha": self.alpha, "beta": self.beta, "kind": self.kind}
        if self.default is not None:
            meta["default"] = self.default
        return json.dumps({"weights": payload, **meta}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Measure":
        data = json.loads(text)
        weights = {int(v): float(w) for v, w in data.get("weights", {}).items()}
        if data.get("kind") == "counting" and not weights:
            return counting()
        return from_weights(weights, alpha=data.get("alpha"), beta=data.get("beta"), kind=data.get("kind", "custom"))


def counting() -> Measure:
    """Weight 1 at every vertex."""
    return Measure(default=1.0, alpha=1.0, beta=1.0, kind="counting")


def from_weights(
    weights: Mapping[int, float],
    *,
    alpha: float | None = None,
    beta: float | None = None,
    kind: MeasureKind = "custom",
) -> Measure:
    """Validate weights and attach alpha/beta (window extremes unless given)."""
    if not weights:
        raise InputError("Measure needs at least one weight")
    bad = [v for v, w in weights.items() if not (w > 0 and math.isfinite(w))]
    if bad:
        raise InputError(f"Weight at vertex {min(bad)} is not strictly positive: {weights[min(bad)]}")
    low, high = min(weights.values()), max(weights.values())
    alpha = low if alpha is None else alpha
    beta = high if beta is None else beta
    if alpha < 0 or alpha > low or beta < high:
        raise InputError(f"Bounds alpha={alpha}, beta={beta} do not enclose the weights [{low}, {high}]")
    return Measure(weights=dict(weights), alpha=alpha, beta=beta, kind=kind)


def inverse_distance(g: Graph, origin: int) -> Measure:
    """Weight 1/d(x, origin), and 1 at the origin; not bounded below by any alpha > 0."""
    dist = distances(g, origin, len(g)) if g.exact_metric else None
    if dist is None:
        raise WindowError("Inverse-distance measure needs a window with exact distances")
    weights = {v: 1.0 if d == 0 else 1.0 / d for v, d in dist.items()}
    return from_weights(weights, alpha=0.0, beta=1.0)


def uniform_random(g: Graph, alpha: float, rng: np.random.Generator, spread: float = 10.0) -> Measure:
    """Independent weights drawn uniformly from [alpha, spread * alpha]."""
    if alpha <= 0 or spread < 1:
        raise InputError(f"Invalid random measure: alpha={alpha}, spread={spread}")
    values = rng.uniform(alpha, spread * alpha, size=len(g))
    weights = {v: float(w) for v, w in zip(g.order, values)}
    return from_weights(weights, alpha=alpha, beta=spread * alpha)


def region_mass(m: Measure, e: Region) -> float:
    """Total measure of a region."""
    return m.mass(sorted(e.members))


def ball_size_bound(b: int, r: int) -> int:
    """Upper bound on |B_r(x)| in a graph of degree at most b+1.

    3 b^r for b >= 2; on graphs of degree at most 2 balls grow linearly and
    the bound is 2r + 1.
    """
    if b < 1 or r < 0:
        raise InputError(f"Invalid ball bound arguments b={b}, r={r}")
    if b == 1:
        return 2 * r + 1
    return 3 * b**r


class DoublingReport(BaseModel):
    """Largest observed ratio mu(B_2r)/mu(B_r) over centers and radii 0..R."""

    R: int
    D_of_R: float
    centers_used: int
    per_radius: list[float]
    bound: float | None = None
    within_bound: bool | None = None


def doubling_constant(g: Graph, m: Measure, R: int, centers: Iterable[int]) -> DoublingReport:
    """Empirical local doubling constant at scale R.

    Radii range over integers 0..R; balls only change at integer radii.
    """
    if R < 0:
        raise InputError(f"R must be >= 0, got {R}")
    centers = sorted(set(centers))
    if not centers:
        raise InputError("No centers given")
    per_radius = [1.0] * (R + 1)
    for x in centers:
        dist = distances(g, x, 2 * R)
        cut = [d for v, d in dist.items() if v in g.boundary and d < 2 * R]
        if cut:
            raise WindowError(f"Ball B_{2 * R}({x}) is truncated by the window")
        shells: dict[int, list[int]] = {}
        for v, d in dist.items():
            shells.setdefault(d, []).append(v)
        masses = []
        running = 0.0
        for d in range(2 * R + 1):
            running += m.mass(sorted(shells.get(d, [])))
            masses.append(running)
        for r in range(R + 1):
            per_radius[r] = max(per_radius[r], masses[2 * r] / masses[r])

    D = max(per_radius)
    bound = within = None
    if g.degree_bound is not None and m.alpha and m.beta is not None:
        bound = (m.beta / m.alpha) * 3 * g.degree_bound ** (2 * R)
        within = D <= bound * (1 + 1e-9)
    return DoublingReport(
        R=R, D_of_R=D, centers_used=len(centers), per_radius=per_radius, bound=bound, within_bound=within
    )


class DegreeDoublingReport(BaseModel):
    """Consistency of degrees with the doubling constant at radius one half."""

    bounded_below: bool
    max_degree: int
    D_half: float
    holds: bool | None
    message: str


def degree_doubling_relation(g: Graph, m: Measure) -> DegreeDoublingReport:
    """Check deg(x) + 1 = |B_1(x)| <= mu(B_1(x))/alpha <= D(1/2) beta/alpha.

    D(1/2) is the largest mu(B_1(x))/mu(x), the ball of radius one half being
    the vertex itself. Only complete vertices are inspected.
    """
    inner = [x for x in g.order if g.is_complete(x)]
    if not inner:
        raise WindowError("Window has no complete vertex")
    ratios = {x: m.mass((x, *g.neighbors(x))) / m.weight(x) for x in inner}
    D_half = max(ratios.values())
    max_degree = max(g.degree(x) for x in inner)
    if not m.alpha:
        return DegreeDoublingReport(
            bounded_below=False,
            max_degree=max_degree,
            D_half=D_half,
            holds=None,
            message="not in M_alpha for any alpha > 0",
        )
    tol = 1 + 1e-9
    holds = all(
        g.degree(x) + 1 <= m.mass((x, *g.neighbors(x))) / m.alpha * tol
        and g.degree(x) + 1 <= D_half * m.beta / m.alpha * tol
        for x in inner
    )
    return DegreeDoublingReport(
        bounded_below=True,
        max_degree=max_degree,
        D_half=D_half,
        holds=holds,
        message="degree bound consistent with doubling" if holds else "degree exceeds doubling bound",
    )

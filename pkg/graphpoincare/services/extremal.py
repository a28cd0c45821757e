"""Extremal functions on tree balls and the optimality sweep.

On a ball B = B_r(x0) of a tree with degrees between 2 and b+1 and a measure
bounded above and below, explicit functions come within constant factors of
the quasiconvex bound: for p = inf one of size r/(b+1), for finite p one of
size about mu(B)^(1/p). The construction splits B minus its center into
triangles below the neighbors of x0.
"""

import math
from typing import Literal

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console

from graphpoincare.calculus import Exponent, VertexFunction, poincare_ratio, weighted_mean
from graphpoincare.config import (
    BOUNDED_RATIO_LIMIT,
    EXPONENTIAL_SLOPE_TOLERANCE,
    MIN_R_SQUARED,
    THEOREM_TOLERANCE,
    RunConfig,
)
from graphpoincare.engine import bounded_ratio, thm21_bound
from graphpoincare.errors import InputError
from graphpoincare.graphs import Graph, Region, ball, homogeneous_tree, parse_family, random_tree
from graphpoincare.measures import Measure, counting, region_mass, uniform_random
from graphpoincare.pool import derive_seed, trial_rng
from graphpoincare.services.utils import (
    FamilyVerdict,
    SweepResult,
    combine,
    now,
    parse_exponents,
    slope_checks,
    write_csv,
    write_json,
    write_meta,
)
from graphpoincare.trees import RootedTree, Triangle, balanced_split, root_tree, triangle

console = Console(stderr=True)

PROP34_HEADER = ("r", "p", "ratio", "guaranteed", "mass", "constant", "degenerate")
THM35_HEADER = ("r", "p", "lower", "upper", "reference", "lower_scaled", "upper_scaled", "ball_mass_spread")

SPLIT_CHECKS = 100
SPLIT_TREE_DEPTH = 10
SPLIT_MEASURE_SPREAD = 10.0
# Ball centers sampled per radius on random trees
MAX_CENTERS = 8


class ExtremalFunction(BaseModel):
    """A constructed near-extremal function on a ball and what it achieves."""

    center: int
    r: int
    p: str
    degenerate: bool = False
    ratio: float | None = None
    guaranteed: float | None = None
    holds: bool | None = None
    mass: float
    mean: float | None = None
    mean_zero: bool | None = None
    constant: float | None = None
    function: dict[int, float] = Field(default_factory=dict, repr=False)


def _extend_to_halo(g: Graph, e: Region, f: dict[int, float]) -> dict[int, float]:
    """Copy values across the edges leaving the ball so they add no gradient."""
    for h in sorted(e.halo - e.members):
        inside = [y for y in g.neighbors(h) if y in e.members]
        f[h] = f[inside[0]]
    return f


def _ranked(tris: list[Triangle], key) -> list[Triangle]:
    return sorted(tris, key=lambda tri: (-key(tri), tri.x0))


def _sup_function(m: Measure, tris: list[Triangle]) -> dict[int, float]:
    """d(x, center) on the first triangle, -C d(x, center) on the second, 0 elsewhere."""

    def moment(tri: Triangle) -> float:
        return math.fsum(
            (depth + 1) * m.weight(v) for depth, layer in enumerate(tri.layers) for v in layer
        )

    first, second = _ranked(tris, moment)[:2]
    scale = moment(first) / moment(second)
    f: dict[int, float] = {}
    for depth, layer in enumerate(first.layers):
        for v in layer:
            f[v] = float(depth + 1)
    for depth, layer in enumerate(second.layers):
        for v in layer:
            f[v] = -scale * (depth + 1)
    return f


def _split_function(t: RootedTree, m: Measure, tris: list[Triangle]) -> dict[int, float] | None:
    """1 on the balanced subtriangle T', -mu(T')/mu(T_j - T') on the rest of T_j."""
    heaviest = _ranked(tris, lambda tri: m.mass(sorted(tri.members)))[0]
    if heaviest.height < 1:
        return None
    inner = balanced_split(t, m, heaviest)
    if inner is None:
        return None
    outer = sorted(heaviest.members - inner.members)
    q = m.mass(sorted(inner.members)) / m.mass(outer)
    f = {v: 1.0 for v in inner.members}
    f.update({v: -q for v in outer})
    return f


def guaranteed_constant(mass: float, b: int, alpha: float, beta: float, p: Exponent, r: int) -> float:
    """Lower bound the construction is proven to reach.

    r/(b+1) for p = inf. For finite p, the balanced subtriangle carries at
    least (mu(B) - beta)/((b+1)(1 + 3/2 (b + beta/alpha))), the function
    has |f| >= 1 there and its gradient is at most 5 on at most four
    vertices of weight at most beta.
    """
    if p.is_infinite:
        return r / (b + 1)
    inner = max(mass - beta, 0.0) / ((b + 1) * (1 + 1.5 * (b + beta / alpha)))
    return (inner / (4 * beta)) ** p.inverse / 5


def extremal_function(t: RootedTree, m: Measure, center: int, r: int, p: Exponent) -> ExtremalFunction:
    """Build the near-extremal function on B_r(center) and evaluate its ratio.

    The tree is re-rooted at ``center`` so that B_r(center) minus its center
    is the union of the triangles of height r-1 below the center's
    neighbors. The function is extended to the halo by copying along edges.

    Returns:
        ExtremalFunction; ``degenerate`` when r is too small for the split
    """
    g = t.graph
    if g.degree_bound is None:
        raise InputError("The construction needs a degree bound b")
    if not m.alpha or m.beta is None:
        raise InputError("The construction needs a measure bounded above and below")
    if r < 1:
        raise InputError(f"Radius must be >= 1, got {r}")
    rooted = t if t.top == center else root_tree(g, center)
    e = ball(g, center, r)
    mass = region_mass(m, e)
    tris = [triangle(rooted, c, r - 1) for c in rooted.children[center]]
    if len(tris) < 2:
        raise InputError(f"Center {center} has degree {len(tris)}; the construction needs >= 2")

    if p.is_infinite:
        values = _sup_function(m, tris)
    else:
        values = _split_function(rooted, m, tris)
        if values is None:
            return ExtremalFunction(center=center, r=r, p=str(p), degenerate=True, mass=mass)

    f = {x: values.get(x, 0.0) for x in e.sorted_members()}
    f = _extend_to_halo(g, e, f)
    mean = weighted_mean(f, e, m)
    scale = max(abs(v) for v in f.values())
    ratio = poincare_ratio(g, f, e, m, p)
    guaranteed = guaranteed_constant(mass, g.degree_bound, m.alpha, m.beta, p, r)
    return ExtremalFunction(
        center=center,
        r=r,
        p=str(p),
        ratio=ratio,
        guaranteed=guaranteed,
        holds=ratio >= guaranteed * (1 - THEOREM_TOLERANCE),
        mass=mass,
        mean=mean,
        mean_zero=abs(mean) <= THEOREM_TOLERANCE * scale,
        constant=ratio / mass**p.inverse,
        function=f,
    )


def extremal_start(g: Graph, e: Region, center: int, m: Measure, p: Exponent) -> VertexFunction | None:
    """Extremal function of a tree ball, used to seed the constant estimator."""
    radius = e.diam // 2
    result = extremal_function(root_tree(g, center), m, center, radius, p)
    return None if result.degenerate else result.function


def split_checks(seed: int, count: int = SPLIT_CHECKS, b: int = 2) -> dict:
    """Balanced-split guarantees on seeded triangles with random bounded measures."""
    g = homogeneous_tree(b, SPLIT_TREE_DEPTH)
    t = root_tree(g, 0)
    candidates = [v for v in g.order if v != t.top and t.level[v] >= 1]
    failures, degenerate = [], 0
    for i in range(count):
        rng = trial_rng(seed, i)
        m = uniform_random(g, 1.0, rng, SPLIT_MEASURE_SPREAD)
        x0 = candidates[int(rng.integers(len(candidates)))]
        height = int(rng.integers(1, t.level[x0] + 1))
        t0 = triangle(t, x0, height)
        inner = balanced_split(t, m, t0)
        if inner is None:
            degenerate += 1
            continue
        inside = m.mass(sorted(inner.members))
        rest = m.mass(sorted(t0.members - inner.members))
        tol = 1 + 1e-12
        ok = inside <= 2 * rest * tol and rest <= 1.5 * (b + m.beta / m.alpha) * inside * tol
        ok = ok and inner.base <= t0.base
        if not ok:
            failures.append({"trial": i, "x0": x0, "height": height})
    return {"checked": count, "degenerate": degenerate, "failures": failures}


class TreeSource(BaseModel):
    """Trees and measures the prop34 and thm35 sweeps run on."""

    kind: Literal["homogeneous_tree", "random_tree"] = "homogeneous_tree"
    b: int = 2
    branching: float = 0.5
    measure: Literal["counting", "uniform"] = "counting"
    seed: int = 0

    @classmethod
    def parse(cls, tree: str | None, measure: str | None = None, seed: int = 0) -> "TreeSource":
        """``homogeneous_tree:b`` or ``random_tree:b[,branching]``; default homogeneous_tree:2."""
        fields: dict = {"measure": measure or "counting", "seed": seed}
        if tree:
            spec = parse_family(tree)
            if spec.name == "homogeneous_tree" and len(spec.params) == 1:
                fields.update(kind=spec.name, b=int(spec.params[0]))
            elif spec.name == "random_tree" and len(spec.params) in (1, 2):
                fields.update(kind=spec.name, b=int(spec.params[0]))
                if len(spec.params) == 2:
                    fields["branching"] = float(spec.params[1])
            else:
                raise InputError("Tree sweeps take homogeneous_tree:b or random_tree:b[,branching]")
        if fields.get("b", 2) < 1:
            raise InputError(f"Invalid tree degree parameter b={fields['b']}")
        if not 0.0 <= fields.get("branching", 0.5) <= 1.0:
            raise InputError(f"Branching must be in [0, 1], got {fields['branching']}")
        return cls(**fields)

    @property
    def regular(self) -> bool:
        """Homogeneous tree with counting measure, where the growth rate is known exactly."""
        return self.kind == "homogeneous_tree" and self.measure == "counting"

    def label(self) -> str:
        tree = f"{self.kind}:{self.b}" + (f",{self.branching:g}" if self.kind == "random_tree" else "")
        return f"{tree} ({self.measure})"

    def instance(self, r: int) -> tuple[Graph, Measure, list[int]]:
        """Window, measure and ball centers for radius r; the first center carries the construction.

        Homogeneous trees use the root and its neighbors. Random trees of
        depth 2r+2 use up to MAX_CENTERS vertices halfway down, so every
        ball of radius r stays clear of the top and the bottom level.
        """
        rng = trial_rng(self.seed, r)
        if self.kind == "homogeneous_tree":
            g = homogeneous_tree(self.b, r + 2)
            centers = [0, *g.neighbors(0)]
        else:
            g = random_tree(self.b, 2 * r + 2, derive_seed(self.seed, r), self.branching)
            depth = nx.single_source_shortest_path_length(g.nx_graph, 0, cutoff=r + 1)
            middle = sorted(v for v, d in depth.items() if d == r + 1)
            picks = rng.choice(len(middle), size=min(MAX_CENTERS, len(middle)), replace=False)
            centers = [middle[int(i)] for i in picks]
        m = counting() if self.measure == "counting" else uniform_random(g, 1.0, rng, SPLIT_MEASURE_SPREAD)
        return g, m, centers


def _mass_spread(g: Graph, m: Measure, centers: list[int], r: int) -> float:
    return bounded_ratio([region_mass(m, ball(g, c, r)) for c in centers])


def extremal_sweep(source: TreeSource, r_values: list[int], p_values: list[Exponent]) -> list[SweepResult]:
    """Constructed ratios over r, with ball masses compared across sampled centers."""
    results = []
    for p in p_values:
        result = SweepResult(family="prop34", p=str(p))
        built, spreads = [], []
        for r in sorted(r_values):
            g, m, centers = source.instance(r)
            spreads.append(_mass_spread(g, m, centers, r))
            built.append(extremal_function(root_tree(g, centers[0]), m, centers[0], r, p))
        live = [x for x in built if not x.degenerate]
        result.rows = [
            {
                "r": x.r,
                "p": x.p,
                "ratio": x.ratio if not x.degenerate else 0.0,
                "guaranteed": x.guaranteed if not x.degenerate else 0.0,
                "mass": x.mass,
                "constant": x.constant if not x.degenerate else 0.0,
                "degenerate": x.degenerate,
            }
            for x in built
        ]
        result.checks["lower_bound"] = all(x.holds for x in live)
        result.checks["mean_zero"] = all(x.mean_zero for x in live)
        result.checks["ball_mass_comparable"] = max(spreads, default=1.0) <= BOUNDED_RATIO_LIMIT
        if len(live) < len(built):
            result.notes.append(f"{len(built) - len(live)} degenerate radii skipped")
        if not p.is_infinite and live and source.regular:
            constants = [x.constant for x in live]
            result.checks["constant_stable"] = min(constants) >= 0.5 * float(np.median(constants))
            result.notes.append(f"empirical constant min {min(constants):.4g}, median {np.median(constants):.4g}")
            slope_checks(
                result,
                [(x.r, x.ratio) for x in live],
                math.log2(source.b) * p.inverse,
                EXPONENTIAL_SLOPE_TOLERANCE,
                MIN_R_SQUARED,
                exponential=True,
            )
        results.append(result)
    return results


def optimality_sweep(source: TreeSource, r_values: list[int], p_values: list[Exponent]) -> list[SweepResult]:
    """Quasiconvex upper bound against constructed lower bound, both scaled by h(2r)^(1/p) (2r)^(1-1/p)."""
    bad = [str(p) for p in p_values if not (p.is_infinite or p.value == 1)]
    if bad:
        raise InputError(f"Optimality is only claimed for p in {{1, inf}}, got {', '.join(bad)}")
    results = []
    for p in p_values:
        result = SweepResult(family="thm35", p=str(p))
        lower_ok = True
        spreads = []
        for r in sorted(r_values):
            g, m, centers = source.instance(r)
            center = centers[0]
            e = ball(g, center, r)
            spread = _mass_spread(g, m, centers, r)
            spreads.append(spread)
            built = extremal_function(root_tree(g, center), m, center, r, p)
            upper = thm21_bound(e, m, m.alpha, p)
            reference = region_mass(m, e) ** p.inverse * e.diam ** (1 - p.inverse)
            lower = built.ratio if not built.degenerate else 0.0
            lower_ok = lower_ok and lower <= upper * (1 + THEOREM_TOLERANCE)
            result.rows.append(
                {
                    "r": r,
                    "p": str(p),
                    "lower": lower,
                    "upper": upper,
                    "reference": reference,
                    "lower_scaled": lower / reference,
                    "upper_scaled": upper / reference,
                    "ball_mass_spread": spread,
                }
            )
        live = [row for row in result.rows if row["lower"] > 0]
        result.checks["lower_below_upper"] = lower_ok
        result.checks["ball_mass_comparable"] = max(spreads, default=1.0) <= BOUNDED_RATIO_LIMIT
        if live:
            result.checks["lower_bounded_ratio"] = bounded_ratio([row["lower_scaled"] for row in live]) <= BOUNDED_RATIO_LIMIT
            result.checks["upper_bounded_ratio"] = bounded_ratio([row["upper_scaled"] for row in live]) <= BOUNDED_RATIO_LIMIT
        results.append(result)
    return results


def _report(sweeps: list[SweepResult]) -> None:
    for s in sweeps:
        colour = "green" if s.verdict == "pass" else "red"
        console.print(f"  p={s.p}: [{colour}]{s.verdict}[/]")


def reproduce_prop34(cfg: RunConfig, tree: str | None = None, measure: str | None = None) -> FamilyVerdict:
    """Run the extremal-function sweep and the balanced-split checks."""
    started = now()
    source = TreeSource.parse(tree, measure, cfg.seed)
    p_values = parse_exponents(cfg.p_list)

    console.print(f"[cyan]Step 1:[/cyan] Building extremal functions on {source.label()}, r in {cfg.r_values}...")
    sweeps = extremal_sweep(source, cfg.r_values, p_values)
    _report(sweeps)

    console.print(f"[cyan]Step 2:[/cyan] Checking {SPLIT_CHECKS} seeded balanced splits...")
    splits = split_checks(cfg.seed, b=max(source.b, 2))
    if splits["failures"]:
        console.print(f"  [red]{len(splits['failures'])} balanced splits broke their guarantees[/red]")
    else:
        console.print(f"  [dim]All splits hold ({splits['degenerate']} degenerate)[/dim]")

    write_csv(cfg.out / "prop34.csv", PROP34_HEADER, [row for s in sweeps for row in s.rows])
    details = {"tree": source.model_dump(), "balanced_split": splits}
    verdict = combine("prop34", cfg.seed, sweeps, details, extra_ok=not splits["failures"])
    write_json(cfg.out / "prop34.verdict.json", verdict)
    write_meta(cfg.out, "prop34", started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Extremal sweep complete![/bold green] Results in {cfg.out}")
    return verdict


def reproduce_thm35(cfg: RunConfig, tree: str | None = None, measure: str | None = None) -> FamilyVerdict:
    """Run the optimality sweep."""
    started = now()
    source = TreeSource.parse(tree, measure, cfg.seed)
    p_values = parse_exponents(cfg.p_list)

    console.print(f"[cyan]Step 1:[/cyan] Comparing upper and lower bounds on {source.label()}, r in {cfg.r_values}...")
    sweeps = optimality_sweep(source, cfg.r_values, p_values)
    _report(sweeps)

    write_csv(cfg.out / "thm35.csv", THM35_HEADER, [row for s in sweeps for row in s.rows])
    verdict = combine("thm35", cfg.seed, sweeps, {"tree": source.model_dump()})
    write_json(cfg.out / "thm35.verdict.json", verdict)
    write_meta(cfg.out, "thm35", started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Optimality sweep complete![/bold green] Results in {cfg.out}")
    return verdict

"""Optimal-constant estimation drivers behind ``estimate`` and ``sweep``."""

import math
from pathlib import Path

from rich.console import Console

from graphpoincare.calculus import Exponent
from graphpoincare.certify import P2, ConstantEstimate, certify_constant_p2, estimate_constant
from graphpoincare.config import BRACKET_TOLERANCE, THEOREM_TOLERANCE, RunConfig
from graphpoincare.engine import thm21_bound
from graphpoincare.errors import InputError, SizeError
from graphpoincare.graphs import Graph, Region, ball, classify_region, generate, read_edge_list
from graphpoincare.measures import Measure, counting, inverse_distance
from graphpoincare.services.utils import (
    FamilyVerdict,
    SweepResult,
    combine,
    now,
    parse_exponents,
    write_csv,
    write_json,
    write_meta,
)

console = Console(stderr=True)

SWEEP_HEADER = ("r", "p", "lower", "upper", "envelope")


def load_graph(graph: str | None, family: str | None, seed: int) -> Graph:
    if bool(graph) == bool(family):
        raise InputError("Give exactly one of --graph and --family")
    if graph:
        path = Path(graph)
        if not path.exists():
            raise InputError(f"Graph file not found: {path}")
        return read_edge_list(path)
    return generate(family, seed)


def load_measure(spec: str | None, g: Graph) -> Measure:
    """``counting``, ``inverse:<vertex>`` or a path to a measure JSON file."""
    if not spec or spec == "counting":
        return counting()
    if spec.startswith("inverse:"):
        return inverse_distance(g, _vertex(spec.split(":", 1)[1]))
    path = Path(spec)
    if not path.exists():
        raise InputError(f"Unknown measure: {spec}")
    return Measure.from_json(path.read_text())


def _vertex(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"Vertex ids are integers, got {text!r}") from None


def parse_region(g: Graph, ball_spec: str | None, members: str | None) -> Region:
    """Region from ``center:radius`` or a comma-separated id list."""
    if bool(ball_spec) == bool(members):
        raise InputError("Give exactly one of --ball and --region")
    if ball_spec:
        center, _, radius = ball_spec.partition(":")
        if not radius:
            raise InputError(f"Ball spec must be center:radius, got {ball_spec!r}")
        return ball(g, _vertex(center), _vertex(radius))
    return classify_region(g, [_vertex(x) for x in members.split(",") if x.strip()])


def estimate(
    g: Graph,
    e: Region,
    m: Measure,
    p: Exponent,
    *,
    seed: int,
    restarts: int,
    iterations: int,
) -> ConstantEstimate:
    """Certified bracket for p = 2 when the region is small enough, else the ascent lower bound."""
    if p == P2:
        try:
            return certify_constant_p2(g, e, m, seed=seed, restarts=restarts, iters=iterations)
        except SizeError as exc:
            console.print(f"[yellow]Certifier skipped:[/yellow] {exc}")
            result = estimate_constant(g, e, m, p, seed, restarts, iterations)
            return result.model_copy(update={"note": f"lower bound only: {exc}"})
    return estimate_constant(g, e, m, p, seed, restarts, iterations)


def envelope(e: Region, m: Measure, p: Exponent) -> float:
    """Quasiconvex bound when it applies, else inf."""
    if not e.quasiconvex or not m.alpha:
        return math.inf
    return thm21_bound(e, m, m.alpha, p)


def constant_sweep(
    g: Graph,
    center: int,
    r_values: list[int],
    p_values: list[Exponent],
    m: Measure,
    *,
    seed: int,
    restarts: int,
    iterations: int,
) -> list[SweepResult]:
    """Estimated constants of B_r(center) for growing r, with the quasiconvex envelope."""
    results = []
    for p in p_values:
        result = SweepResult(family="sweep", p=str(p))
        below_envelope = bracket = True
        for r in sorted(r_values):
            e = ball(g, center, r)
            est = estimate(g, e, m, p, seed=seed, restarts=restarts, iterations=iterations)
            bound = envelope(e, m, p)
            below_envelope = below_envelope and est.lower <= bound * (1 + THEOREM_TOLERANCE)
            if est.upper is not None:
                bracket = bracket and est.lower <= est.upper * (1 + BRACKET_TOLERANCE)
            result.rows.append(
                {
                    "r": r,
                    "p": str(p),
                    "lower": est.lower,
                    "upper": "" if est.upper is None else est.upper,
                    "envelope": bound,
                }
            )
        result.checks["below_envelope"] = below_envelope
        result.checks["bracket"] = bracket
        results.append(result)
    return results


def run_sweep(cfg: RunConfig, g: Graph, center: int, m: Measure) -> FamilyVerdict:
    """Write sweep.csv and sweep.verdict.json."""
    started = now()
    console.print(f"[cyan]Step 1:[/cyan] Estimating constants on balls around {center}, r in {cfg.r_values}...")
    sweeps = constant_sweep(
        g,
        center,
        cfg.r_values,
        parse_exponents(cfg.p_list),
        m,
        seed=cfg.seed,
        restarts=cfg.restarts,
        iterations=cfg.iterations,
    )
    write_csv(cfg.out / "sweep.csv", SWEEP_HEADER, [row for s in sweeps for row in s.rows])
    verdict = combine("sweep", cfg.seed, sweeps, {"graph": g.family, "center": center})
    write_json(cfg.out / "sweep.verdict.json", verdict)
    write_meta(cfg.out, "sweep", started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Constant sweep complete![/bold green] Results in {cfg.out}")
    return verdict

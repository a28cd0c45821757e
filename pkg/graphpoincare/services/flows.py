"""Randomized flow-measure trials on trees.

Each trial draws a random tree window, a leaf-up random flow, a connected
region above the frontier and a random function on its halo, then checks
the tree inequality with constant 4r together with the chain-count and
flow-mass side conditions.
"""

from functools import partial

import numpy as np
from pydantic import BaseModel, ConfigDict
from rich.console import Console

from graphpoincare.calculus import Exponent
from graphpoincare.config import SAMPLED_EXPONENTS, THEOREM_TOLERANCE, RunConfig
from graphpoincare.engine import PoincareReport, check_inequality
from graphpoincare.errors import WindowError
from graphpoincare.graphs import classify_region, random_tree
from graphpoincare.pool import run_trials
from graphpoincare.services.utils import (
    FamilyVerdict,
    grow_region,
    now,
    random_function,
    write_csv,
    write_json,
    write_meta,
)
from graphpoincare.trees import chain_count, flow_from_leaves, flow_mass_bound, root_tree

console = Console(stderr=True)

FAMILY = "flow"
CSV_HEADER = (
    "trial",
    "seed",
    "b",
    "depth",
    "p",
    "size",
    "diam",
    "lhs",
    "rhs",
    "ratio",
    "bound",
    "verdict",
    "max_chain",
    "chain_within_2r",
    "mass_stated",
    "mass_relaxed",
)

MAX_CHILDREN = 4
MAX_DEPTH = 14
BRANCHING = 0.25
MAX_REGION = 40
LEAF_RANGE = (0.1, 10.0)


class FlowTrial(BaseModel):
    """Outcome of one randomized flow trial."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    index: int
    seed: int
    skipped: bool = False
    reason: str | None = None
    b: int = 0
    depth: int = 0
    size: int = 0
    diam: int = 0
    report: PoincareReport | None = None
    max_chain: int = 0
    chain_within_bound: bool = True
    chain_within_2r: bool = True
    mass_stated: bool | None = None
    mass_relaxed: bool = True

    @property
    def failed(self) -> bool:
        if self.skipped:
            return False
        return not (self.report.passed and self.chain_within_bound and self.mass_relaxed)

    def row(self) -> dict:
        report = self.report
        return {
            "trial": self.index,
            "seed": self.seed,
            "b": self.b,
            "depth": self.depth,
            "p": report.p,
            "size": self.size,
            "diam": self.diam,
            "lhs": report.lhs,
            "rhs": report.rhs,
            "ratio": report.ratio,
            "bound": report.bound,
            "verdict": report.verdict,
            "max_chain": self.max_chain,
            "chain_within_2r": self.chain_within_2r,
            "mass_stated": "" if self.mass_stated is None else self.mass_stated,
            "mass_relaxed": self.mass_relaxed,
        }


def flow_trial(index: int, seed: int, tolerance: float = THEOREM_TOLERANCE) -> FlowTrial:
    """One seeded trial; frontier violations are reported as skipped."""
    rng = np.random.default_rng(seed)
    b = int(rng.integers(1, MAX_CHILDREN + 1))
    depth = int(rng.integers(2, MAX_DEPTH + 1))
    try:
        g = random_tree(b, depth, seed, BRANCHING)
        t = root_tree(g, 0)
        leaves = {v: float(rng.uniform(*LEAF_RANGE)) for v in sorted(t.frontier)}
        m = flow_from_leaves(t, leaves)
        eligible = {v for v in g.order if g.is_complete(v)}
        if not eligible:
            return FlowTrial(index=index, seed=seed, skipped=True, reason="no vertex above the frontier")
        ordered = sorted(eligible)
        start = ordered[int(rng.integers(len(ordered)))]
        members = grow_region(g, start, int(rng.integers(1, MAX_REGION + 1)), rng, eligible)
        e = classify_region(g, members)
        f = random_function(e.halo, rng)
        p = Exponent.parse(SAMPLED_EXPONENTS[int(rng.integers(len(SAMPLED_EXPONENTS)))])
        report = check_inequality(g, f, e, m, p, "thm41", tree=t, seed=seed, tolerance=tolerance)

        max_chain = max(chain_count(t, e, x) for x in e.sorted_members())
        masses = [flow_mass_bound(t, m, e, z) for z in e.sorted_members()]
        stated = [c.stated_holds for c in masses if not c.degenerate]
    except WindowError as exc:
        return FlowTrial(index=index, seed=seed, skipped=True, reason=str(exc))

    return FlowTrial(
        index=index,
        seed=seed,
        b=b,
        depth=depth,
        size=len(e),
        diam=e.diam,
        report=report,
        max_chain=max_chain,
        chain_within_bound=max_chain <= e.diam + 1,
        chain_within_2r=max_chain <= e.diam,
        mass_stated=all(stated) if stated else None,
        mass_relaxed=all(c.relaxed_holds for c in masses),
    )


def flow_suite(
    trials: int,
    seed: int,
    workers: int = 1,
    show_progress: bool = True,
    tolerance: float = THEOREM_TOLERANCE,
) -> list[FlowTrial]:
    """Run ``trials`` seeded flow trials in trial order."""
    return run_trials(
        partial(flow_trial, tolerance=tolerance),
        seed,
        trials,
        workers=workers,
        description="Flow trials",
        show_progress=show_progress,
    )


def summarize(results: list[FlowTrial]) -> dict:
    done = [r for r in results if not r.skipped]
    stated = [r.mass_stated for r in done if r.mass_stated is not None]
    return {
        "trials": len(results),
        "failures": sum(r.failed for r in results),
        "skipped": len(results) - len(done),
        "inequality_failures": sum(not r.report.passed for r in done),
        "chain_bound_failures": sum(not r.chain_within_bound for r in done),
        "chain_within_2r_rate": sum(r.chain_within_2r for r in done) / len(done) if done else None,
        "mass_relaxed_failures": sum(not r.mass_relaxed for r in done),
        "mass_stated_rate": sum(stated) / len(stated) if stated else None,
    }


def reproduce(cfg: RunConfig) -> FamilyVerdict:
    """Run the flow suite and write flow.csv and flow.verdict.json."""
    started = now()
    console.print(f"[cyan]Step 1:[/cyan] Running {cfg.trials} flow trials (seed {cfg.seed})...")
    results = flow_suite(cfg.trials, cfg.seed, cfg.workers, tolerance=cfg.tolerance)
    summary = summarize(results)
    if summary["failures"]:
        console.print(f"  [red]{summary['failures']} trials failed[/red]")
    else:
        console.print(f"  [dim]0 failures, {summary['skipped']} skipped[/dim]")

    write_csv(cfg.out / f"{FAMILY}.csv", CSV_HEADER, [r.row() for r in results if not r.skipped])
    verdict = FamilyVerdict(
        family=FAMILY,
        seed=cfg.seed,
        verdict="fail" if summary["failures"] else "pass",
        details=summary,
    )
    write_json(cfg.out / f"{FAMILY}.verdict.json", verdict)
    write_meta(cfg.out, FAMILY, started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Flow suite complete![/bold green] Results in {cfg.out}")
    return verdict

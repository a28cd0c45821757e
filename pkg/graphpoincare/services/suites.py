"""Seeded property suites behind ``verify``.

Every suite draws independent instances from per-trial seeds and counts
verdicts that contradict a proven bound. A single failure is a defect in
this package, never evidence against the bound.
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console

from graphpoincare.calculus import Exponent
from graphpoincare.config import SAMPLED_EXPONENTS, THEOREM_TOLERANCE
from graphpoincare.engine import check_inequality
from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import Graph, Region, ball, classify_region, random_bounded
from graphpoincare.measures import (
    ball_size_bound,
    counting,
    degree_doubling_relation,
    doubling_constant,
    uniform_random,
)
from graphpoincare.pool import run_trials
from graphpoincare.services.flows import flow_trial
from graphpoincare.services.utils import grow_region, random_function

console = Console(stderr=True)

SUITES = ("thm21", "cor23", "thm41", "doubling")

MAX_VERTICES = 400
MAX_RADIUS = 3


class TrialResult(BaseModel):
    """Outcome of one suite trial."""

    index: int
    seed: int
    passed: bool = True
    skipped: bool = False
    detail: dict[str, Any] = Field(default_factory=dict)


class VerifySummary(BaseModel):
    """JSON printed by ``verify``."""

    suite: str
    trials: int
    failures: int
    seed: int
    skipped: int = 0
    failed_trials: list[int] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _bounded_graph(rng: np.random.Generator, seed: int, min_b: int = 1) -> Graph:
    n = int(rng.integers(2, MAX_VERTICES + 1))
    b = int(rng.integers(min_b, 5))
    return random_bounded(n, b, seed=seed)


def _region(g: Graph, rng: np.random.Generator) -> Region:
    """A random ball, or a grown region when it happens to be quasiconvex."""
    center = g.order[int(rng.integers(len(g)))]
    if rng.random() < 0.5:
        members = grow_region(g, center, int(rng.integers(1, 30)), rng)
        e = classify_region(g, members)
        if e.quasiconvex:
            return e
    return ball(g, center, int(rng.integers(0, MAX_RADIUS + 1)))


def _exponent(rng: np.random.Generator) -> Exponent:
    return Exponent.parse(SAMPLED_EXPONENTS[int(rng.integers(len(SAMPLED_EXPONENTS)))])


def thm21_trial(index: int, seed: int, tolerance: float = THEOREM_TOLERANCE) -> TrialResult:
    """Quasiconvex region, measure bounded below by alpha, random f and p."""
    rng = np.random.default_rng(seed)
    g = _bounded_graph(rng, seed)
    alpha = float(rng.uniform(0.1, 2.0))
    m = uniform_random(g, alpha, rng)
    e = _region(g, rng)
    f = random_function(e.halo, rng)
    report = check_inequality(g, f, e, m, _exponent(rng), "thm21", seed=seed, tolerance=tolerance)
    detail = {"ratio": report.ratio, "bound": report.bound}
    return TrialResult(index=index, seed=seed, passed=report.passed, detail=detail)


def cor23_trial(index: int, seed: int, tolerance: float = THEOREM_TOLERANCE) -> TrialResult:
    """Bounded degree b >= 2, measure between alpha and beta, plus ball-growth and doubling checks."""
    rng = np.random.default_rng(seed)
    g = _bounded_graph(rng, seed, min_b=2)
    alpha = float(rng.uniform(0.1, 2.0))
    m = uniform_random(g, alpha, rng)
    e = _region(g, rng)
    f = random_function(e.halo, rng)
    report = check_inequality(g, f, e, m, _exponent(rng), "cor23", seed=seed, tolerance=tolerance)

    b = g.degree_bound
    center = g.order[int(rng.integers(len(g)))]
    radius = int(rng.integers(0, MAX_RADIUS + 1))
    size_ok = len(ball(g, center, radius)) <= ball_size_bound(b, radius)
    doubling = doubling_constant(g, m, int(rng.integers(0, 3)), [center])
    passed = report.passed and size_ok and bool(doubling.within_bound)
    return TrialResult(
        index=index,
        seed=seed,
        passed=passed,
        detail={"ratio": report.ratio, "bound": report.bound, "ball_size_ok": size_ok, "D": doubling.D_of_R},
    )


def thm41_trial(index: int, seed: int, tolerance: float = THEOREM_TOLERANCE) -> TrialResult:
    result = flow_trial(index, seed, tolerance)
    return TrialResult(index=index, seed=seed, passed=not result.failed, skipped=result.skipped)


def doubling_trial(index: int, seed: int, tolerance: float = THEOREM_TOLERANCE) -> TrialResult:
    """Doubling constants stay within (beta/alpha) 3 b^(2R), grow with R, and match degrees."""
    rng = np.random.default_rng(seed)
    g = _bounded_graph(rng, seed)
    m = counting() if rng.random() < 0.3 else uniform_random(g, float(rng.uniform(0.1, 2.0)), rng)
    centers = [g.order[int(i)] for i in rng.choice(len(g), size=min(5, len(g)), replace=False)]
    R = int(rng.integers(0, 3))
    small = doubling_constant(g, m, R, centers)
    large = doubling_constant(g, m, R + 1, centers)
    relation = degree_doubling_relation(g, m)
    passed = (
        small.within_bound is not False
        and small.D_of_R <= large.D_of_R * (1 + tolerance)
        and small.D_of_R >= 1
        and relation.holds is not False
    )
    return TrialResult(
        index=index,
        seed=seed,
        passed=passed,
        detail={"R": R, "D": small.D_of_R, "D_next": large.D_of_R},
    )


TRIALS = {
    "thm21": thm21_trial,
    "cor23": cor23_trial,
    "thm41": thm41_trial,
    "doubling": doubling_trial,
}


class GuardedTrial:
    """Picklable trial wrapper turning window errors into skipped trials."""

    def __init__(self, suite: str, tolerance: float = THEOREM_TOLERANCE):
        self.suite = suite
        self.tolerance = tolerance

    def __call__(self, index: int, seed: int) -> TrialResult:
        try:
            return TRIALS[self.suite](index, seed, self.tolerance)
        except WindowError as exc:
            return TrialResult(index=index, seed=seed, skipped=True, detail={"reason": str(exc)})


def run_suite(
    suite: str,
    trials: int,
    seed: int,
    workers: int = 1,
    show_progress: bool = True,
    tolerance: float = THEOREM_TOLERANCE,
) -> VerifySummary:
    """Run one suite and count failures; skipped trials are not failures."""
    if suite not in TRIALS:
        raise InputError(f"Unknown suite: {suite}")
    if trials == 0:
        console.print(f"[yellow]No trials requested; suite {suite} passes vacuously.[/yellow]")
    results = run_trials(
        GuardedTrial(suite, tolerance),
        seed,
        trials,
        workers=workers,
        description=f"Suite {suite}",
        show_progress=show_progress,
    )
    failed = [r.index for r in results if not r.passed and not r.skipped]
    return VerifySummary(
        suite=suite,
        trials=trials,
        failures=len(failed),
        seed=seed,
        skipped=sum(r.skipped for r in results),
        failed_trials=failed,
    )

"""Connected sets that are not quasiconvex: rows of the grid with odd-row chords.

The row E_k = {(j, k) : 0 <= j <= k} (k even) has ambient diameter at most 3
because the chords on the odd rows next to it are shortcuts, yet it is a
path of length k inside itself. For f(j, k) = j the normalized Poincare
ratio grows like k^(1 - 1/p).
"""

from fractions import Fraction

from pydantic import BaseModel
from rich.console import Console

from graphpoincare.calculus import INF, Exponent, centered, gradient, lp_norm, poincare_ratio, weighted_mean
from graphpoincare.config import MIN_R_SQUARED, SLOPE_TOLERANCE, RunConfig
from graphpoincare.errors import InputError, WindowError
from graphpoincare.graphs import Graph, Region, classify_region, grid_chords
from graphpoincare.measures import counting
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

console = Console(stderr=True)

FAMILY = "ex31"
CSV_HEADER = ("k", "p", "lhs", "denominator", "normalized_ratio")

# Rows kept above and below row k, and extra columns right of column k
WINDOW_MARGIN = 2
STABILITY_MARGIN = 4
EXTRA_COLUMNS = 3


class RowInstance:
    """Window, row region and the coordinate function for one k."""

    def __init__(self, k: int, margin: int = WINDOW_MARGIN):
        if k < 2 or k % 2:
            raise InputError(f"Row regions are defined for even k >= 2, got {k}")
        self.k = k
        self.margin = margin
        self.graph: Graph = grid_chords(k + margin + EXTRA_COLUMNS, k + margin, max(0, k - margin))
        self.region: Region = classify_region(self.graph, [self.graph.id_of((j, k)) for j in range(k + 1)])
        self.f = {v: float(self.graph.label_of(v)[0]) for v in self.graph.order}


class RowChecks(BaseModel):
    """Closed-form facts about one row region."""

    k: int
    diam: int
    stable_diam: int
    mean: str
    mean_exact: bool
    gradient_exact: bool
    sup_ratio: float
    sup_ratio_exact: bool
    quasiconvex: bool
    witness: tuple[tuple[int, int], tuple[int, int]] | None = None
    witness_distance: int | None = None

    @property
    def passed(self) -> bool:
        witness_ok = self.k < 8 or (not self.quasiconvex and self.witness is not None)
        return (
            self.mean_exact
            and self.gradient_exact
            and self.sup_ratio_exact
            and self.diam == self.stable_diam
            and 1 <= self.diam <= 3
            and witness_ok
        )


def row_checks(k: int) -> RowChecks:
    """Mean k/2, gradient 2 except 1 at j = 0, sup ratio k/4, and the quasiconvexity witness."""
    inst = RowInstance(k)
    g, e, f = inst.graph, inst.region, inst.f
    m = counting()

    total = sum(Fraction(int(f[v])) for v in e.members)
    mean = total / len(e)
    mean_exact = mean == Fraction(k, 2) and weighted_mean(f, e, m) == k / 2

    grad = gradient(g, f, e)
    expected = {v: 1.0 if g.label_of(v)[0] == 0 else 2.0 for v in e.members}
    gradient_exact = grad == expected

    lhs = lp_norm(centered(f, e, m), e, m, INF)
    sup_ratio = poincare_ratio(g, f, e, m, INF)
    sup_ratio_exact = Fraction(lhs) / Fraction(max(grad.values())) == Fraction(k, 4) and sup_ratio == k / 4

    stable = RowInstance(k, STABILITY_MARGIN).region.diam
    witness = None
    if e.witness is not None:
        a, b = sorted(e.witness, key=lambda v: g.label_of(v))
        witness = (g.label_of(a), g.label_of(b))
    return RowChecks(
        k=k,
        diam=e.diam,
        stable_diam=stable,
        mean=str(mean),
        mean_exact=mean_exact,
        gradient_exact=gradient_exact,
        sup_ratio=sup_ratio,
        sup_ratio_exact=sup_ratio_exact,
        quasiconvex=e.quasiconvex,
        witness=witness,
        witness_distance=e.witness_distance,
    )


def sweep_row(inst: RowInstance, p: Exponent) -> dict:
    g, e, f = inst.graph, inst.region, inst.f
    m = counting()
    lhs = lp_norm(centered(f, e, m), e, m, p)
    grad_norm = lp_norm(gradient(g, f, e), e, m, p)
    denominator = len(e) ** p.inverse * e.diam ** (1 - p.inverse) * grad_norm
    return {
        "k": inst.k,
        "p": str(p),
        "lhs": lhs,
        "denominator": denominator,
        "normalized_ratio": lhs / denominator,
    }


def ex31_sweep(k_values: list[int], p_values: list[Exponent]) -> list[SweepResult]:
    """Normalized ratios per exponent, with a log-log slope check against 1 - 1/p."""
    instances = [RowInstance(k) for k in sorted(k_values)]
    results = []
    for p in p_values:
        result = SweepResult(family=FAMILY, p=str(p))
        result.rows = [sweep_row(inst, p) for inst in instances]
        points = [(row["k"], row["normalized_ratio"]) for row in result.rows]
        slope_checks(result, points, 1 - p.inverse, SLOPE_TOLERANCE, MIN_R_SQUARED)
        results.append(result)
    return results


def reproduce(cfg: RunConfig) -> FamilyVerdict:
    """Run the row sweep and write ex31.csv and ex31.verdict.json."""
    started = now()
    k_values = sorted(cfg.k_values)
    p_values = parse_exponents(cfg.p_list)
    if any(k % 2 or k < 2 for k in k_values):
        raise InputError(f"k must be even and >= 2, got {k_values}")

    console.print(f"[cyan]Step 1:[/cyan] Exact checks for k = {', '.join(map(str, k_values))}...")
    checks = []
    for k in k_values:
        try:
            checks.append(row_checks(k))
        except WindowError as e:
            console.print(f"[red]Window too small for k={k}:[/red] {e}")
            raise
    failed = [c.k for c in checks if not c.passed]
    if failed:
        console.print(f"  [red]Closed forms do not hold for k = {failed}[/red]")
    else:
        console.print(f"  [dim]Mean, gradient and sup ratio exact for all {len(checks)} rows[/dim]")

    console.print("[cyan]Step 2:[/cyan] Sweeping normalized ratios...")
    sweeps = ex31_sweep(k_values, p_values)
    for s in sweeps:
        fit = f"slope {s.slope_fit[0]:.3f} (expected {s.expected_slope:.3f})" if s.slope_fit else "no fit"
        console.print(f"  p={s.p}: {fit} [{'green' if s.verdict == 'pass' else 'red'}]{s.verdict}[/]")

    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out / f"{FAMILY}.csv", CSV_HEADER, [row for s in sweeps for row in s.rows])
    verdict = combine(
        FAMILY,
        cfg.seed,
        sweeps,
        {"rows": [c.model_dump() for c in checks]},
        extra_ok=not failed,
    )
    write_json(cfg.out / f"{FAMILY}.verdict.json", verdict)
    write_meta(cfg.out, FAMILY, started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Example sweep {FAMILY} complete![/bold green] Results in {cfg.out}")
    return verdict

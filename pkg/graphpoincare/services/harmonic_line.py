"""Measures not bounded below: the line with weight 1/|j|.

On E_k = {-k, ..., k} with f(j) = j the normalized Poincare ratio grows like
k^(1/p) / (log k)^(2/p), so no bound of the quasiconvex kind survives once
the measure is allowed to decay.
"""

import math

import numpy as np
from rich.console import Console
from scipy.special import digamma

from graphpoincare.calculus import Exponent, centered, gradient, lp_norm, weighted_mean
from graphpoincare.config import BOUNDED_RATIO_LIMIT, CLOSED_FORM_TOLERANCE, RunConfig
from graphpoincare.engine import bounded_ratio
from graphpoincare.errors import InputError
from graphpoincare.graphs import ball, line
from graphpoincare.measures import degree_doubling_relation, inverse_distance, region_mass
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

FAMILY = "ex32"
CSV_HEADER = (
    "k",
    "p",
    "lhs",
    "denominator",
    "normalized_ratio",
    "rescaled",
    "mass",
    "gradient_norm",
    "display_sum",
)


def harmonic(k: int) -> float:
    """H_k through the digamma function."""
    return float(digamma(k + 1) + np.euler_gamma)


def closed_form_mass(k: int) -> float:
    """mu(E_k) = 1 + 2 H_k."""
    return 1 + 2 * harmonic(k)


def display_sum(k: int, p: Exponent) -> float:
    """sum_{j=-k}^{k} |j|^(p-1) by direct summation, with 0^0 = 1."""
    return math.fsum(abs(j) ** (p.value - 1) for j in range(-k, k + 1))


def closed_form_display_sum(k: int, p: Exponent) -> float | None:
    """2k + 1 at p = 1, k(k + 1) at p = 2; None elsewhere."""
    if p.value == 1:
        return float(2 * k + 1)
    if p.value == 2:
        return float(k * (k + 1))
    return None


def _agree(a: float, b: float) -> bool:
    return abs(a - b) <= CLOSED_FORM_TOLERANCE * max(abs(a), abs(b))


def line_row(k: int, p: Exponent) -> tuple[dict, dict[str, bool]]:
    """One sweep row and its closed-form agreement checks."""
    if p.is_infinite:
        raise InputError("The decaying-measure example is stated for finite p only")
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    g = line(k + 1)
    origin = g.id_of(0)
    m = inverse_distance(g, origin)
    e = ball(g, origin, k)
    f = {v: float(g.label_of(v)) for v in g.order}

    lhs = lp_norm(centered(f, e, m), e, m, p)
    grad_norm = lp_norm(gradient(g, f, e), e, m, p)
    mass = region_mass(m, e)
    denominator = mass ** p.inverse * e.diam ** (1 - p.inverse) * grad_norm
    normalized = lhs / denominator
    rescaled = normalized * math.log(k) ** (2 * p.inverse) / k ** p.inverse
    shown = display_sum(k, p)

    checks = {
        "mean_zero": weighted_mean(f, e, m) == 0.0,
        "diameter": e.diam == 2 * k,
        "mass_closed_form": _agree(mass, closed_form_mass(k)),
        "gradient_closed_form": _agree(grad_norm, 2 * mass ** p.inverse),
    }
    closed = closed_form_display_sum(k, p)
    if closed is not None:
        checks["display_sum_closed_form"] = _agree(shown, closed)
    row = {
        "k": k,
        "p": str(p),
        "lhs": lhs,
        "denominator": denominator,
        "normalized_ratio": normalized,
        "rescaled": rescaled,
        "mass": mass,
        "gradient_norm": grad_norm,
        "display_sum": shown,
    }
    return row, checks


def ex32_sweep(k_values: list[int], p_values: list[Exponent]) -> list[SweepResult]:
    """Rows per exponent; the rescaled quantity must stay within a bounded ratio."""
    results = []
    for p in p_values:
        result = SweepResult(family=FAMILY, p=str(p))
        closed_ok = {}
        for k in sorted(k_values):
            row, checks = line_row(k, p)
            result.rows.append(row)
            for name, ok in checks.items():
                closed_ok[name] = closed_ok.get(name, True) and ok
        result.checks.update(closed_ok)
        spread = bounded_ratio([row["rescaled"] for row in result.rows])
        result.checks["bounded_ratio"] = spread <= BOUNDED_RATIO_LIMIT
        result.notes.append(f"rescaled max/min = {spread:.4f}")
        if p.value == 1:
            result.notes.append("direct L1 norm of f is 2k; the display sum counts j = 0 once more")
        results.append(result)
    return results


def reproduce(cfg: RunConfig) -> FamilyVerdict:
    """Run the decaying-measure sweep and write ex32.csv and ex32.verdict.json."""
    started = now()
    k_values = sorted(cfg.k_values)
    p_values = parse_exponents(cfg.p_list)

    console.print(f"[cyan]Step 1:[/cyan] Sweeping k = {k_values[0]}..{k_values[-1]} ({len(k_values)} values)...")
    sweeps = ex32_sweep(k_values, p_values)
    for s in sweeps:
        colour = "green" if s.verdict == "pass" else "red"
        console.print(f"  p={s.p}: {s.notes[0]} [{colour}]{s.verdict}[/]")

    console.print("[cyan]Step 2:[/cyan] Checking the measure class...")
    g = line(3)
    relation = degree_doubling_relation(g, inverse_distance(g, g.id_of(0)))
    console.print(f"  [dim]{relation.message}[/dim]")

    write_csv(cfg.out / f"{FAMILY}.csv", CSV_HEADER, [row for s in sweeps for row in s.rows])
    verdict = combine(FAMILY, cfg.seed, sweeps, {"measure_class": relation.model_dump()})
    write_json(cfg.out / f"{FAMILY}.verdict.json", verdict)
    write_meta(cfg.out, FAMILY, started, cfg.model_dump(mode="json"))
    console.print(f"[bold green]Example sweep {FAMILY} complete![/bold green] Results in {cfg.out}")
    return verdict

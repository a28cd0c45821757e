"""Shared utilities for experiment services."""

import csv
import json
import math
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from graphpoincare.calculus import Exponent
from graphpoincare.engine import fit_exponential_rate, fit_slope
from graphpoincare.errors import InputError
from graphpoincare.graphs import Graph


class SweepResult(BaseModel):
    """Rows of one parameter sweep at one exponent, with its checks."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    family: str
    p: str
    rows: list[dict[str, Any]] = Field(default_factory=list)
    slope_fit: tuple[float, float] | None = None
    expected_slope: float | None = None
    checks: dict[str, bool] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)

    @property
    def verdict(self) -> Literal["pass", "fail"]:
        return "pass" if all(self.checks.values()) else "fail"

    def summary(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "verdict": self.verdict,
            "slope_fit": self.slope_fit,
            "expected_slope": self.expected_slope,
            "checks": self.checks,
            "notes": self.notes,
        }


def parse_int_list(text: str, geometric: bool = False) -> list[int]:
    """Parse "8,16,32" or "a..b"; with ``geometric`` a range doubles from a to b."""
    text = text.strip()
    try:
        if ".." in text:
            low, high = (int(x) for x in text.split("..", 1))
            if low > high or (geometric and low < 1):
                raise InputError(f"Invalid range: {text}")
            if geometric:
                values = []
                k = low
                while k <= high:
                    values.append(k)
                    k *= 2
                return values
            return list(range(low, high + 1))
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"Invalid integer list: {text}") from None
    if not values:
        raise InputError("Empty integer list")
    return values


def parse_exponents(values: Iterable[str]) -> list[Exponent]:
    return [Exponent.parse(v) for v in values]


def grow_region(
    g: Graph,
    start: int,
    size: int,
    rng: np.random.Generator,
    allowed: set[int] | None = None,
) -> frozenset[int]:
    """Grow a connected set from ``start`` by adding random frontier vertices.

    Stops early when no allowed neighbor is left.
    """
    allowed = set(g.order) if allowed is None else allowed
    if start not in allowed:
        raise InputError(f"Start vertex {start} is not allowed")
    members = {start}
    frontier = sorted(v for v in g.neighbors(start) if v in allowed)
    while len(members) < size and frontier:
        v = frontier.pop(int(rng.integers(len(frontier))))
        if v in members:
            continue
        members.add(v)
        frontier.extend(u for u in g.neighbors(v) if u in allowed and u not in members)
        frontier = sorted(set(frontier) - members)
    return frozenset(members)


def random_function(
    vertices: Iterable[int],
    rng: np.random.Generator,
    constant_rate: float = 0.05,
) -> dict[int, float]:
    """Standard normal values, or a constant function with probability ``constant_rate``."""
    ordered = sorted(vertices)
    if rng.random() < constant_rate:
        value = float(rng.normal())
        return {v: value for v in ordered}
    return {v: float(x) for v, x in zip(ordered, rng.normal(size=len(ordered)))}


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[dict[str, Any]]) -> None:
    """Comma-separated, header row, LF line endings, repr floats."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row[column]) for column in header])


def write_json(path: Path, payload: BaseModel | dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2)
    path.write_text(text + "\n")


def write_meta(out: Path, name: str, started: datetime, settings: dict[str, Any]) -> Path:
    """Timestamps and settings go to a side file so the results stay byte-identical."""
    path = out / f"{name}.meta.json"
    write_json(
        path,
        {
            "started": started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "settings": settings,
        },
    )
    return path


def now() -> datetime:
    return datetime.now(timezone.utc)


class FamilyVerdict(BaseModel):
    """Content of {family}.verdict.json."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    family: str
    seed: int
    verdict: Literal["pass", "fail"]
    sweeps: list[dict[str, Any]] = Field(default_factory=list)
    details: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def combine(
    family: str,
    seed: int,
    sweeps: Sequence[SweepResult],
    details: dict[str, Any],
    extra_ok: bool = True,
) -> FamilyVerdict:
    passed = extra_ok and all(s.verdict == "pass" for s in sweeps)
    return FamilyVerdict(
        family=family,
        seed=seed,
        verdict="pass" if passed else "fail",
        sweeps=[s.summary() for s in sweeps],
        details=details,
    )


def slope_checks(
    result: SweepResult,
    points: Sequence[tuple[float, float]],
    expected: float,
    tolerance: float,
    min_r_squared: float,
    *,
    exponential: bool = False,
) -> None:
    """Fit the sweep and record the slope and fit-quality checks; needs 4 points."""
    if len(points) < 4:
        result.notes.append(f"slope not checked: {len(points)} points")
        return
    slope, r2 = fit_exponential_rate(points) if exponential else fit_slope(points)
    result.slope_fit = (slope, r2)
    result.expected_slope = expected
    result.checks["slope"] = abs(slope - expected) <= tolerance
    result.checks["r_squared"] = r2 >= min_r_squared

"""Poincare bound formulas, inequality verdicts and asymptotic fits."""

import math
from collections.abc import Sequence
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from graphpoincare.config import KIRCHHOFF_TOLERANCE, THEOREM_TOLERANCE
from graphpoincare.errors import InputError, PreconditionError
from graphpoincare.calculus import Exponent, VertexFunction, centered, gradient, lp_norm
from graphpoincare.graphs import Graph, Region
from graphpoincare.measures import Measure, region_mass
from graphpoincare.trees import RootedTree, kirchhoff_residual

TheoremTag = Literal["thm21", "cor23", "thm41", "custom"]
THEOREM_TAGS: tuple[str, ...] = ("thm21", "cor23", "thm41", "custom")


class PoincareReport(BaseModel):
    """Outcome of checking one Poincare inequality on one instance."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    theorem_tag: TheoremTag
    lhs: float
    rhs: float
    ratio: float
    bound: float
    verdict: Literal["pass", "fail"]
    seed: int | None = None
    region: dict[str, Any]
    p: str
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def thm21_bound(e: Region, m: Measure, alpha: float, p: Exponent) -> float:
    """(mu(E)/alpha)^(1/p) (4r)^(1-1/p) for a quasiconvex E and mu >= alpha."""
    if not e.quasiconvex:
        raise PreconditionError("quasiconvex", "Region is not quasiconvex")
    if not alpha > 0:
        raise PreconditionError("bounded below", f"Lower bound alpha must be positive, got {alpha}")
    if m.alpha is None or m.alpha < alpha * (1 - THEOREM_TOLERANCE):
        raise PreconditionError("bounded below", f"Measure is not bounded below by {alpha}")
    four_r = 4 * float(e.r)
    if p.is_infinite:
        return four_r
    return (region_mass(m, e) / alpha) ** p.inverse * four_r ** (1 - p.inverse)


def cor23_constant(R: float, alpha: float, beta: float, b: int, p: Exponent) -> float:
    """P_p(R) = 4 (3 beta b^R / (4 alpha))^(1/p)."""
    if b < 1:
        raise InputError(f"Degree parameter b must be >= 1, got {b}")
    if not 0 < alpha <= beta:
        raise InputError(f"Need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    if p.is_infinite:
        return 4.0
    return 4 * (3 * beta * b**R / (4 * alpha)) ** p.inverse


def cor23_bound(R: float, r: float, alpha: float, beta: float, b: int, p: Exponent) -> float:
    """P_p(R) r; meaningful for 1 <= r <= R/2, trivial for r < 1."""
    return cor23_constant(R, alpha, beta, b, p) * r


def check_inequality(
    g: Graph,
    f: VertexFunction,
    e: Region,
    m: Measure,
    p: Exponent,
    theorem_tag: TheoremTag,
    *,
    alpha: float | None = None,
    beta: float | None = None,
    tree: RootedTree | None = None,
    constant: float | None = None,
    seed: int | None = None,
    tolerance: float = THEOREM_TOLERANCE,
) -> PoincareReport:
    """Evaluate both sides of a Poincare inequality after checking its hypotheses.

    Args:
        theorem_tag: thm21 (quasiconvex E, mu bounded below), cor23 (bounded
            degree, mu bounded on both sides), thm41 (tree, flow measure,
            connected E) or custom (constant times r)
        alpha, beta: Measure bounds; default to the measure's own
        tree: Rooted tree for thm41
        constant: Multiplier of r for custom

    Raises:
        PreconditionError: naming the hypothesis that fails
    """
    alpha = m.alpha if alpha is None else alpha
    beta = m.beta if beta is None else beta
    r = float(e.r)
    metadata: dict[str, Any] = {}

    if theorem_tag == "thm21":
        bound = thm21_bound(e, m, alpha or 0.0, p)
    elif theorem_tag == "cor23":
        if g.degree_bound is None:
            raise PreconditionError("bounded degree", "Graph has no degree bound")
        if not e.quasiconvex:
            raise PreconditionError("quasiconvex", "Region is not quasiconvex")
        if not alpha or beta is None or not m.in_class(alpha, beta):
            raise PreconditionError("bounded measure", "Measure is not bounded above and below")
        bound = cor23_bound(e.diam, r, alpha, beta, g.degree_bound, p)
        metadata["trivial"] = r < 1
        metadata["R"] = e.diam
    elif theorem_tag == "thm41":
        if tree is None or tree.graph is not g:
            raise PreconditionError("rooted tree", "thm41 needs the rooted tree of this graph")
        if m.kind != "flow":
            raise PreconditionError("flow measure", "Measure is not a flow")
        if not e.connected:
            raise PreconditionError("connected", "Region is not connected")
        residual = kirchhoff_residual(tree, m, e.members)
        if residual > KIRCHHOFF_TOLERANCE:
            raise PreconditionError("flow measure", f"Kirchhoff residual {residual:.3g} inside the region")
        bound = 4 * r
    elif theorem_tag == "custom":
        if constant is None or constant < 0:
            raise InputError("custom checks need a non-negative constant")
        bound = constant * r
    else:
        raise InputError(f"Unknown theorem tag: {theorem_tag}")

    lhs = lp_norm(centered(f, e, m), e, m, p)
    grad_norm = lp_norm(gradient(g, f, e), e, m, p)
    rhs = bound * grad_norm
    if lhs == 0:
        ratio = 0.0
    else:
        ratio = lhs / grad_norm if grad_norm else math.inf
    metadata["gradient_norm"] = grad_norm
    return PoincareReport(
        theorem_tag=theorem_tag,
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        bound=bound,
        verdict="pass" if lhs <= rhs * (1 + tolerance) else "fail",
        seed=seed,
        region={"size": len(e), "diam": e.diam, "connected": e.connected, "quasiconvex": e.quasiconvex},
        p=str(p),
        metadata=metadata,
    )


def _validate_points(points: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 4:
        raise InputError(f"Need at least 4 points, got {len(points)}")
    ks = np.array([float(k) for k, _ in points])
    values = np.array([float(v) for _, v in points])
    if np.any(np.diff(ks) <= 0):
        raise InputError("Parameters must be strictly increasing")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise InputError("Values must be positive and finite")
    return ks, values


def fit_slope(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of log(value) against log(k), with r squared."""
    ks, values = _validate_points(points)
    if np.any(ks <= 0):
        raise InputError("Parameters must be positive for a log-log fit")
    fit = stats.linregress(np.log(ks), np.log(values))
    return float(fit.slope), _r_squared(fit.rvalue, values)


def fit_exponential_rate(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of log2(value) against the parameter, with r squared."""
    ks, values = _validate_points(points)
    fit = stats.linregress(ks, np.log2(values))
    return float(fit.slope), _r_squared(fit.rvalue, values)


def _r_squared(rvalue: float, values: np.ndarray) -> float:
    # linregress reports nan for a perfectly flat series
    if np.allclose(values, values[0], rtol=1e-12, atol=0):
        return 1.0
    return float(rvalue**2)


def bounded_ratio(values: Sequence[float]) -> float:
    """max/min of a positive series."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or np.any(arr <= 0):
        raise InputError("Bounded-ratio test needs positive values")
    return float(arr.max() / arr.min())

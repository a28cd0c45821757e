"""Vertex functions, gradients, the tree difference operator and L^p norms."""

import math
from collections.abc import Mapping
from dataclasses import dataclass

from graphpoincare.errors import HaloError, InputError, PreconditionError
from graphpoincare.graphs import Graph, Region
from graphpoincare.measures import Measure
from graphpoincare.trees import RootedTree

VertexFunction = Mapping[int, float]
DIFFERENCE_TOLERANCE = 1e-12


@dataclass(frozen=True, order=True)
class Exponent:
    """An exponent p in [1, inf]."""

    value: float

    def __post_init__(self):
        if math.isnan(self.value) or self.value < 1:
            raise InputError(f"Exponent must be in [1, inf], got {self.value}")

    @classmethod
    def parse(cls, text: "str | float | Exponent") -> "Exponent":
        if isinstance(text, Exponent):
            return text
        if isinstance(text, (int, float)):
            return cls(float(text))
        word = text.strip().lower()
        if word in ("inf", "infinity", "∞"):
            return cls(math.inf)
        try:
            return cls(float(word))
        except ValueError:
            raise InputError(f"Invalid exponent: {text!r}") from None

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def inverse(self) -> float:
        """1/p, zero at infinity."""
        return 0.0 if self.is_infinite else 1.0 / self.value

    @property
    def conjugate(self) -> "Exponent":
        if self.value == 1:
            return Exponent(math.inf)
        if self.is_infinite:
            return Exponent(1.0)
        return Exponent(self.value / (self.value - 1))

    def __str__(self) -> str:
        if self.is_infinite:
            return "inf"
        return f"{self.value:g}"


INF = Exponent(math.inf)


def _value(f: VertexFunction, vertex: int) -> float:
    try:
        return f[vertex]
    except KeyError:
        raise HaloError(f"Function undefined at vertex {vertex}") from None


def gradient(g: Graph, f: VertexFunction, e: Region) -> dict[int, float]:
    """Gradient length: sum over all ambient neighbors y of |f(x) - f(y)|."""
    return {
        x: math.fsum(abs(_value(f, x) - _value(f, y)) for y in g.neighbors(x))
        for x in e.sorted_members()
    }


def difference(t: RootedTree, f: VertexFunction, e: Region) -> dict[int, float]:
    """df(x) = f(x) - f(parent of x), checked against the gradient length at x.

    Only neighbors where f is defined enter the gradient sum; the parent is
    always one of them.
    """
    if t.top in e.members:
        raise InputError("Region contains the top vertex, which has no parent")
    df = {}
    for x in e.sorted_members():
        fx = _value(f, x)
        df[x] = fx - _value(f, t.parent[x])
        local = math.fsum(abs(fx - f[y]) for y in t.graph.neighbors(x) if y in f)
        if abs(df[x]) > local * (1 + DIFFERENCE_TOLERANCE):
            raise PreconditionError(
                "parent_is_neighbor",
                f"|df({x})| = {abs(df[x])} exceeds the gradient length {local}",
            )
    return df


def weighted_mean(f: VertexFunction, e: Region, m: Measure) -> float:
    members = e.sorted_members()
    try:
        total = math.fsum(f[x] * m.weight(x) for x in members)
    except KeyError as exc:
        raise InputError(f"Function undefined at vertex {exc.args[0]}") from None
    return total / m.mass(members)


def lp_norm(f: VertexFunction, e: Region, m: Measure, p: Exponent) -> float:
    """L^p norm over E; the sup norm ignores the measure."""
    members = e.sorted_members()
    try:
        if p.is_infinite:
            return max(abs(f[x]) for x in members)
        total = math.fsum(abs(f[x]) ** p.value * m.weight(x) for x in members)
    except KeyError as exc:
        raise InputError(f"Function undefined at vertex {exc.args[0]}") from None
    return total ** (1.0 / p.value)


def centered(f: VertexFunction, e: Region, m: Measure) -> dict[int, float]:
    mean = weighted_mean(f, e, m)
    return {x: f[x] - mean for x in e.sorted_members()}


def poincare_ratio(g: Graph, f: VertexFunction, e: Region, m: Measure, p: Exponent) -> float:
    """||f - f_E||_p / ||grad f||_p over E.

    Functions constant on E have ratio 0. A nonconstant function with zero
    gradient on a disconnected E gives +inf; on a connected E that is
    impossible and raises PreconditionError.
    """
    values = {_value(f, x) for x in e.members}
    if len(values) == 1:
        return 0.0
    numerator = lp_norm(centered(f, e, m), e, m, p)
    denominator = lp_norm(gradient(g, f, e), e, m, p)
    if denominator == 0:
        if e.connected:
            raise PreconditionError(
                "zero_gradient_on_connected_region",
                "Gradient vanishes on a connected region where f is not constant",
            )
        return math.inf
    return numerator / denominator

"""Conceptual spaces: weighted quality dimensions grouped into domains.

Points are compared by range-normalizing each coordinate to [0, 1], taking a
weighted Euclidean distance inside every domain and summing the per-domain
distances (city-block combination across domains).  Similarity is an
exponential decay of that distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "Dimension",
    "Domain",
    "ConceptualSpace",
    "Point",
    "Finding",
    "distance",
    "similarity",
    "validate_point",
    "PointMatrix",
]


@dataclass(frozen=True)
class Dimension:
    name: str
    weight: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.weight > 0 or not math.isfinite(self.weight):
            raise ValueError(f"dimension {self.name!r}: weight must be positive, got {self.weight}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"dimension {self.name!r}: range [{self.lo}, {self.hi}] is degenerate")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class Domain:
    name: str
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        if not self.dimensions:
            raise ValueError(f"domain {self.name!r} has no dimensions")


@dataclass(frozen=True)
class ConceptualSpace:
    """A named geometry; dimension names are unique across the whole space."""

    name: str
    domains: tuple[Domain, ...]

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        if not self.domains:
            raise ValueError(f"space {self.name!r} has no domains")
        seen_domains, seen_dims = set(), set()
        for dom in self.domains:
            if dom.name in seen_domains:
                raise ValueError(f"space {self.name!r}: duplicate domain {dom.name!r}")
            seen_domains.add(dom.name)
            for dim in dom.dimensions:
                if dim.name in seen_dims:
                    raise ValueError(f"space {self.name!r}: duplicate dimension {dim.name!r}")
                seen_dims.add(dim.name)

    @cached_property
    def dimensions(self) -> dict[str, Dimension]:
        return {d.name: d for dom in self.domains for d in dom.dimensions}

    @cached_property
    def dimension_names(self) -> tuple[str, ...]:
        return tuple(self.dimensions)


@dataclass(frozen=True)
class Point:
    """Coordinates keyed by dimension name.

    Treat as immutable; ``coords`` is copied on construction.
    """

    coords: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coords", {k: float(v) for k, v in self.coords.items()})

    def __getitem__(self, name: str) -> float:
        return self.coords[name]

    def to_dict(self) -> dict[str, float]:
        return dict(self.coords)


@dataclass(frozen=True)
class Finding:
    """One problem reported by :func:`validate_point`."""

    kind: str  # "OutOfRange" | "UnknownDimension" | "MissingDimension"
    dimension: str
    value: float | None = None

    def __str__(self):
        if self.kind == "OutOfRange":
            return f"{self.kind}: {self.dimension}={self.value}"
        return f"{self.kind}: {self.dimension}"


def validate_point(p: Point, space: ConceptualSpace) -> list[Finding]:
    """List every unknown, missing or out-of-range coordinate of ``p``.

    Ranges are closed, so a coordinate sitting exactly on a bound is valid.
    An empty list means the point is usable in ``space``.
    """
    findings = []
    dims = space.dimensions
    for name in sorted(p.coords):
        dim = dims.get(name)
        if dim is None:
            findings.append(Finding("UnknownDimension", name, p.coords[name]))
            continue
        value = p.coords[name]
        if not (math.isfinite(value) and dim.contains(value)):
            findings.append(Finding("OutOfRange", name, value))
    for name in space.dimension_names:
        if name not in p.coords:
            findings.append(Finding("MissingDimension", name))
    return findings


def _check_pair(a: Point, b: Point, space: ConceptualSpace):
    names = space.dimensions.keys()
    if a.coords.keys() != b.coords.keys():
        raise DimensionMismatch(
            f"coordinate sets differ: {sorted(a.coords)} vs {sorted(b.coords)}")
    if a.coords.keys() != names:
        unknown = sorted(set(a.coords) - set(names))
        missing = sorted(set(names) - set(a.coords))
        raise DimensionMismatch(
            f"points do not match space {space.name!r}"
            f" (unknown: {unknown}, missing: {missing})")


def distance(a: Point, b: Point, space: ConceptualSpace) -> float:
    """Weighted Euclidean within domains, summed across domains."""
    _check_pair(a, b, space)
    total = 0.0
    for dom in space.domains:
        acc = 0.0
        for dim in dom.dimensions:
            t = (a.coords[dim.name] - b.coords[dim.name]) / dim.span
            acc += dim.weight * t * t
        total += math.sqrt(acc)
    return total


def similarity(a: Point, b: Point, space: ConceptualSpace, k: float = 1.0) -> float:
    """``exp(-k * distance)``; 1 exactly when the points coincide."""
    if not k > 0:
        raise ValueError(f"decay k must be positive, got {k}")
    return math.exp(-k * distance(a, b, space))


class PointMatrix:
    """Many points of one space packed for batch distance queries.

    The arithmetic mirrors :func:`distance` operation for operation, so every
    value it returns is bit-identical to the scalar function.
    """

    def __init__(self, space: ConceptualSpace, points: Sequence[Point]):
        self.space = space
        self._names = space.dimension_names
        self._spans = np.array([space.dimensions[n].span for n in self._names])
        self._weights = np.array([space.dimensions[n].weight for n in self._names])
        self._slices = []
        start = 0
        for dom in space.domains:
            self._slices.append(range(start, start + len(dom.dimensions)))
            start += len(dom.dimensions)
        if points:
            self._coords = np.array([[p.coords[n] for n in self._names] for p in points])
        else:
            self._coords = np.empty((0, len(self._names)))

    def __len__(self):
        return self._coords.shape[0]

    def distances(self, p: Point) -> np.ndarray:
        if p.coords.keys() != self.space.dimensions.keys():
            raise DimensionMismatch(f"point does not match space {self.space.name!r}")
        q = np.array([p.coords[n] for n in self._names])
        t = (q - self._coords) / self._spans
        terms = self._weights * t * t
        total = np.zeros(len(self))
        for cols in self._slices:
            acc = np.zeros(len(self))
            for j in cols:
                acc = acc + terms[:, j]
            total = total + np.sqrt(acc)
        return total

    def similarities(self, p: Point, k: float = 1.0) -> list[float]:
        # math.exp rather than np.exp keeps results identical to similarity()
        return [math.exp(-k * d) for d in self.distances(p).tolist()]


def make_space(name: str, domains: Iterable[tuple[str, Iterable[tuple]]]) -> ConceptualSpace:
    """Shorthand constructor: ``make_space("s", [("dom", [("x", 1.0, 0, 10)])])``."""
    return ConceptualSpace(
        name, tuple(Domain(dn, tuple(Dimension(*spec) for spec in dims)) for dn, dims in domains))

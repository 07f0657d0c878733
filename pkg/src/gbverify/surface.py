"""Compact model surfaces, their chart atlases, and divisors.

Three models are supported:

* ``sphere`` -- the Riemann sphere, covered by a ``z`` chart and a ``w`` chart
  with ``w = 1/z`` on the overlap.  The point at infinity is ``w = 0``.
* ``torus`` -- the flat torus C / (Z + tau Z), one fundamental-domain chart.
* ``disk`` -- a local coordinate patch {|z| < R}.  It has no global topology
  and is accepted by local operations only.

A cusp contributes order -1 to the degree of a divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, ValidationError

MODELS = ("sphere", "torus", "disk")
CUSP_ORDER = -1.0


@dataclass(frozen=True)
class Surface:
    model: str
    tau: complex | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValidationError(f"unknown surface model {self.model!r}", "surface.model")
        if self.model == "torus":
            tau = complex(1j if self.tau is None else self.tau)
            if not tau.imag > 0:
                raise ValidationError("torus modulus must have positive imaginary part", "surface.tau")
            object.__setattr__(self, "tau", tau)
        if self.model == "disk":
            if self.radius is None or not self.radius > 0 or not math.isfinite(self.radius):
                raise ValidationError("disk patch radius must be a positive real", "surface.radius")
            object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def sphere(cls) -> "Surface":
        return cls("sphere")

    @classmethod
    def torus(cls, tau: complex = 1j) -> "Surface":
        return cls("torus", tau=tau)

    @classmethod
    def disk(cls, radius: float) -> "Surface":
        return cls("disk", radius=radius)

    @property
    def genus(self) -> int | None:
        return {"sphere": 0, "torus": 1}.get(self.model)

    @property
    def is_compact(self) -> bool:
        return self.model != "disk"

    @property
    def charts(self) -> tuple[str, ...]:
        return ("z", "w") if self.model == "sphere" else ("z",)

    @property
    def topological_euler_characteristic(self) -> int:
        if not self.is_compact:
            raise ValidationError("no global Euler characteristic for local patch")
        return 2 - 2 * self.genus

    def lattice_coordinates(self, z):
        """Split ``z = s + t*tau`` into real lattice coordinates (s, t)."""
        z = np.asarray(z, dtype=complex)
        t = z.imag / self.tau.imag
        s = z.real - t * self.tau.real
        return s, t

    def reduce(self, z):
        """Reduce torus coordinates into the half-open fundamental domain."""
        if self.model != "torus":
            raise DomainError("lattice reduction is only defined on the torus")
        s, t = self.lattice_coordinates(z)
        s = np.mod(s, 1.0)
        t = np.mod(t, 1.0)
        out = s + t * self.tau
        return complex(out) if np.ndim(out) == 0 else out

    def lattice_distance(self, z, a: complex):
        """Distance from ``z`` to the nearest lattice translate of ``a``."""
        z = np.asarray(z, dtype=complex)
        s, t = self.lattice_coordinates(z - a)
        d = (s - np.round(s)) + (t - np.round(t)) * self.tau
        best = np.abs(d)
        # the rounded representative is not always the nearest for skew lattices
        for m in (-1, 0, 1):
            for n in (-1, 0, 1):
                best = np.minimum(best, np.abs(d + m + n * self.tau))
        return best


def chart_transition(surface: Surface, point: complex, source: str, target: str) -> complex:
    """Coordinate of the same surface point in another chart.

    Sphere: ``w = 1/z``.  Torus: reduction into the fundamental domain.
    """
    for chart in (source, target):
        if chart not in surface.charts:
            raise ValidationError(f"chart {chart!r} not in atlas {surface.charts}")
    point = complex(point)
    if surface.model == "torus":
        return surface.reduce(point)
    if source == target:
        return point
    if point == 0:
        raise DomainError(f"point {source}=0 is outside the overlap with chart {target!r}")
    return 1.0 / point


@dataclass(frozen=True)
class SingularPoint:
    chart: str
    location: complex
    kind: str = "cone"
    order: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))
        if self.kind == "cone":
            if self.order is None or not math.isfinite(self.order):
                raise ValidationError("cone point requires a finite order")
            if not self.order > -1:
                raise ValidationError(f"cone order must exceed -1, got {self.order}")
            object.__setattr__(self, "order", float(self.order))
        elif self.kind == "cusp":
            object.__setattr__(self, "order", None)
        else:
            raise ValidationError(f"unknown singularity kind {self.kind!r}")

    @property
    def is_cusp(self) -> bool:
        return self.kind == "cusp"

    @property
    def degree(self) -> float:
        return CUSP_ORDER if self.is_cusp else self.order

    def label(self) -> str:
        return "cusp" if self.is_cusp else f"cone({self.order:g})"


@dataclass(frozen=True)
class Divisor:
    points: tuple[SingularPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        for i, p in enumerate(pts):
            for q in pts[:i]:
                if _same_location(p, q):
                    raise ValidationError(
                        f"divisor points coincide at {p.chart}={p.location!r}"
                    )

    @classmethod
    def of(cls, points: Iterable[SingularPoint]) -> "Divisor":
        return cls(tuple(points))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i) -> SingularPoint:
        return self.points[i]

    @property
    def degree(self) -> float:
        return math.fsum(p.degree for p in self.points)

    @property
    def cusp_count(self) -> int:
        return sum(p.is_cusp for p in self.points)

    def with_point(self, point: SingularPoint) -> "Divisor":
        return Divisor(self.points + (point,))

    def validate_on(self, surface: Surface) -> None:
        for i, p in enumerate(self.points):
            if p.chart not in surface.charts:
                raise ValidationError(
                    f"chart {p.chart!r} not in atlas {surface.charts}", f"divisor[{i}].chart"
                )
            if surface.model == "disk" and abs(p.location) >= surface.radius:
                raise ValidationError("point lies outside the disk patch", f"divisor[{i}].location")
        if surface.model == "torus":
            reduced = [surface.reduce(p.location) for p in self.points]
            for i in range(len(reduced)):
                for j in range(i):
                    if surface.lattice_distance(reduced[i], reduced[j]) == 0:
                        raise ValidationError("divisor points coincide modulo the lattice")


def _same_location(p: SingularPoint, q: SingularPoint) -> bool:
    if p.chart == q.chart:
        return p.location == q.location
    # cross-chart comparison is only meaningful on the sphere
    if {p.chart, q.chart} == {"z", "w"}:
        if p.location == 0 or q.location == 0:
            return False
        return abs(1.0 / p.location - q.location) <= 1e-15 * abs(q.location)
    return False


def euler_characteristic(surface: Surface, divisor: Divisor) -> float:
    """chi(S, beta) = chi(S) + deg(beta)."""
    if not surface.is_compact:
        raise ValidationError("no global Euler characteristic for local patch")
    divisor.validate_on(surface)
    return surface.topological_euler_characteristic + divisor.degree

"""Conformal metrics e^{2v}|dz|^2 with cone and cusp singularities.

A metric stores one log-conformal factor ``v`` per chart plus, for every
divisor point, the regular part ``u`` of the local decomposition::

    cone of order b at a:  v(z) = b*log|z - a| + u(z)
    cusp at a:             v(z) = -log|z - a| - log(-log|z - a|) + u(z)

Orders are never inferred from samples; they come from the divisor.  Built-in
families carry closed-form Wirtinger derivatives (``dz`` = dv/dz and
``dzdzbar`` = d^2 v / dz dzbar) so curvature and fluxes avoid finite
differences entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, UnsupportedConfigurationError, ValidationError
from .surface import Divisor, SingularPoint, Surface

MAX_DECOMPOSITION_RADIUS = 0.5


def _c(z):
    return np.asarray(z, dtype=complex)


def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@dataclass(frozen=True)
class ScalarField:
    """A real scalar field on a chart with optional analytic Wirtinger handles."""

    value: Callable
    dz: Callable | None = None
    dzdzbar: Callable | None = None

    def __call__(self, z):
        return np.asarray(self.value(_c(z)), dtype=float)

    @property
    def has_handles(self) -> bool:
        return self.dz is not None and self.dzdzbar is not None

    def without_handles(self) -> "ScalarField":
        return ScalarField(self.value)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        a, b = self, other
        dz = dzz = None
        if a.dz is not None and b.dz is not None:
            dz = lambda z: a.dz(z) + b.dz(z)
        if a.dzdzbar is not None and b.dzdzbar is not None:
            dzz = lambda z: a.dzdzbar(z) + b.dzdzbar(z)
        return ScalarField(lambda z: a.value(z) + b.value(z), dz, dzz)

    def __neg__(self) -> "ScalarField":
        a = self
        return ScalarField(
            lambda z: -a.value(z),
            None if a.dz is None else (lambda z: -a.dz(z)),
            None if a.dzdzbar is None else (lambda z: -a.dzdzbar(z)),
        )

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self + (-other)


def constant_field(c: float) -> ScalarField:
    return ScalarField(
        lambda z: np.full(np.shape(z), float(c)),
        lambda z: np.zeros(np.shape(z), dtype=complex),
        lambda z: np.zeros(np.shape(z)),
    )


def cone_model_field(order: float, center: complex = 0j) -> ScalarField:
    """order * log|z - center| (harmonic away from the center)."""
    a = complex(center)
    return ScalarField(
        lambda z: 0.5 * order * np.log(_abs2(_c(z) - a)) if order else np.zeros(np.shape(z)),
        lambda z: order / (2.0 * (_c(z) - a)) if order else np.zeros(np.shape(z), dtype=complex),
        lambda z: np.zeros(np.shape(z)),
    )


def cusp_model_field(center: complex = 0j) -> ScalarField:
    """-log|z - a| - log(-log|z - a|), the standard cusp factor (|z - a| < 1)."""
    a = complex(center)

    def value(z):
        s = _abs2(_c(z) - a)
        return -0.5 * np.log(s) - np.log(-0.5 * np.log(s))

    def dz(z):
        zeta = _c(z) - a
        log_r = 0.5 * np.log(_abs2(zeta))
        return -1.0 / (2.0 * zeta) - 1.0 / (2.0 * zeta * log_r)

    def dzdzbar(z):
        s = _abs2(_c(z) - a)
        return 1.0 / (s * np.log(s) ** 2)

    return ScalarField(value, dz, dzdzbar)


def singular_model_field(point: SingularPoint) -> ScalarField:
    if point.is_cusp:
        return cusp_model_field(point.location)
    return cone_model_field(point.order, point.location)


def compose_power(f: ScalarField, n: int, center: complex = 0j, log_coef: float = 0.0,
                  const: float = 0.0) -> ScalarField:
    """g(w) = f(center + w**n) + const + log_coef*log|w| with chain-ruled handles."""
    a = complex(center)

    def value(w):
        w = _c(w)
        out = f.value(a + w ** n) + const
        if log_coef:
            out = out + 0.5 * log_coef * np.log(_abs2(w))
        return out

    dz = dzz = None
    if f.dz is not None:
        def dz(w):
            w = _c(w)
            out = f.dz(a + w ** n) * n * w ** (n - 1)
            if log_coef:
                out = out + log_coef / (2.0 * w)
            return out
    if f.dzdzbar is not None:
        def dzz(w):
            w = _c(w)
            return f.dzdzbar(a + w ** n) * n * n * _abs2(w) ** (n - 1)
    return ScalarField(value, dz, dzz)


def invert_chart(f: ScalarField, log_coef: float = -2.0) -> ScalarField:
    """Express a sphere z-chart field in the w-chart: f(1/w) + log_coef*log|w|.

    With ``log_coef = -2`` this is the transformation rule of a log-conformal
    factor (|dz| = |dw| / |w|^2); with ``0`` it transports a plain function.
    """

    def value(w):
        w = _c(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = f.value(1.0 / w)
        if log_coef:
            out = out + 0.5 * log_coef * np.log(_abs2(w))
        return out

    dz = dzz = None
    if f.dz is not None:
        def dz(w):
            w = _c(w)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = f.dz(1.0 / w) * (-1.0 / (w * w))
            out = np.where(np.isfinite(out), out, 0.0) if not log_coef else out
            if log_coef:
                out = out + log_coef / (2.0 * w)
            return out
    if f.dzdzbar is not None:
        def dzz(w):
            w = _c(w)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                out = f.dzdzbar(1.0 / w) / _abs2(w) ** 2
            return np.where(np.isfinite(out), out, 0.0) if not log_coef else out
    return ScalarField(value, dz, dzz)


@dataclass(frozen=True)
class Bump:
    """Gaussian perturbation amplitude * exp(-|z - center|^2 / width^2).

    ``center`` is a z-chart coordinate.  On the torus the bump is periodised
    over nearby lattice translates; on the sphere it is transported to the
    w-chart as a function.  Its support is taken to be the disk of radius
    ``3 * width``; a divisor point inside that disk makes the bump inadmissible.
    """

    center: complex
    amplitude: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.width > 0:
            raise ValidationError("bump width must be positive")

    @property
    def support_radius(self) -> float:
        return 3.0 * self.width

    def _plain(self, shift: complex = 0j) -> ScalarField:
        c, amp, w2 = self.center + shift, self.amplitude, self.width ** 2

        def value(z):
            return amp * np.exp(-_abs2(_c(z) - c) / w2)

        def dz(z):
            z = _c(z)
            return value(z) * (-np.conj(z - c) / w2)

        def dzz(z):
            z = _c(z)
            return value(z) * (_abs2(z - c) / w2 ** 2 - 1.0 / w2)

        return ScalarField(value, dz, dzz)

    def fields(self, surface: Surface) -> dict[str, ScalarField]:
        if surface.model == "torus":
            tau = surface.tau
            total = None
            for m in range(-2, 3):
                for n in range(-2, 3):
                    piece = self._plain(m + n * tau)
                    total = piece if total is None else total + piece
            return {"z": total}
        plain = self._plain()
        if surface.model == "sphere":
            return {"z": plain, "w": invert_chart(plain, log_coef=0.0)}
        return {"z": plain}

    def check_admissible(self, metric: "ConformalMetric") -> None:
        surface = metric.surface
        if surface.model == "torus" and self.width > 0.3 * min(1.0, surface.tau.imag, abs(surface.tau)):
            raise ValidationError("bump too wide for periodisation on this lattice")
        for i, p in enumerate(metric.divisor):
            loc = _to_z_chart(surface, p)
            if loc is None:
                continue
            if surface.model == "torus":
                dist = float(surface.lattice_distance(self.center, loc))
            else:
                dist = abs(self.center - loc)
            if dist <= self.support_radius:
                raise ValidationError(
                    f"bump support (radius {self.support_radius:g}) touches singular point {i}"
                )


def _to_z_chart(surface: Surface, p: SingularPoint) -> complex | None:
    if p.chart == "z":
        return p.location
    if p.location == 0:
        return None
    return 1.0 / p.location


@dataclass(frozen=True)
class ConformalMetric:
    surface: Surface
    divisor: Divisor
    log_factor: Mapping[str, ScalarField]
    regular_parts: tuple[ScalarField, ...] = ()
    family: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)
    decomposition_radii: tuple[float, ...] = ()

    def __post_init__(self):
        self.divisor.validate_on(self.surface)
        missing = set(self.surface.charts) - set(self.log_factor)
        if missing:
            raise ValidationError(f"log factor missing for charts {sorted(missing)}")
        parts = tuple(self.regular_parts)
        if not parts:
            parts = tuple(
                self.log_factor[p.chart] - singular_model_field(p) for p in self.divisor
            )
        if len(parts) != len(self.divisor):
            raise ValidationError("one regular part is required per divisor point")
        object.__setattr__(self, "regular_parts", parts)
        object.__setattr__(self, "log_factor", dict(self.log_factor))
        object.__setattr__(self, "params", dict(self.params))
        auto = default_decomposition_radii(self.surface, self.divisor)
        radii = tuple(self.decomposition_radii) or auto
        if len(radii) != len(self.divisor):
            raise ValidationError("one decomposition radius is required per divisor point")
        for r, r_max in zip(radii, auto):
            if not 0 < r <= r_max + 1e-15:
                raise ValidationError(f"decomposition radius {r} outside (0, {r_max}]")
        object.__setattr__(self, "decomposition_radii", tuple(float(r) for r in radii))

    @property
    def has_handles(self) -> bool:
        return all(f.has_handles for f in self.log_factor.values()) and all(
            u.has_handles for u in self.regular_parts
        )

    def v(self, z, chart: str = "z"):
        return self.log_factor[chart](z)

    def density(self, z, chart: str = "z"):
        return np.exp(2.0 * self.v(z, chart))

    def points_in_chart(self, chart: str) -> list[tuple[int, SingularPoint]]:
        return [(i, p) for i, p in enumerate(self.divisor) if p.chart == chart]

    def distance_to_singular(self, z, chart: str = "z"):
        """Distance from chart points ``z`` to the nearest singular point in that chart."""
        z = _c(z)
        best = np.full(z.shape, np.inf)
        for _, p in self.points_in_chart(chart):
            if self.surface.model == "torus":
                d = self.surface.lattice_distance(z, p.location)
            else:
                d = np.abs(z - p.location)
            best = np.minimum(best, d)
        return best

    def local_scale(self, z, chart: str = "z"):
        return np.minimum(1.0, self.distance_to_singular(z, chart))

    def without_handles(self) -> "ConformalMetric":
        """Same metric with every analytic derivative handle stripped."""
        return replace(
            self,
            log_factor={k: f.without_handles() for k, f in self.log_factor.items()},
            regular_parts=tuple(u.without_handles() for u in self.regular_parts),
        )

    def with_marked_point(self, chart: str, location: complex) -> "ConformalMetric":
        """Mark a regular point as an order-0 cone point (u = v there)."""
        point = SingularPoint(chart, location, "cone", 0.0)
        return replace(
            self,
            divisor=self.divisor.with_point(point),
            regular_parts=self.regular_parts + (self.log_factor[chart],),
            decomposition_radii=(),
        )


def default_decomposition_radii(surface: Surface, divisor: Divisor) -> tuple[float, ...]:
    """Half the distance to the nearest other singular point or chart seam, capped at 0.5.

    On a disk patch the radius also stops at the patch edge.
    """
    radii = []
    pts = divisor.points
    for i, p in enumerate(pts):
        r = 2 * MAX_DECOMPOSITION_RADIUS
        edge = math.inf
        a = p.location
        if surface.model == "sphere":
            if abs(a) >= 1:
                raise ValidationError(
                    f"sphere point must satisfy |{p.chart}| < 1; enter it in the other chart",
                    f"divisor[{i}].location",
                )
            r = min(r, 1 - abs(a))
        elif surface.model == "disk":
            # the patch edge is a boundary, not a seam: u is valid up to it
            edge = surface.radius - abs(a)
        else:
            shortest = min(abs(m + n * surface.tau) for m in (-1, 0, 1) for n in (-1, 0, 1)
                           if (m, n) != (0, 0))
            r = min(r, shortest)
        for j, q in enumerate(pts):
            if j == i:
                continue
            if surface.model == "torus":
                r = min(r, float(surface.lattice_distance(a, q.location)))
            elif q.chart == p.chart:
                r = min(r, abs(a - q.location))
            elif q.location != 0:
                r = min(r, abs(a - 1.0 / q.location))
        radii.append(min(MAX_DECOMPOSITION_RADIUS, 0.5 * r, edge))
    return tuple(radii)


def _check_order(beta: float, name: str = "beta") -> float:
    beta = float(beta)
    if not beta > -1 or not math.isfinite(beta):
        raise ValidationError(f"cone order must exceed -1, got {beta}", f"metric.params.{name}")
    return beta


# ---------------------------------------------------------------- families


def _football_fields(beta: float) -> tuple[ScalarField, ScalarField]:
    k = 1.0 + beta
    c = math.log(2.0 * k)

    def v(z):
        s = _abs2(_c(z))
        out = c - np.log1p(s ** k)
        if beta:
            out = out + 0.5 * beta * np.log(s)
        return out

    def u(z):
        return c - np.log1p(_abs2(_c(z)) ** k)

    def u_dz(z):
        z = _c(z)
        s = _abs2(z)
        return -k * s ** beta * np.conj(z) / (1.0 + s ** k)

    def v_dz(z):
        out = u_dz(z)
        if beta:
            out = out + beta / (2.0 * _c(z))
        return out

    def dzz(z):
        s = _abs2(_c(z))
        return -k * k * s ** beta / (1.0 + s ** k) ** 2

    return ScalarField(v, v_dz, dzz), ScalarField(u, u_dz, dzz)


def football_metric(beta: float) -> ConformalMetric:
    """Curvature-1 sphere with cone points of order ``beta`` at 0 and infinity.

    e^{2v} = 4(1+beta)^2 |z|^{2 beta} / (1 + |z|^{2(1+beta)})^2, the same
    expression in both charts.
    """
    beta = _check_order(beta)
    v, u = _football_fields(beta)
    divisor = Divisor((SingularPoint("z", 0, "cone", beta), SingularPoint("w", 0, "cone", beta)))
    return ConformalMetric(Surface.sphere(), divisor, {"z": v, "w": v}, (u, u),
                           family="football", params={"beta": beta})


def round_sphere_metric() -> ConformalMetric:
    v, _ = _football_fields(0.0)
    return ConformalMetric(Surface.sphere(), Divisor(), {"z": v, "w": v}, (), family="round_sphere")


def flat_cone_metric(beta: float, radius: float) -> ConformalMetric:
    """v = beta*log|z| on the patch {|z| < radius}; flat away from 0."""
    beta = _check_order(beta)
    surface = Surface.disk(radius)
    divisor = Divisor((SingularPoint("z", 0, "cone", beta),))
    return ConformalMetric(surface, divisor, {"z": cone_model_field(beta)}, (constant_field(0.0),),
                           family="flat_cone", params={"beta": beta, "radius": float(radius)})


def cusp_model_metric(radius: float) -> ConformalMetric:
    """Complete hyperbolic cusp |dz|^2 / (|z| log|z|)^2 on {0 < |z| < radius}."""
    if not 0 < radius < 1:
        raise ValidationError("cusp patch radius must lie in (0, 1)", "surface.radius")
    surface = Surface.disk(radius)
    divisor = Divisor((SingularPoint("z", 0, "cusp"),))
    return ConformalMetric(surface, divisor, {"z": cusp_model_field()}, (constant_field(0.0),),
                           family="cusp_model", params={"radius": float(radius)})


def flat_torus_metric(tau: complex = 1j) -> ConformalMetric:
    return ConformalMetric(Surface.torus(tau), Divisor(), {"z": constant_field(0.0)},
                           family="flat_torus", params={"tau_re": complex(tau).real,
                                                        "tau_im": complex(tau).imag})


def _t_minus_log1p(t):
    """t - log(1 + t) without cancellation for small t."""
    t = np.asarray(t, dtype=float)
    out = t - np.log1p(t)
    small = np.abs(t) < 0.1
    if np.any(small):
        ts = t[small]
        acc = np.zeros_like(ts)
        term = ts.copy()
        for k in range(2, 30):
            term = term * ts
            acc += (-1) ** k * term / k
        out = np.array(out)
        out[small] = acc
    return out


def cusp_sphere_metric(beta: float) -> ConformalMetric:
    """Sphere with a cusp at z = 0 and a cone point of order ``beta`` at infinity.

    v = -log|z| - log(log(1 + |z|^-2) / 2) - c log(1 + |z|^2), c = (beta + 3)/2.
    Curvature tends to -1 at the cusp; chi(S, beta) = 2 - 1 + beta.
    """
    beta = _check_order(beta)
    c = 0.5 * (beta + 3.0)

    # z-chart, s = |z|^2, L = log(1 + 1/s)
    def vz(z):
        s = _abs2(_c(z))
        return -0.5 * np.log(s) - np.log(0.5 * np.log1p(1.0 / s)) - c * np.log1p(s)

    def vz_dz(z):
        z = _c(z)
        s = _abs2(z)
        L = np.log1p(1.0 / s)
        return (-0.5 + 1.0 / ((1.0 + s) * L) - c * s / (1.0 + s)) / z

    def vz_dzz(z):
        s = _abs2(_c(z))
        L = np.log1p(1.0 / s)
        return 1.0 / (s * (1.0 + s) ** 2 * L ** 2) - 1.0 / ((1.0 + s) ** 2 * L) - c / (1.0 + s) ** 2

    def u0(z):
        s = _abs2(_c(z))
        return np.log(-np.log(s) / np.log1p(1.0 / s)) - c * np.log1p(s)

    def u0_dz(z):
        z = _c(z)
        s = _abs2(z)
        ell, m = np.log(s), np.log1p(s)
        L = m - ell
        su = (m * (1.0 + s) - s * ell) / ((1.0 + s) * L * ell) - c * s / (1.0 + s)
        return su / z

    def u0_dzz(z):
        s = _abs2(_c(z))
        ell, m = np.log(s), np.log1p(s)
        L = m - ell
        first = ((2.0 + s) * ell - (1.0 + s) * m) * ((1.0 + s) * m - s * ell)
        first = first / (s * (1.0 + s) ** 2 * L ** 2 * ell ** 2)
        return first - 1.0 / ((1.0 + s) ** 2 * L) - c / (1.0 + s) ** 2

    # w-chart, t = |w|^2, Lt = log(1 + t)
    def uinf(w):
        t = _abs2(_c(w))
        g = np.log1p(t) / t
        return -np.log(0.5 * g) - c * np.log1p(t)

    def _t_uprime(t):
        Lt = np.log1p(t)
        D = _t_minus_log1p(t)
        return (t * Lt - D) / ((1.0 + t) * Lt) - c * t / (1.0 + t)

    def uinf_dz(w):
        w = _c(w)
        return _t_uprime(_abs2(w)) / w

    def w_dzz(w):
        t = _abs2(_c(w))
        Lt = np.log1p(t)
        return _t_minus_log1p(t) / ((1.0 + t) ** 2 * Lt ** 2) - c / (1.0 + t) ** 2

    def vw(w):
        w = _c(w)
        out = uinf(w)
        if beta:
            out = out + 0.5 * beta * np.log(_abs2(w))
        return out

    def vw_dz(w):
        out = uinf_dz(w)
        if beta:
            out = out + beta / (2.0 * _c(w))
        return out

    divisor = Divisor((SingularPoint("z", 0, "cusp"), SingularPoint("w", 0, "cone", beta)))
    return ConformalMetric(
        Surface.sphere(),
        divisor,
        {"z": ScalarField(vz, vz_dz, vz_dzz), "w": ScalarField(vw, vw_dz, w_dzz)},
        (ScalarField(u0, u0_dz, u0_dzz), ScalarField(uinf, uinf_dz, w_dzz)),
        family="cusp_sphere",
        params={"beta": beta},
    )


# ---------------------------------------------------------------- operations


def evaluate_density(metric: ConformalMetric, point: complex, chart: str = "z") -> float:
    """e^{2v} at a chart point that is not a cusp or a cone of nonzero order."""
    for _, p in metric.points_in_chart(chart):
        if p.order == 0:
            continue  # marked point, the density is smooth there
        if metric.surface.model == "torus":
            hit = float(metric.surface.lattice_distance(np.array([point]), p.location)[0]) == 0
        else:
            hit = complex(point) == p.location
        if hit:
            raise DomainError(f"density undefined at singular point {chart}={complex(point)!r}")
    value = float(metric.density(np.array([point]), chart)[0])
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"density not positive and finite at {chart}={complex(point)!r}")
    return value


def perturb(metric: ConformalMetric, bump: Bump | Mapping[str, ScalarField]) -> ConformalMetric:
    """Add a smooth field to the log factor and to every regular part."""
    if isinstance(bump, Bump):
        if bump.amplitude == 0:
            return metric
        bump.check_admissible(metric)
        fields = bump.fields(metric.surface)
    else:
        fields = dict(bump)
    log_factor = {k: f + fields[k] for k, f in metric.log_factor.items()}
    parts = tuple(u + fields[p.chart] for u, p in zip(metric.regular_parts, metric.divisor))
    perturbations = list(metric.params.get("perturbations", ()))
    if isinstance(bump, Bump):
        perturbations.append((bump.center.real, bump.center.imag, bump.amplitude, bump.width))
    params = dict(metric.params)
    params["perturbations"] = tuple(perturbations)
    return replace(metric, log_factor=log_factor, regular_parts=parts, params=params)


def branched_cover_pullback(metric: ConformalMetric, m: int) -> ConformalMetric:
    """Pull a single-cone disk patch back along z = a + w^(m+1).

    The pulled-back order is m + (m+1)*beta and the regular part becomes
    u(a + w^(m+1)) + log(m+1).  ``m = 0`` is the identity.
    """
    if int(m) != m or m < 0:
        raise ValidationError(f"cover exponent must be a non-negative integer, got {m}")
    m = int(m)
    if metric.surface.model != "disk":
        raise UnsupportedConfigurationError("branched cover pullback acts on a disk patch")
    if len(metric.divisor) != 1 or metric.divisor[0].is_cusp:
        raise UnsupportedConfigurationError("branched cover pullback needs exactly one cone point")
    if m == 0:
        return metric
    p = metric.divisor[0]
    n = m + 1
    a = p.location
    new_order = m + n * p.order
    radius = (metric.surface.radius - abs(a)) ** (1.0 / n)
    v = compose_power(metric.log_factor["z"], n, a, log_coef=m, const=math.log(n))
    u = compose_power(metric.regular_parts[0], n, a, const=math.log(n))
    params = dict(metric.params)
    params.update({"cover_exponent": m, "base_order": p.order})
    return ConformalMetric(
        Surface.disk(radius),
        Divisor((SingularPoint("z", 0, "cone", new_order),)),
        {"z": v},
        (u,),
        family=f"{metric.family}_branched",
        params=params,
    )


def power_cover_pullback(metric: ConformalMetric, n: int) -> ConformalMetric:
    """Pull a sphere metric back along f(z) = z^n.

    Every divisor point must sit at 0 (z-chart) or infinity (w-chart).  Over
    each of the two branch points the pulled-back order is (n-1) + n*beta,
    with beta = 0 where the base has no singularity.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"cover degree must be a positive integer, got {n}")
    n = int(n)
    if metric.surface.model != "sphere":
        raise UnsupportedConfigurationError("power cover pullback acts on sphere metrics")
    base = {}
    for i, p in enumerate(metric.divisor):
        if p.location != 0:
            raise UnsupportedConfigurationError(
                f"divisor point {i} at {p.chart}={p.location!r} is not a branch point of z^n"
            )
        if p.is_cusp:
            raise UnsupportedConfigurationError("power covers over cusps are not supported")
        base[p.chart] = (p.order, metric.regular_parts[i])
    if n == 1:
        return metric
    log_factor = {
        chart: compose_power(f, n, log_coef=n - 1, const=math.log(n))
        for chart, f in metric.log_factor.items()
    }
    points, parts = [], []
    for chart in ("z", "w"):
        order, u = base.get(chart, (0.0, metric.log_factor[chart]))
        points.append(SingularPoint(chart, 0, "cone", (n - 1) + n * order))
        parts.append(compose_power(u, n, const=math.log(n)))
    params = dict(metric.params)
    params["cover_degree"] = n
    return ConformalMetric(metric.surface, Divisor(tuple(points)), log_factor, tuple(parts),
                           family=f"{metric.family}_cover", params=params)


@dataclass(frozen=True)
class FamilyInfo:
    name: str
    surface: str
    params: tuple[str, ...]
    divisor: str
    chi: str
    total_curvature: str


FAMILIES: dict[str, FamilyInfo] = {
    "football": FamilyInfo("football", "sphere", ("beta",),
                           "cone(beta) at z=0 and w=0", "2 + 2*beta", "2*pi*(2 + 2*beta)"),
    "round_sphere": FamilyInfo("round_sphere", "sphere", (), "empty", "2", "4*pi"),
    "cusp_sphere": FamilyInfo("cusp_sphere", "sphere", ("beta",),
                              "cusp at z=0, cone(beta) at w=0", "1 + beta", "2*pi*(1 + beta)"),
    "flat_torus": FamilyInfo("flat_torus", "torus", (), "empty", "0", "0"),
    "flat_cone": FamilyInfo("flat_cone", "disk", ("beta",),
                            "cone(beta) at z=0", "n/a (local patch)", "0 away from z=0"),
    "cusp_model": FamilyInfo("cusp_model", "disk", (),
                             "cusp at z=0", "n/a (local patch)", "-area (K = -1)"),
}


def build_family(name: str, surface: Surface, params: Mapping[str, float]) -> ConformalMetric:
    """Instantiate a built-in family on ``surface`` (used by the CLI)."""
    if name not in FAMILIES:
        raise ValidationError(f"unknown family {name!r}", "metric.family")
    info = FAMILIES[name]
    if surface.model != info.surface:
        raise ValidationError(f"family {name!r} lives on a {info.surface}, not a {surface.model}",
                              "surface.model")
    unknown = set(params) - set(info.params)
    if unknown:
        raise ValidationError(f"unexpected parameters {sorted(unknown)}", "metric.params")
    for key in info.params:
        if key not in params:
            raise ValidationError("missing parameter", f"metric.params.{key}")
    if name == "football":
        return football_metric(params["beta"])
    if name == "round_sphere":
        return round_sphere_metric()
    if name == "cusp_sphere":
        return cusp_sphere_metric(params["beta"])
    if name == "flat_torus":
        return flat_torus_metric(surface.tau)
    if name == "flat_cone":
        return flat_cone_metric(params["beta"], surface.radius)
    return cusp_model_metric(surface.radius)

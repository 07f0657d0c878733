"""Area integration with singular weights on excised surfaces.

The excised surface S_eps = S minus the eps-disks around the divisor points
is split with a smooth partition of unity.  Each singular point ``i`` owns a
cutoff psi_i that is 1 on |z - a_i| < r_i/2 and 0 beyond its decomposition
radius r_i.  Then

    integral over S_eps = bulk integral of f * (1 - sum psi_i)
                        + sum_i integral of f * psi_i over eps < |z - a_i| < r_i.

The bulk integrand is smooth, so each chart region gets a tensor rule (polar
cells on the sphere charts and disk patches, periodic midpoints on the torus).
The annuli use polar cells graded geometrically in the radius for cone points
and geometrically in log(1/r) for cusps; Gauss-Legendre nodes are placed in the
log-radius (cone) or log-log (cusp) variable, where the power-law and cusp
weights become smooth.

A ladder of radii eps_0 > eps_1 > ... is evaluated by telescoping: the shells
eps_k < r < eps_{k-1} are integrated once and accumulated with exact-rounded
summation, which makes the ladder monotone for non-negative integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .calculus import DerivativePolicy, curvature_form, wirtinger
from .errors import NumericalError, ValidationError
from .metric import ConformalMetric

DEFAULT_LADDER = tuple(0.1 * 2.0 ** -k for k in range(9))
CUSP_LADDER = tuple(0.1 * 2.0 ** -k for k in range(41))


@dataclass(frozen=True)
class GradedScheme:
    """Resolution settings for singular area quadrature.

    ``excision_ladder=None`` selects 0.1 * 2^-k with k = 0..8, extended to
    k = 0..40 when the divisor has cusps (cusp terms decay like 1/log eps).
    ``richardson_order=None`` fits the decay exponent from the ladder.
    """

    excision_ladder: tuple[float, ...] | None = None
    radial_levels: int = 32
    angular_count: int = 256
    bulk_resolution: int = 64
    richardson_order: float | None = None
    points_per_cell: int = 4
    sphere_seam: float = 1.0

    def __post_init__(self):
        if self.excision_ladder is not None:
            ladder = tuple(float(e) for e in self.excision_ladder)
            if not ladder:
                raise ValidationError("excision ladder must be non-empty", "scheme.excision_ladder")
            if any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
                raise ValidationError("excision ladder must be positive and strictly decreasing",
                                      "scheme.excision_ladder")
            object.__setattr__(self, "excision_ladder", ladder)
        if self.radial_levels < 8:
            raise ValidationError("radial_levels must be >= 8", "scheme.radial_levels")
        if self.angular_count < 64:
            raise ValidationError("angular_count must be >= 64", "scheme.angular_count")
        if self.bulk_resolution < 4:
            raise ValidationError("bulk_resolution must be >= 4", "scheme.bulk_resolution")
        if not 1 <= self.points_per_cell <= 16:
            raise ValidationError("points_per_cell must lie in [1, 16]", "scheme.points_per_cell")
        if self.richardson_order is not None and not self.richardson_order > 0:
            raise ValidationError("richardson_order must be positive", "scheme.richardson_order")
        if not self.sphere_seam > 0:
            raise ValidationError("sphere_seam must be positive", "scheme.sphere_seam")

    def ladder_for(self, metric: ConformalMetric) -> tuple[float, ...]:
        if self.excision_ladder is not None:
            return self.excision_ladder
        return CUSP_LADDER if metric.divisor.cusp_count else DEFAULT_LADDER

    def refined(self, factor: int = 2) -> "GradedScheme":
        return GradedScheme(self.excision_ladder, self.radial_levels * factor,
                            self.angular_count * factor, self.bulk_resolution * factor,
                            self.richardson_order, self.points_per_cell, self.sphere_seam)


@dataclass
class LadderResult:
    """Integral values along an excision ladder plus the extrapolated limit."""

    value: float
    ladder: list[tuple[float, float]]
    exponent: float | None = None
    error_estimate: float = 0.0
    verdict: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e for e, _ in self.ladder])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.ladder])


# ---------------------------------------------------------------- rules


def smooth_cutoff(rho, radius: float):
    """C-infinity step: 1 for rho <= radius/2, 0 for rho >= radius."""
    t = (np.asarray(rho, dtype=float) - 0.5 * radius) / (0.5 * radius)
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
        b = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    return a / (a + b)


def _gauss_cells(lo: float, hi: float, cells: int, p: int):
    x, w = np.polynomial.legendre.leggauss(p)
    edges = np.linspace(lo, hi, cells + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _angles(n: int):
    return 2.0 * np.pi * (np.arange(n) + 0.5) / n


def _disk_rule(radius: float, scheme: GradedScheme):
    cells = max(scheme.bulk_resolution, math.ceil(scheme.bulk_resolution * radius))
    r, wr = _gauss_cells(0.0, radius, cells, scheme.points_per_cell)
    n_theta = max(scheme.angular_count, math.ceil(2 * np.pi * radius * scheme.bulk_resolution))
    theta = _angles(n_theta)
    z = r[:, None] * np.exp(1j * theta)[None, :]
    w = (r * wr)[:, None] * np.full(n_theta, 2.0 * np.pi / n_theta)[None, :]
    return z, w


def _torus_rule(tau: complex, scheme: GradedScheme):
    n_s = scheme.bulk_resolution * scheme.points_per_cell
    n_t = max(n_s, math.ceil(n_s * abs(tau)))
    s = (np.arange(n_s) + 0.5) / n_s
    t = (np.arange(n_t) + 0.5) / n_t
    z = s[:, None] + t[None, :] * tau
    w = np.full(z.shape, tau.imag / (n_s * n_t))
    return z, w


def _graded_rule(inner: float, outer: float, kind: str, scheme: GradedScheme):
    p, cells = scheme.points_per_cell, scheme.radial_levels
    if kind == "cusp":
        if outer >= 1:
            raise ValidationError("cusp annulus must lie inside |z - a| < 1")
        lo, hi = math.log(-math.log(outer)), math.log(-math.log(inner))
        s, ws = _gauss_cells(lo, hi, cells, p)
        rho = np.exp(-np.exp(s))
        return rho, rho * rho * np.exp(s) * ws
    s, ws = _gauss_cells(math.log(inner), math.log(outer), cells, p)
    rho = np.exp(s)
    return rho, rho * rho * ws


def _annulus_rule(inner: float, outer: float, kind: str, scheme: GradedScheme, band: float):
    """Radial nodes/weights (weights include the polar Jacobian rho) on [inner, outer].

    Radii above ``band`` (where the cutoff varies) get uniform cells in rho.
    """
    parts = []
    if inner < band:
        parts.append(_graded_rule(inner, min(outer, band), kind, scheme))
    if outer > band:
        rho, w = _gauss_cells(max(inner, band), outer, scheme.radial_levels, scheme.points_per_cell)
        parts.append((rho, rho * w))
    return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])


def _checked(values, z, chart: str):
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        loc = complex(np.broadcast_to(z, values.shape)[bad].ravel()[0])
        raise NumericalError("non-finite integrand sample", loc, chart)
    return values


def _pairwise_total(values, weights) -> float:
    return math.fsum(np.sum(values * weights, axis=-1).ravel())


# ---------------------------------------------------------------- core


Form = Callable[[np.ndarray, str], np.ndarray]


def _regions(metric: ConformalMetric, scheme: GradedScheme):
    surface = metric.surface
    if surface.model == "sphere":
        seam = scheme.sphere_seam
        return [("z", "disk", seam), ("w", "disk", 1.0 / seam)]
    if surface.model == "disk":
        return [("z", "disk", surface.radius)]
    return [("z", "torus", surface.tau)]


def effective_radii(metric: ConformalMetric, scheme: GradedScheme) -> list[float]:
    """Decomposition radii, shrunk if a non-default sphere seam moves the chart boundary."""
    radii = list(metric.decomposition_radii)
    if metric.surface.model == "sphere":
        bounds = {"z": scheme.sphere_seam, "w": 1.0 / scheme.sphere_seam}
        for i, p in enumerate(metric.divisor):
            gap = bounds[p.chart] - abs(p.location)
            if gap <= 0:
                raise ValidationError(f"singular point {i} lies outside its chart region")
            radii[i] = min(radii[i], 0.5 * gap)
    return radii


def excised_ladder(metric: ConformalMetric, form: Form, scheme: GradedScheme,
                   ladder) -> np.ndarray:
    """Integral of ``form`` (a density against dx dy, evaluated as form(z, chart))
    over S_eps for every eps in the decreasing ``ladder``."""
    ladder = [float(e) for e in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])) or any(e <= 0 for e in ladder):
        raise ValidationError("excision radii must be positive and strictly decreasing")
    radii = effective_radii(metric, scheme)
    for i, r in enumerate(radii):
        if ladder and ladder[0] >= r:
            raise ValidationError(
                f"excision radius {ladder[0]:g} not below decomposition radius {r:g} of point {i}"
            )
    base: list[float] = []
    for chart, kind, size in _regions(metric, scheme):
        if kind == "disk":
            z, w = _disk_rule(size, scheme)
        else:
            z, w = _torus_rule(size, scheme)
        keep = np.ones(z.shape)
        for i, p in metric.points_in_chart(chart):
            if metric.surface.model == "torus":
                rho = metric.surface.lattice_distance(z, p.location)
            else:
                rho = np.abs(z - p.location)
            keep = keep - smooth_cutoff(rho, radii[i])
        mask = keep > 0
        vals = np.zeros(z.shape)
        if np.any(mask):
            vals[mask] = _checked(form(z[mask], chart), z[mask], chart) * keep[mask]
        base.append(_pairwise_total(vals, w))

    theta = _angles(scheme.angular_count)
    dtheta = 2.0 * np.pi / scheme.angular_count
    e = np.exp(1j * theta)
    shells: list[list[float]] = [[] for _ in ladder]
    for i, p in enumerate(metric.divisor):
        kind = "cusp" if p.is_cusp else "cone"
        bounds = [radii[i]] + ladder
        for k in range(len(ladder)):
            rho, wr = _annulus_rule(bounds[k + 1], bounds[k], kind, scheme, 0.5 * radii[i])
            z = p.location + rho[:, None] * e[None, :]
            vals = _checked(form(z, p.chart), z, p.chart)
            vals = vals * smooth_cutoff(rho, radii[i])[:, None]
            shells[k].append(_pairwise_total(vals, wr[:, None] * dtheta))
    out = []
    acc = list(base)
    for k in range(len(ladder)):
        acc.extend(shells[k])
        out.append(math.fsum(acc))
    return np.array(out)


def _as_form(metric: ConformalMetric, integrand) -> Form:
    if callable(integrand):
        return lambda z, chart: np.asarray(integrand(z, chart), dtype=float) * metric.density(z, chart)
    c = float(integrand)
    return lambda z, chart: c * metric.density(z, chart)


def integrate_over_surface(metric: ConformalMetric, integrand, scheme: GradedScheme | None = None,
                           eps: float = 1e-3) -> float:
    """Integral of integrand * dA over S_eps, dA = e^{2v} dx dy.

    ``integrand`` is a constant or a callable ``f(z, chart)`` vectorised over
    chart coordinates.
    """
    scheme = scheme or GradedScheme()
    return float(excised_ladder(metric, _as_form(metric, integrand), scheme, [eps])[0])


# ---------------------------------------------------------------- extrapolation


def richardson_extrapolate(eps, values, order: float | None = None):
    """Limit of values ~ L + C eps^q from the last three ladder entries.

    Returns (limit, q, error_estimate).  When the increments are below
    roundoff or not geometric-like, the last value is returned unchanged.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    last = float(values[-1])
    floor = 1e-13 * max(1.0, float(np.max(np.abs(values))))
    if len(values) < 2:
        return last, order, floor
    if order is None and len(values) < 3:
        return last, None, max(floor, abs(values[-1] - values[-2]))
    d1 = values[-2] - values[-1]
    q = order
    if q is None:
        d0 = values[-3] - values[-2]
        if abs(d1) <= floor or abs(d0) <= floor or d0 * d1 <= 0:
            return last, None, max(floor, abs(d1))
        e0, e1, e2 = eps[-3:]
        ratio = d0 / d1

        def mismatch(qq):
            return (e0 ** qq - e1 ** qq) / (e1 ** qq - e2 ** qq) - ratio

        try:
            q = brentq(mismatch, 1e-3, 40.0)
        except ValueError:
            return last, None, max(floor, abs(d1))
    if abs(d1) <= floor:
        return last, q, floor
    e1, e2 = eps[-2], eps[-1]
    # values_k = L + C eps_k^q  =>  L = v2 - (v1 - v2) * e2^q / (e1^q - e2^q)
    limit = last - d1 * e2 ** q / (e1 ** q - e2 ** q)
    return float(limit), float(q), max(floor, abs(limit - last))


def _relative_increment(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    scale = max(abs(values[-1]), abs(values[-2]))
    if scale == 0:
        return 0.0
    return abs(values[-1] - values[-2]) / scale


def convergence_verdict(eps, values, tol: float = 1e-3) -> tuple[str, float | None]:
    """'bounded' if the final relative increment is <= tol, else 'divergent'
    when the ladder grows like eps^-q (q > 0), else 'inconclusive'."""
    inc = _relative_increment(values)
    if inc <= tol:
        return "bounded", None
    eps = np.asarray(eps, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    if len(values) >= 3 and np.all(values[-3:] > 0) and np.all(np.diff(values[-3:]) > 0):
        slope = np.polyfit(np.log(eps[-3:]), np.log(values[-3:]), 1)[0]
        if slope < 0:
            return "divergent", float(-slope)
    return "inconclusive", None


# ---------------------------------------------------------------- operations


def _require_compact(metric: ConformalMetric):
    if not metric.surface.is_compact:
        raise ValidationError("global integral requires compact surface")


def cusp_log_correction(metric: ConformalMetric, eps) -> np.ndarray:
    """Sum over cusps of -1/log(eps), the slowly decaying cusp boundary term (over 2 pi)."""
    eps = np.asarray(eps, dtype=float)
    return metric.divisor.cusp_count * (-1.0 / np.log(eps))


def total_curvature(metric: ConformalMetric, scheme: GradedScheme | None = None,
                    policy: DerivativePolicy | None = None, use_handles: bool = True) -> LadderResult:
    """Integral of K dA over S, extrapolated along the excision ladder.

    For cusps the known term 2 pi * (-1/log eps) is removed before Richardson
    extrapolation; the raw ladder is reported unchanged.
    """
    _require_compact(metric)
    scheme = scheme or GradedScheme()
    ladder = scheme.ladder_for(metric)
    form = lambda z, chart: curvature_form(metric, z, chart, policy, use_handles)
    raw = excised_ladder(metric, form, scheme, ladder)
    correction = 2.0 * np.pi * cusp_log_correction(metric, ladder)
    corrected = raw - correction
    value, q, err = richardson_extrapolate(ladder, corrected, scheme.richardson_order)
    # a second estimate from the ladder without its last entry bounds the extrapolation error
    if len(ladder) >= 4:
        prev, _, _ = richardson_extrapolate(ladder[:-1], corrected[:-1], scheme.richardson_order)
        err = max(err, abs(prev - value))
    return LadderResult(
        value=value,
        ladder=list(zip(ladder, raw.tolist())),
        exponent=q,
        error_estimate=err,
        extra={"corrected": list(zip(ladder, corrected.tolist())),
               "cusp_log_correction": list(zip(ladder, (correction / (2 * np.pi)).tolist()))},
    )


def curvature_lp_norm(metric: ConformalMetric, p: float = 1.0, scheme: GradedScheme | None = None,
                      policy: DerivativePolicy | None = None, use_handles: bool = True) -> LadderResult:
    """(integral of |K|^p dA over S_eps)^(1/p) along the ladder, with a boundedness verdict."""
    if not p >= 1:
        raise ValidationError(f"L^p exponent must be >= 1, got {p}")
    scheme = scheme or GradedScheme()
    ladder = scheme.ladder_for(metric)

    def form(z, chart):
        kf = curvature_form(metric, z, chart, policy, use_handles)
        if p == 1:
            return np.abs(kf)
        dens = metric.density(z, chart)
        return np.abs(kf / dens) ** p * dens

    raw = excised_ladder(metric, form, scheme, ladder)
    norms = raw ** (1.0 / p)
    verdict, growth = convergence_verdict(ladder, norms)
    value = float(norms[-1])
    if verdict == "bounded" and metric.divisor.cusp_count == 0:
        value, _, _ = richardson_extrapolate(ladder, norms, scheme.richardson_order)
    return LadderResult(value=value, ladder=list(zip(ladder, norms.tolist())), verdict=verdict,
                        exponent=growth, error_estimate=abs(norms[-1] - norms[-2]) if len(norms) > 1 else 0.0)


def dirichlet_energy(metric: ConformalMetric, i: int, outer: float | None = None,
                     scheme: GradedScheme | None = None, policy: DerivativePolicy | None = None,
                     use_handles: bool = True) -> LadderResult:
    """Annulus energies of the regular part, integral of |grad u_i|^2 = 4|du/dz|^2
    over eps < |z - a_i| < outer, along the ladder."""
    if not 0 <= i < len(metric.divisor):
        raise ValidationError(f"singularity index {i} out of range")
    scheme = scheme or GradedScheme()
    radius = effective_radii(metric, scheme)[i]
    outer = radius if outer is None else float(outer)
    if not 0 < outer <= radius:
        raise ValidationError(f"outer radius must lie in (0, {radius:g}]")
    ladder = list(scheme.ladder_for(metric))
    if ladder[0] >= outer:
        raise ValidationError("excision ladder must start below the outer radius")
    p = metric.divisor[i]
    u = metric.regular_parts[i]
    kind = "cusp" if p.is_cusp else "cone"
    theta = _angles(scheme.angular_count)
    e = np.exp(1j * theta)
    dtheta = 2.0 * np.pi / scheme.angular_count
    bounds = [outer] + ladder
    pieces, out = [], []
    for k in range(len(ladder)):
        rho, wr = _annulus_rule(bounds[k + 1], bounds[k], kind, scheme, 0.5 * outer)
        z = p.location + rho[:, None] * e[None, :]
        uz, _ = wirtinger(u, z, policy, scale=np.broadcast_to(rho[:, None], z.shape),
                          singular_points=[p.location], use_handles=use_handles)
        vals = _checked(4.0 * np.abs(uz) ** 2, z, p.chart)
        pieces.append(_pairwise_total(vals, wr[:, None] * dtheta))
        out.append(math.fsum(pieces))
    verdict, growth = convergence_verdict(ladder, out)
    return LadderResult(value=out[-1], ladder=list(zip(ladder, out)), verdict=verdict,
                        exponent=growth)

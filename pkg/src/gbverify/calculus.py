"""Pointwise differential geometry on conformal charts.

Wirtinger derivatives are d/dz = (d_x - i d_y)/2 and d/dzbar = (d_x + i d_y)/2.
For a conformal factor e^{2v} the Gaussian curvature is

    K = -4 e^{-2v} d^2 v / dz dzbar.

Circle fluxes use the counterclockwise orientation, so that the flux of
*d(b log|z|) around the origin is +2*pi*b.  On the circle |z - a| = eps the
form *dv restricts to (dv/dr) eps dtheta with dv/dr = 2 Re(e^{i theta} dv/dz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericalError, StencilCollisionError, ValidationError
from .metric import ConformalMetric, ScalarField

MIN_CIRCLE_SAMPLES = 16


@dataclass(frozen=True)
class DerivativePolicy:
    """Step policy for central differences.

    First derivatives use h = max(relative_step * scale, min_step) with a
    two-point central stencil per axis.  Mixed second derivatives use a
    fourth-order five-point stencil per axis (nine points in total) with the
    balanced step sqrt(relative_step) * scale.
    """

    relative_step: float = 1e-5
    min_step: float = 1e-9

    def __post_init__(self):
        if not 0 < self.relative_step <= 1e-2:
            raise ValidationError("relative_step must lie in (0, 1e-2]")
        if not self.min_step > 0:
            raise ValidationError("min_step must be positive")

    def first_step(self, scale):
        return np.maximum(self.relative_step * np.asarray(scale, dtype=float), self.min_step)

    def second_step(self, scale):
        return np.maximum(math.sqrt(self.relative_step) * np.asarray(scale, dtype=float),
                          self.min_step)


DEFAULT_POLICY = DerivativePolicy()


def _value_fn(f) -> Callable:
    if isinstance(f, ScalarField):
        return f.value
    return f


def _check_stencil(z, reach, singular_points: Sequence[complex]):
    for a in singular_points:
        hit = np.abs(z - a) <= reach
        if np.any(hit):
            bad = complex(np.asarray(z)[hit].ravel()[0]) if np.ndim(z) else complex(z)
            raise StencilCollisionError(
                f"finite-difference stencil of reach {float(np.max(reach)):.3g} at {bad!r} "
                f"touches singular point {complex(a)!r}"
            )


def _finite(values, z, what: str):
    values = np.asarray(values)
    bad = ~np.isfinite(values)
    if np.any(bad):
        loc = complex(np.broadcast_to(z, values.shape)[bad].ravel()[0])
        raise NumericalError(f"non-finite {what}", loc)
    return values


def wirtinger(f, z, policy: DerivativePolicy | None = None, *, scale=None,
              singular_points: Sequence[complex] = (), use_handles: bool = True):
    """Return (df/dz, df/dzbar) for a real field ``f``.

    Analytic handles are used when ``f`` is a :class:`ScalarField` carrying
    them; otherwise central differences with step max(h0*scale, min_step),
    where ``scale`` defaults to |z|.
    """
    z = np.asarray(z, dtype=complex)
    if use_handles and isinstance(f, ScalarField) and f.dz is not None:
        fz = np.asarray(f.dz(z), dtype=complex)
        fz = _finite(fz, z, "analytic derivative")
        return fz, np.conj(fz)
    policy = policy or DEFAULT_POLICY
    h = policy.first_step(np.abs(z) if scale is None else scale)
    _check_stencil(z, h, singular_points)
    fn = _value_fn(f)
    fx = (np.asarray(fn(z + h)) - np.asarray(fn(z - h))) / (2 * h)
    fy = (np.asarray(fn(z + 1j * h)) - np.asarray(fn(z - 1j * h))) / (2 * h)
    fx = _finite(fx, z, "finite-difference sample")
    fy = _finite(fy, z, "finite-difference sample")
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def mixed_second(f, z, policy: DerivativePolicy | None = None, *, scale=None,
                 singular_points: Sequence[complex] = (), use_handles: bool = True):
    """d^2 f / dz dzbar = Laplacian(f) / 4."""
    z = np.asarray(z, dtype=complex)
    if use_handles and isinstance(f, ScalarField) and f.dzdzbar is not None:
        return _finite(np.asarray(f.dzdzbar(z), dtype=float), z, "analytic derivative")
    policy = policy or DEFAULT_POLICY
    h = policy.second_step(np.abs(z) if scale is None else scale)
    _check_stencil(z, 2 * h, singular_points)
    fn = _value_fn(f)
    f0 = np.asarray(fn(z), dtype=float)
    lap = -60.0 * f0
    for d in (h, 1j * h):
        lap = lap + 16.0 * (np.asarray(fn(z + d)) + np.asarray(fn(z - d)))
        lap = lap - (np.asarray(fn(z + 2 * d)) + np.asarray(fn(z - 2 * d)))
    lap = lap / (12.0 * h * h)
    return _finite(0.25 * lap, z, "finite-difference sample")


def _metric_stencil_args(metric: ConformalMetric, z, chart: str):
    pts = [p.location for _, p in metric.points_in_chart(chart)]
    if metric.surface.model == "torus":
        # scale already measures lattice distance; translates need no collision test
        pts = []
    return metric.local_scale(z, chart), pts


def _check_regular(metric: ConformalMetric, z, chart: str):
    if np.any(metric.distance_to_singular(z, chart) == 0):
        raise DomainError(f"point coincides with a singular point of chart {chart!r}")


def curvature_form(metric: ConformalMetric, z, chart: str = "z",
                   policy: DerivativePolicy | None = None, use_handles: bool = True):
    """K e^{2v} = -4 d^2 v / dz dzbar, the curvature density against Lebesgue measure."""
    z = np.asarray(z, dtype=complex)
    scale, pts = _metric_stencil_args(metric, z, chart)
    vzz = mixed_second(metric.log_factor[chart], z, policy, scale=scale, singular_points=pts,
                       use_handles=use_handles)
    return -4.0 * vzz


def gaussian_curvature(metric: ConformalMetric, z, chart: str = "z",
                       policy: DerivativePolicy | None = None, use_handles: bool = True):
    """K = -4 e^{-2v} d^2 v / dz dzbar at non-singular chart points."""
    z = np.asarray(z, dtype=complex)
    _check_regular(metric, z, chart)
    v = _finite(metric.v(z, chart), z, "log factor")
    out = curvature_form(metric, z, chart, policy, use_handles) * np.exp(-2.0 * v)
    return float(out) if out.ndim == 0 else out


def _near_point(metric: ConformalMetric, i: int, z):
    if not 0 <= i < len(metric.divisor):
        raise ValidationError(f"singularity index {i} out of range")
    p = metric.divisor[i]
    z = np.asarray(z, dtype=complex)
    rho = np.abs(z - p.location)
    if np.any(rho == 0):
        raise DomainError("residual undefined at the singular point itself")
    if np.any(rho > metric.decomposition_radii[i]):
        raise ValidationError(
            f"point lies outside the decomposition radius {metric.decomposition_radii[i]:g}"
        )
    return p, z, rho


def liouville_residual(metric: ConformalMetric, i: int, z,
                       policy: DerivativePolicy | None = None, use_handles: bool = True):
    """4 d^2u/dz dzbar + K |z - a|^{2b} e^{2u} near cone point ``i`` (should vanish)."""
    p, z, rho = _near_point(metric, i, z)
    if p.is_cusp:
        raise ValidationError(f"point {i} is a cusp; use cusp_source_residual")
    u = metric.regular_parts[i]
    uzz = mixed_second(u, z, policy, scale=np.minimum(rho, 1.0), singular_points=[p.location],
                       use_handles=use_handles)
    K = np.asarray(gaussian_curvature(metric, z, p.chart, policy, use_handles))
    out = 4.0 * uzz + K * rho ** (2 * p.order) * np.exp(2.0 * u(z))
    return float(out) if out.ndim == 0 else out


def cusp_source_residual(metric: ConformalMetric, i: int, z,
                         policy: DerivativePolicy | None = None, use_handles: bool = True):
    """4 d^2u/dz dzbar - (-K e^{2u} - 1) / (|z - a|^2 log^2|z - a|) near cusp ``i``."""
    if not 0 <= i < len(metric.divisor):
        raise ValidationError(f"singularity index {i} out of range")
    p = metric.divisor[i]
    if not p.is_cusp:
        raise ValidationError(f"point {i} is a cone point; use liouville_residual")
    if np.any(np.abs(np.asarray(z, dtype=complex) - p.location) >= 1):
        raise DomainError("cusp source identity requires 0 < |z - a| < 1")
    p, z, rho = _near_point(metric, i, z)
    u = metric.regular_parts[i]
    uzz = mixed_second(u, z, policy, scale=np.minimum(rho, 1.0), singular_points=[p.location],
                       use_handles=use_handles)
    K = np.asarray(gaussian_curvature(metric, z, p.chart, policy, use_handles))
    source = (-K * np.exp(2.0 * u(z)) - 1.0) / (rho ** 2 * np.log(rho) ** 2)
    out = 4.0 * uzz - source
    return float(out) if out.ndim == 0 else out


def _circle(center: complex, eps: float, n: int):
    if int(n) != n or n < MIN_CIRCLE_SAMPLES:
        raise ValidationError(f"circle quadrature needs N >= {MIN_CIRCLE_SAMPLES}, got {n}")
    if not eps > 0:
        raise ValidationError("circle radius must be positive")
    theta = 2.0 * np.pi * np.arange(int(n)) / n
    e = np.exp(1j * theta)
    return complex(center) + eps * e, e


def hodge_star_flux(v, center: complex, eps: float, n: int = 512,
                    policy: DerivativePolicy | None = None, use_handles: bool = True) -> float:
    """Trapezoidal approximation of the counterclockwise integral of *dv on |z - center| = eps."""
    z, e = _circle(center, eps, n)
    vz, _ = wirtinger(v, z, policy, scale=np.full(z.shape, eps), singular_points=[center],
                      use_handles=use_handles)
    dr = 2.0 * np.real(e * vz)
    return float(math.fsum(dr * eps) * (2.0 * np.pi / n))


def abs_dz_flux(u, center: complex, eps: float, n: int = 512,
                policy: DerivativePolicy | None = None, use_handles: bool = True,
                conjugate: bool = False) -> float:
    """eps times the integral of |du/dz| |dz| over |z - center| = eps (``conjugate``: du/dzbar)."""
    z, _ = _circle(center, eps, n)
    uz, uzb = wirtinger(u, z, policy, scale=np.full(z.shape, eps), singular_points=[center],
                        use_handles=use_handles)
    mag = np.abs(uzb if conjugate else uz)
    return float(eps * math.fsum(mag) * (2.0 * np.pi * eps / n))

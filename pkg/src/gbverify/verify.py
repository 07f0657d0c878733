"""Executable checks of the singular Gauss-Bonnet identity and its ingredients.

Each check is built from independent pieces: area quadrature on the excised
surface, circle fluxes of *dv and *du at every excision radius, decay of the
regular part near singular points, and the arithmetic of Euler
characteristics under power covers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .calculus import DerivativePolicy, abs_dz_flux, curvature_form, hodge_star_flux
from .errors import ValidationError
from .metric import (ConformalMetric, cone_model_field, cusp_model_field, flat_torus_metric,
                     power_cover_pullback, round_sphere_metric)
from .quadrature import (GradedScheme, curvature_lp_norm, dirichlet_energy, excised_ladder,
                         total_curvature)
from .surface import euler_characteristic

DEFAULT_TOLERANCE = 1e-4
IDENTITY_TOLERANCE = 1e-8
CIRCLE_SAMPLES = 512


@dataclass
class FluxRecord:
    point: str
    chart: str
    location: list[float]
    order: float | str
    ladder: list[tuple[float, float, float, float]]


@dataclass
class VerificationReport:
    """Outcome of :func:`verify_gauss_bonnet`.

    ``residual`` is ``total_curvature_over_2pi - chi``; ``per_singularity``
    ladders hold (eps, flux of *dv / 2pi, flux of *du / 2pi, decay term).
    """

    chi: float | None
    total_curvature_over_2pi: float | None
    residual: float | None
    per_singularity: list[FluxRecord] = field(default_factory=list)
    ladder_diagnostics: dict = field(default_factory=dict)
    hypothesis_checks: dict = field(default_factory=dict)
    verdict: str | None = None
    tolerance: float = DEFAULT_TOLERANCE

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class FluxSplit(NamedTuple):
    beta_term: float
    residual_flux: float
    total_flux: float

    @property
    def mismatch(self) -> float:
        return abs(self.total_flux - self.beta_term - self.residual_flux)


class CuspFluxSplit(NamedTuple):
    leading: float
    log_correction: float
    residual_flux: float
    total_flux: float

    @property
    def mismatch(self) -> float:
        return abs(self.total_flux - self.leading - self.log_correction - self.residual_flux)


@dataclass
class DecayResult:
    ladder: list[tuple[float, float, float]]
    exponent: float | None
    verdict: str


@dataclass
class HurwitzResult:
    degree: int
    chi_base: float
    chi_pullback: float
    total_pullback_over_2pi: float
    arithmetic_residual: float
    quadrature_residual: float
    ladder: list[tuple[float, float]]
    verdict: str


def _point(metric: ConformalMetric, i: int):
    if not 0 <= i < len(metric.divisor):
        raise ValidationError(f"singularity index {i} out of range")
    return metric.divisor[i]


def _check_eps(metric: ConformalMetric, i: int, eps: float):
    if not 0 < eps < metric.decomposition_radii[i]:
        raise ValidationError(
            f"eps={eps:g} must lie in (0, {metric.decomposition_radii[i]:g}) for point {i}"
        )


def flux_decomposition(metric: ConformalMetric, i: int, eps: float, n: int = CIRCLE_SAMPLES,
                       policy: DerivativePolicy | None = None, use_handles: bool = True) -> FluxSplit:
    """Split (1/2pi) flux of *dv on |z - a_i| = eps into beta_i + (1/2pi) flux of *du."""
    p = _point(metric, i)
    if p.is_cusp:
        raise ValidationError(f"point {i} is a cusp; use cusp_flux")
    _check_eps(metric, i, eps)
    total = hodge_star_flux(metric.log_factor[p.chart], p.location, eps, n, policy, use_handles)
    residual = hodge_star_flux(metric.regular_parts[i], p.location, eps, n, policy, use_handles)
    return FluxSplit(p.order, residual / (2 * math.pi), total / (2 * math.pi))


def cusp_flux(metric: ConformalMetric, i: int, eps: float, n: int = CIRCLE_SAMPLES,
              policy: DerivativePolicy | None = None, use_handles: bool = True) -> CuspFluxSplit:
    """(1/2pi) flux of *dv = -1 + (-1/log eps) + (1/2pi) flux of *du at a cusp.

    The first two terms are circle fluxes of -log|z - a| and -log(-log|z - a|).
    """
    p = _point(metric, i)
    if not p.is_cusp:
        raise ValidationError(f"point {i} is a cone point; use flux_decomposition")
    if not 0 < eps < 1:
        raise ValidationError("cusp flux requires 0 < eps < 1")
    _check_eps(metric, i, eps)
    two_pi = 2 * math.pi
    leading = hodge_star_flux(cone_model_field(-1.0, p.location), p.location, eps, n)
    loglog = cusp_model_field(p.location) - cone_model_field(-1.0, p.location)
    correction = hodge_star_flux(loglog, p.location, eps, n)
    residual = hodge_star_flux(metric.regular_parts[i], p.location, eps, n, policy, use_handles)
    total = hodge_star_flux(metric.log_factor[p.chart], p.location, eps, n, policy, use_handles)
    return CuspFluxSplit(leading / two_pi, correction / two_pi, residual / two_pi, total / two_pi)


def _fit_exponent(eps, values) -> float | None:
    eps = np.asarray(eps[-3:], dtype=float)
    values = np.asarray(values[-3:], dtype=float)
    if len(values) < 2 or np.any(values <= 0):
        return None
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])


def _decay_verdict(values) -> str:
    values = np.asarray(values, dtype=float)
    tail = values[-3:]
    monotone = bool(np.all(np.diff(tail) <= 0))
    small = values[-1] <= 1e-3 * (values[0] + 1e-12)
    return "PASS" if monotone and small else "FAIL"


def lemma_decay(metric: ConformalMetric, i: int, scheme: GradedScheme | None = None,
                n: int = CIRCLE_SAMPLES, policy: DerivativePolicy | None = None,
                use_handles: bool = True) -> DecayResult:
    """eps * (integral of |du/dz| |dz|) and its dzbar twin along the excision ladder."""
    p = _point(metric, i)
    scheme = scheme or GradedScheme()
    ladder = scheme.ladder_for(metric)
    _check_eps(metric, i, ladder[0])
    u = metric.regular_parts[i]
    rows = []
    for eps in ladder:
        a = abs_dz_flux(u, p.location, eps, n, policy, use_handles)
        b = abs_dz_flux(u, p.location, eps, n, policy, use_handles, conjugate=True)
        rows.append((eps, a, b))
    dz_values = [r[1] for r in rows]
    dzbar_values = [r[2] for r in rows]
    ok = _decay_verdict(dz_values) == "PASS" and _decay_verdict(dzbar_values) == "PASS"
    return DecayResult(rows, _fit_exponent(ladder, dz_values), "PASS" if ok else "FAIL")


def default_background(metric: ConformalMetric) -> ConformalMetric:
    if metric.surface.model == "sphere":
        return round_sphere_metric()
    if metric.surface.model == "torus":
        return flat_torus_metric(metric.surface.tau)
    raise ValidationError("no smooth background on a local patch")


def _check_background(metric: ConformalMetric, background: ConformalMetric):
    if background.surface != metric.surface:
        raise ValidationError("background lives on a different surface")
    if any(p.is_cusp or p.order != 0 for p in background.divisor):
        raise ValidationError("background metric must be smooth")


def greens_identity_ladder(metric: ConformalMetric, background: ConformalMetric | None = None,
                           scheme: GradedScheme | None = None, ladder=None,
                           n: int = CIRCLE_SAMPLES, policy: DerivativePolicy | None = None,
                           use_handles: bool = True) -> list[tuple[float, float]]:
    """Discrepancy of the excision identity at each eps.

    With v = log-factor(metric) - log-factor(background) and counterclockwise
    circles, (1/2pi) * integral over S_eps of (K dA - K1 dA1) equals
    (1/2pi) * sum_i flux of *dv around D_i(eps).
    """
    if not metric.surface.is_compact:
        raise ValidationError("global integral requires compact surface")
    background = background or default_background(metric)
    _check_background(metric, background)
    scheme = scheme or GradedScheme()
    ladder = list(ladder if ladder is not None else scheme.ladder_for(metric))

    def form(z, chart):
        return (curvature_form(metric, z, chart, policy, use_handles)
                - curvature_form(background, z, chart, policy, use_handles))

    area = excised_ladder(metric, form, scheme, ladder) / (2 * math.pi)
    rel = {c: metric.log_factor[c] - background.log_factor[c] for c in metric.surface.charts}
    rows = []
    for k, eps in enumerate(ladder):
        flux = math.fsum(
            hodge_star_flux(rel[p.chart], p.location, eps, n, policy, use_handles)
            for p in metric.divisor
        ) / (2 * math.pi)
        rows.append((eps, abs(float(area[k]) - flux)))
    return rows


def greens_identity_check(metric: ConformalMetric, background: ConformalMetric | None = None,
                          eps: float = 0.05, scheme: GradedScheme | None = None,
                          n: int = CIRCLE_SAMPLES, **kwargs) -> float:
    return greens_identity_ladder(metric, background, scheme, [eps], n, **kwargs)[0][1]


def flux_records(metric: ConformalMetric, ladder, n: int = CIRCLE_SAMPLES,
                 policy: DerivativePolicy | None = None, use_handles: bool = True) -> list[FluxRecord]:
    records = []
    for i, p in enumerate(metric.divisor):
        rows = []
        for eps in ladder:
            if p.is_cusp:
                split = cusp_flux(metric, i, eps, n, policy, use_handles)
            else:
                split = flux_decomposition(metric, i, eps, n, policy, use_handles)
            decay = abs_dz_flux(metric.regular_parts[i], p.location, eps, n, policy, use_handles)
            rows.append((eps, split.total_flux, split.residual_flux, decay))
        records.append(FluxRecord(f"p{i}", p.chart, [p.location.real, p.location.imag],
                                  "cusp" if p.is_cusp else p.order, rows))
    return records


def verify_gauss_bonnet(metric: ConformalMetric, scheme: GradedScheme | None = None,
                        tolerance: float = DEFAULT_TOLERANCE, n: int = CIRCLE_SAMPLES,
                        policy: DerivativePolicy | None = None, use_handles: bool = True,
                        hypotheses: bool = True) -> VerificationReport:
    """Compare (1/2pi) * integral of K dA with chi(S, beta)."""
    if not metric.surface.is_compact:
        raise ValidationError("global integral requires compact surface")
    scheme = scheme or GradedScheme()
    chi = euler_characteristic(metric.surface, metric.divisor)
    tc = total_curvature(metric, scheme, policy, use_handles)
    two_pi = 2 * math.pi
    total = tc.value / two_pi
    residual = total - chi
    ladder = scheme.ladder_for(metric)
    diagnostics = {
        "ladder": [(e, v / two_pi) for e, v in tc.ladder],
        "corrected_ladder": [(e, v / two_pi) for e, v in tc.extra["corrected"]],
        "cusp_log_correction": tc.extra["cusp_log_correction"],
        "fitted_exponent": tc.exponent,
        "error_estimate": tc.error_estimate / two_pi,
    }
    checks = {}
    if hypotheses:
        l1 = curvature_lp_norm(metric, 1.0, scheme, policy, use_handles)
        checks["l1"] = {"verdict": l1.verdict, "value": l1.value, "growth_exponent": l1.exponent}
        energy = []
        for i in range(len(metric.divisor)):
            res = dirichlet_energy(metric, i, None, scheme, policy, use_handles)
            energy.append({"point": f"p{i}", "verdict": res.verdict, "value": res.value})
        checks["energy"] = energy
    return VerificationReport(
        chi=chi,
        total_curvature_over_2pi=total,
        residual=residual,
        per_singularity=flux_records(metric, ladder, n, policy, use_handles),
        ladder_diagnostics=diagnostics,
        hypothesis_checks=checks,
        verdict="PASS" if abs(residual) <= tolerance else "FAIL",
        tolerance=tolerance,
    )


def riemann_hurwitz_check(metric: ConformalMetric, n: int, scheme: GradedScheme | None = None,
                          tolerance: float = DEFAULT_TOLERANCE,
                          use_handles: bool = True) -> HurwitzResult:
    """chi(S', beta') = n chi(S, beta) for the cover z -> z^n, exactly and by quadrature."""
    cover = power_cover_pullback(metric, n)
    chi_base = euler_characteristic(metric.surface, metric.divisor)
    chi_cover = euler_characteristic(cover.surface, cover.divisor)
    # exact arithmetic on the binary values of the orders
    base_orders = {p.chart: Fraction(p.order) for p in metric.divisor}
    exact_base = 2 + sum(base_orders.values(), Fraction(0))
    exact_cover = 2 + sum((n - 1) + n * base_orders.get(c, Fraction(0)) for c in ("z", "w"))
    arithmetic = float(abs(exact_cover - n * exact_base))
    tc = total_curvature(cover, scheme, use_handles=use_handles)
    total = tc.value / (2 * math.pi)
    quad = abs(total - chi_cover)
    ok = arithmetic == 0 and quad <= tolerance and abs(chi_cover - n * chi_base) <= 1e-12
    return HurwitzResult(int(n), chi_base, chi_cover, total, arithmetic, quad,
                         [(e, v / (2 * math.pi)) for e, v in tc.ladder], "PASS" if ok else "FAIL")

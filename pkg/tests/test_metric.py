import math

import numpy as np
import pytest
import sympy as sp

from gbverify.errors import DomainError, UnsupportedConfigurationError, ValidationError
from gbverify.metric import (FAMILIES, Bump, branched_cover_pullback, build_family,
                             cusp_model_metric, cusp_sphere_metric, evaluate_density,
                             flat_cone_metric, flat_torus_metric, football_metric, perturb,
                             power_cover_pullback, round_sphere_metric)
from gbverify.surface import Surface

x, y = sp.symbols("x y", real=True)
SAMPLES = np.array([0.3 + 0.1j, -0.7 + 0.4j, 1.3 - 0.2j, 0.05 + 0.02j, -2.0 - 1.5j])


def sympy_handles(expr):
    """Return numeric (f, f_z, f_zzbar) built from a real sympy expression in x, y."""
    fz = (sp.diff(expr, x) - sp.I * sp.diff(expr, y)) / 2
    lap = (sp.diff(expr, x, 2) + sp.diff(expr, y, 2)) / 4
    fns = [sp.lambdify((x, y), e, "numpy") for e in (expr, fz, lap)]
    return [lambda z, f=f: np.asarray(f(z.real, z.imag), dtype=complex) for f in fns]


def assert_field_matches(field, expr, pts=SAMPLES, rtol=1e-10):
    f, fz, fzz = sympy_handles(expr)
    assert np.allclose(field(pts), f(pts).real, rtol=rtol, atol=1e-12)
    assert np.allclose(field.dz(pts), fz(pts), rtol=rtol, atol=1e-12)
    assert np.allclose(field.dzdzbar(pts), fzz(pts).real, rtol=rtol, atol=1e-12)


@pytest.mark.parametrize("beta", [-0.5, 0.0, 0.5, 2.0])
def test_football_handles_against_symbolic(beta):
    b = sp.nsimplify(beta)
    s = x ** 2 + y ** 2
    v = sp.log(2 * (1 + b)) + b / 2 * sp.log(s) - sp.log(1 + s ** (1 + b))
    m = football_metric(beta)
    assert_field_matches(m.log_factor["z"], v)
    assert_field_matches(m.log_factor["w"], v)
    assert_field_matches(m.regular_parts[0], v - b / 2 * sp.log(s))


def test_cusp_model_handles_against_symbolic():
    r = sp.sqrt(x ** 2 + y ** 2)
    v = -sp.log(r) - sp.log(-sp.log(r))
    pts = np.array([0.3 + 0.1j, -0.05 + 0.2j, 1e-3j, 0.4])
    assert_field_matches(cusp_model_metric(0.5).log_factor["z"], v, pts)


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_cusp_sphere_handles_against_symbolic(beta):
    c = (sp.nsimplify(beta) + 3) / 2
    s = x ** 2 + y ** 2
    vz = -sp.log(s) / 2 - sp.log(sp.log(1 + 1 / s) / 2) - c * sp.log(1 + s)
    u0 = vz + sp.log(s) / 2 + sp.log(-sp.log(s) / 2)
    uinf = -sp.log(sp.log(1 + s) / (2 * s)) - c * sp.log(1 + s)
    m = cusp_sphere_metric(beta)
    inside = np.array([0.3 + 0.1j, -0.05 + 0.2j, 0.6j, 0.2 - 0.7j])
    assert_field_matches(m.log_factor["z"], vz)
    assert_field_matches(m.regular_parts[0], u0, inside)
    assert_field_matches(m.regular_parts[1], uinf, inside, rtol=1e-8)
    assert_field_matches(m.log_factor["w"], uinf + sp.nsimplify(beta) / 2 * sp.log(s), inside,
                         rtol=1e-8)


def test_cusp_sphere_small_w_is_stable():
    m = cusp_sphere_metric(0.5)
    w = np.array([1e-9 + 0j, 1e-5j, 3e-3 + 1e-3j])
    t = np.abs(w) ** 2
    # series: u = -log(1/2) + t/2 - c t + O(t^2)
    assert np.allclose(m.regular_parts[1](w), math.log(2) + (0.5 - 1.75) * t, atol=1e-10)
    assert np.all(np.isfinite(m.regular_parts[1].dzdzbar(w)))


@pytest.mark.parametrize("factory", [lambda: football_metric(0.7), round_sphere_metric,
                                     lambda: cusp_sphere_metric(0.5)])
def test_sphere_charts_agree(factory):
    # e^{2v_z}|dz|^2 = e^{2v_w}|dw|^2 with w = 1/z
    m = factory()
    z = np.array([0.8 + 0.9j, -1.1 + 0.2j, 2.0 - 3.0j])
    w = 1 / z
    lhs = m.v(z, "z")
    rhs = m.v(w, "w") - 2 * np.log(np.abs(z))
    assert np.allclose(lhs, rhs, rtol=1e-12)


def test_regular_part_decomposition_is_consistent():
    m = football_metric(0.5)
    z = np.array([0.1 + 0.05j, 0.2j])
    assert np.allclose(m.v(z, "z"), 0.5 * np.log(np.abs(z)) + m.regular_parts[0](z))


def test_evaluate_density():
    assert evaluate_density(round_sphere_metric(), 0.0) == pytest.approx(4.0)
    assert evaluate_density(football_metric(0.0), 0.0) == pytest.approx(4.0)
    assert evaluate_density(football_metric(1.0), 1.0) == pytest.approx(4.0)
    assert evaluate_density(flat_cone_metric(0.5, 0.5), 0.25) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        evaluate_density(football_metric(0.5), 0.0)
    with pytest.raises(DomainError):
        evaluate_density(cusp_model_metric(0.5), 0.0)


def test_football_zero_is_round_sphere():
    z = np.array([0.1 + 0.2j, 3.0 - 1.0j])
    assert np.allclose(football_metric(0.0).v(z), round_sphere_metric().v(z), atol=1e-15)


def test_order_bounds():
    with pytest.raises(ValidationError):
        football_metric(-1.0)
    with pytest.raises(ValidationError) as info:
        cusp_model_metric(1.5)
    assert info.value.field == "surface.radius"


def test_flat_cone_and_torus():
    m = flat_cone_metric(0.5, 0.5)
    assert m.v(np.array([0.25]), "z")[0] == pytest.approx(0.5 * math.log(0.25))
    t = flat_torus_metric(0.5 + 1j)
    assert np.all(t.v(SAMPLES, "z") == 0)


def test_perturb_shifts_v_and_regular_parts():
    m = football_metric(0.5)
    bump = Bump(1.0 + 0.5j, 0.3, 0.2)
    p = perturb(m, bump)
    z = np.array([1.0 + 0.5j])
    assert p.v(z)[0] - m.v(z)[0] == pytest.approx(0.3)
    assert p.regular_parts[0](z)[0] - m.regular_parts[0](z)[0] == pytest.approx(0.3)
    assert p.params["perturbations"] == ((1.0, 0.5, 0.3, 0.2),)


def test_perturb_rejects_bump_over_singularity():
    with pytest.raises(ValidationError):
        perturb(football_metric(0.5), Bump(0.1, 0.3, 0.2))
    with pytest.raises(ValidationError):
        perturb(flat_torus_metric(), Bump(0.5, 0.3, 0.4))


def test_torus_bump_is_periodic():
    p = perturb(flat_torus_metric(1j), Bump(0.5 + 0.5j, 0.4, 0.15))
    z = np.array([0.2 + 0.7j, 0.9 + 0.1j])
    assert np.allclose(p.v(z), p.v(z + 1), atol=1e-12)
    assert np.allclose(p.v(z), p.v(z + 1j), atol=1e-12)


def test_branched_cover_orders():
    m = flat_cone_metric(-0.5, 0.5)
    cover = branched_cover_pullback(m, 1)
    assert cover.divisor[0].order == pytest.approx(0.0)
    assert branched_cover_pullback(m, 0) is m
    with pytest.raises(ValidationError):
        branched_cover_pullback(m, -1)
    with pytest.raises(UnsupportedConfigurationError):
        branched_cover_pullback(football_metric(0.0), 1)


def test_branched_cover_pulls_back_metric():
    m = flat_cone_metric(0.25, 0.5)
    cover = branched_cover_pullback(m, 2)
    w = np.array([0.3 + 0.2j, -0.4j])
    # e^{2v'(w)} = e^{2v(w^3)} |3 w^2|^2
    expected = m.v(w ** 3) + math.log(3) + 2 * np.log(np.abs(w))
    assert np.allclose(cover.v(w), expected)
    assert cover.divisor[0].order == pytest.approx(2 + 3 * 0.25)


@pytest.mark.parametrize("beta,n", [(0.0, 2), (0.5, 3), (-0.5, 2)])
def test_power_cover_orders(beta, n):
    cover = power_cover_pullback(football_metric(beta), n)
    assert [p.order for p in cover.divisor] == pytest.approx([(n - 1) + n * beta] * 2)
    assert power_cover_pullback(football_metric(beta), 1).family == "football"


def test_power_cover_rejects_off_axis_points():
    with pytest.raises(UnsupportedConfigurationError):
        power_cover_pullback(cusp_sphere_metric(0.5), 2)
    with pytest.raises(ValidationError):
        power_cover_pullback(football_metric(0.5), 0)


def test_build_family_validation():
    with pytest.raises(ValidationError) as info:
        build_family("football", Surface.sphere(), {})
    assert info.value.field == "metric.params.beta"
    with pytest.raises(ValidationError) as info:
        build_family("football", Surface.torus(), {"beta": 0.5})
    assert info.value.field == "surface.model"
    assert set(FAMILIES) >= {"football", "round_sphere", "flat_torus", "cusp_model", "flat_cone"}


def test_decomposition_radii_stay_in_range():
    m = football_metric(0.5).with_marked_point("z", 0.4 + 0.0j)
    assert all(0 < r <= 0.5 for r in m.decomposition_radii)
    assert m.decomposition_radii[0] <= 0.2 + 1e-12

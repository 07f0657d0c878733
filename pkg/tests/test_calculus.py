import math

import numpy as np
import pytest

from gbverify.calculus import (DerivativePolicy, abs_dz_flux, cusp_source_residual,
                               gaussian_curvature, hodge_star_flux, liouville_residual,
                               mixed_second, wirtinger)
from gbverify.errors import DomainError, StencilCollisionError, ValidationError
from gbverify.metric import (Bump, cone_model_field, constant_field, cusp_model_field,
                             cusp_model_metric, cusp_sphere_metric, flat_cone_metric,
                             flat_torus_metric, football_metric, perturb, round_sphere_metric)


def test_wirtinger_examples():
    fz, fzb = wirtinger(lambda z: np.log(np.abs(z)), 1.0 + 0j)
    assert fz == pytest.approx(0.5, abs=1e-9) and fzb == pytest.approx(0.5, abs=1e-9)
    fz, fzb = wirtinger(lambda z: np.real(z), 3.0 - 2.0j)
    assert fz == pytest.approx(0.5, abs=1e-9) and fzb == pytest.approx(0.5, abs=1e-9)
    fz, fzb = wirtinger(lambda z: np.abs(z) ** 2, 2.0 + 1.0j)
    assert fz == pytest.approx(2 - 1j, abs=1e-8) and fzb == pytest.approx(2 + 1j, abs=1e-8)


def test_wirtinger_stencil_collision():
    with pytest.raises(StencilCollisionError):
        wirtinger(lambda z: np.log(np.abs(z)), 1e-10 + 0j, singular_points=[0j])


def test_policy_bounds():
    with pytest.raises(ValidationError):
        DerivativePolicy(relative_step=0.1)
    assert float(DerivativePolicy().first_step(0.0)) == 1e-9


@pytest.mark.parametrize("factory", [lambda: football_metric(0.5), lambda: football_metric(-0.5),
                                     round_sphere_metric, lambda: cusp_sphere_metric(0.5),
                                     lambda: cusp_model_metric(0.5)])
def test_finite_differences_match_handles(factory, rng):
    m = factory()
    v = m.log_factor["z"]
    r = rng.uniform(0.05, 0.45, 100)
    z = r * np.exp(2j * np.pi * rng.uniform(size=100))
    fd, _ = wirtinger(v.without_handles(), z, scale=np.minimum(r, 1.0), singular_points=[0j])
    exact, _ = wirtinger(v, z)
    assert np.max(np.abs(fd - exact)) <= 1e-6
    fd2 = mixed_second(v.without_handles(), z, scale=np.minimum(r, 1.0), singular_points=[0j])
    # the 9-point stencil carries relative error ~ h^4 / |z|^4
    assert np.max(np.abs(fd2 - v.dzdzbar(z)) / np.maximum(1.0, np.abs(v.dzdzbar(z)))) <= 1e-6


def test_curvature_examples():
    assert gaussian_curvature(football_metric(0.7), 0.4 - 0.2j) == pytest.approx(1.0, abs=1e-6)
    assert gaussian_curvature(flat_torus_metric(), 0.3 + 0.3j) == pytest.approx(0.0, abs=1e-8)
    assert gaussian_curvature(cusp_model_metric(0.5), 0.2) == pytest.approx(-1.0, abs=1e-6)


def test_curvature_finite_difference_path():
    m = football_metric(0.7).without_handles()
    assert gaussian_curvature(m, 0.4 - 0.2j) == pytest.approx(1.0, abs=1e-6)
    c = cusp_model_metric(0.5).without_handles()
    assert gaussian_curvature(c, 0.2) == pytest.approx(-1.0, abs=1e-6)


def test_curvature_agrees_across_sphere_charts():
    m = perturb(football_metric(0.3), Bump(1.0 + 0.2j, 0.4, 0.25))
    z = np.array([0.9 + 0.5j, 1.2 - 0.1j, 0.7 + 0.8j])
    kz = gaussian_curvature(m, z, "z")
    kw = gaussian_curvature(m, 1 / z, "w")
    assert np.allclose(kz, kw, atol=1e-6)


def test_curvature_rejects_singular_point():
    with pytest.raises(DomainError):
        gaussian_curvature(football_metric(0.5), 0j)


def test_liouville_residuals():
    m = football_metric(0.5)
    assert liouville_residual(m, 0, 0.01 + 0.01j) == pytest.approx(0.0, abs=1e-5)
    assert liouville_residual(flat_cone_metric(0.5, 0.5), 0, 0.2j) == 0.0
    p = perturb(m, Bump(1.0, 0.3, 0.2))
    assert liouville_residual(p, 0, 0.01 + 0.01j) == pytest.approx(0.0, abs=1e-5)
    for r in (1e-4, 1e-2, 0.3):
        z = r * np.exp(1j * np.linspace(0, 6, 7))
        assert np.max(np.abs(liouville_residual(m, 1, z))) <= 1e-5


def test_cusp_source_residuals():
    m = cusp_model_metric(0.9)
    assert cusp_source_residual(m, 0, 0.1) == pytest.approx(0.0, abs=1e-6)
    assert cusp_source_residual(m, 0, 0.5) == pytest.approx(0.0, abs=1e-6)
    p = perturb(m, Bump(0.35, 0.2, 0.05))
    assert cusp_source_residual(p, 0, 0.1) == pytest.approx(0.0, abs=1e-5)
    s = cusp_sphere_metric(0.5)
    z = np.array([1e-4, 1e-3j, 0.01 + 0.01j, 0.2])
    assert np.max(np.abs(cusp_source_residual(s, 0, z))) <= 1e-5
    with pytest.raises(ValidationError):
        cusp_source_residual(football_metric(0.5), 0, 0.1)


def test_hodge_star_flux_examples():
    for eps in (1e-6, 0.1, 2.0):
        assert hodge_star_flux(cone_model_field(0.3), 0j, eps) == pytest.approx(2 * math.pi * 0.3,
                                                                                 abs=1e-10)
    assert hodge_star_flux(lambda z: np.real(z), 0j, 0.5) == pytest.approx(0.0, abs=1e-10)
    assert hodge_star_flux(constant_field(2.0), 0j, 0.5) == 0.0
    expected = -2 * math.pi - 2 * math.pi / math.log(1e-3)
    assert hodge_star_flux(cusp_model_field(), 0j, 1e-3) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(-5.3736, abs=1e-4)


def test_hodge_star_flux_needs_samples():
    with pytest.raises(ValidationError):
        hodge_star_flux(cone_model_field(0.3), 0j, 0.1, n=8)


def test_abs_dz_flux():
    assert abs_dz_flux(constant_field(0.0), 0j, 0.1) == 0.0
    u = football_metric(0.5).regular_parts[0]
    ratio = abs_dz_flux(u, 0j, 0.1) / abs_dz_flux(u, 0j, 0.05)
    assert ratio == pytest.approx(16.0, rel=0.05)
    # closed form: |u_z| = (1+b) r^{2b+1} / (1 + r^{2+2b}) is constant on the circle
    b, eps = 0.5, 0.1
    exact = eps * 2 * math.pi * eps * (1 + b) * eps ** (2 * b + 1) / (1 + eps ** (2 + 2 * b))
    assert abs_dz_flux(u, 0j, eps) == pytest.approx(exact, rel=1e-12)


def test_abs_dz_flux_sample_count_convergence():
    m = perturb(football_metric(0.5), Bump(0.4, 0.2, 0.04))
    a = abs_dz_flux(m.regular_parts[0], 0j, 0.1, n=512)
    b = abs_dz_flux(m.regular_parts[0], 0j, 0.1, n=1024)
    assert abs(a - b) < 1e-8

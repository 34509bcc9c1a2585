from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from torusspec.errors import ConfigurationError
from torusspec.geometry import (
    ConformalFactor,
    CutoffProfile,
    bump_factor,
    bump_profile,
    bump_volume_exact,
    check_parameter_chain,
    constant_factor,
    custom_factor,
    cutoff_field,
    cutoff_gradient,
    gaussian_kernel,
    generalized_volume,
    integrate,
    make_grid,
    mollify_factor,
    smoothstep,
    smoothstep_derivative,
)


@pytest.mark.parametrize("n", [7, 9, 4, 0])
def test_make_grid_rejects_odd_or_tiny(n):
    with pytest.raises(ConfigurationError):
        make_grid(1.0, n)


def test_make_grid_rejects_nonpositive_period():
    with pytest.raises(ConfigurationError):
        make_grid(0.0, 16)


def test_offsets_are_minimum_image():
    g = make_grid(2.0, 16)
    assert g.offsets.min() == pytest.approx(-1.0)
    assert g.offsets.max() < 1.0
    assert g.radius[g.origin_index] == 0.0
    assert g.spacing == pytest.approx(0.125)


@given(
    a=st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
    b=st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
    c=st.tuples(st.integers(-40, 40), st.integers(-40, 40)),
)
def test_distance_is_a_metric(a, b, c):
    g = make_grid(1.0, 16)
    assert g.distance(a, b) == pytest.approx(g.distance(b, a))
    assert g.distance(a, a) == 0.0
    assert g.distance(a, c) <= g.distance(a, b) + g.distance(b, c) + 1e-12
    assert g.distance(a, b) <= np.sqrt(2) * g.period / 2 + 1e-12


def test_distance_matches_radius_field():
    g = make_grid(1.0, 32)
    for i, j in [(0, 0), (3, 30), (16, 5), (31, 31)]:
        assert g.distance((i, j), (0, 0)) == pytest.approx(g.radius[i, j])


def test_parameter_chain_messages():
    with pytest.raises(ConfigurationError, match="eps <= alpha <= delta <= period/4"):
        check_parameter_chain(1.0, 0.1, 0.2)
    with pytest.raises(ConfigurationError, match="alpha"):
        check_parameter_chain(1.0, 0.2, 0.1, delta=0.15)
    with pytest.raises(ConfigurationError):
        check_parameter_chain(1.0, 0.1, 0.05, delta=0.3)
    with pytest.raises(ConfigurationError):
        check_parameter_chain(1.0, 0.3, 0.05)
    check_parameter_chain(1.0, 1 / 32, 1 / 512, delta=1 / 8)


@given(
    alpha=st.floats(0.01, 0.2),
    ratio=st.floats(0.01, 1.0),
    r=st.floats(0.0, 0.7),
)
def test_bump_profile_bounds(alpha, ratio, r):
    eps = alpha * ratio
    v = bump_profile(np.array([r]), alpha, eps)[0]
    floor = eps**2 / (eps**2 + alpha**2)
    assert floor - 1e-15 <= v <= 1.0
    if r >= alpha:
        assert v == pytest.approx(floor)


def test_bump_factor_shape_and_peak():
    g = make_grid(1.0, 64)
    f = bump_factor(g, 1 / 8, 1 / 32)
    assert f.kind == "bump" and f.alpha == 1 / 8 and f.epsilon == 1 / 32
    assert f.values[0, 0] == 1.0
    assert np.all(f.values > 0)
    # radially nonincreasing
    order = np.argsort(g.radius.ravel())
    assert np.all(np.diff(f.values.ravel()[order]) <= 1e-15)


def test_conformal_factor_rejects_nonpositive():
    with pytest.raises(ValueError):
        ConformalFactor(np.array([[1.0, 0.0]]), "smooth-custom")
    with pytest.raises(ValueError):
        ConformalFactor(np.ones((2, 2)), "nonsense")
    g = make_grid(1.0, 8)
    with pytest.raises(ValueError):
        custom_factor(g, lambda x, y: np.cos(2 * np.pi * x))


def test_scaled_factor():
    g = make_grid(1.0, 16)
    f = bump_factor(g, 0.2, 0.1)
    h = f.scaled(3.0)
    assert_allclose(h.values, 3 * f.values)
    with pytest.raises(ValueError):
        f.scaled(-1.0)


def test_integrate_constant_and_complex():
    g = make_grid(3.0, 16)
    assert integrate(np.full(g.shape, 2.0), g) == pytest.approx(18.0)
    z = integrate(np.full(g.shape, 1 + 1j), g)
    assert isinstance(z, complex) and z == pytest.approx(9 + 9j)


def test_integrate_trig_polynomial_exact():
    g = make_grid(1.0, 16)
    x, y = np.meshgrid(g.coordinates, g.coordinates, indexing="ij")
    u = 1.5 + np.cos(2 * np.pi * 3 * x) * np.sin(2 * np.pi * 2 * y)
    assert integrate(u, g) == pytest.approx(1.5, abs=1e-14)


def test_volume_of_constant_factor():
    g = make_grid(2.0, 32)
    assert generalized_volume(constant_factor(g, 0.5), g) == pytest.approx(1.0)


def test_volume_matches_closed_form_when_resolved():
    g = make_grid(1.0, 256)
    for alpha, eps in [(1 / 16, 1 / 32), (1 / 8, 1 / 32), (0.2, 0.05)]:
        v = generalized_volume(bump_factor(g, alpha, eps), g)
        assert v == pytest.approx(bump_volume_exact(alpha, eps), rel=1e-3)


@given(alpha=st.floats(0.005, 0.24), ratio=st.floats(1e-3, 1.0))
def test_volume_exceeds_bubble_area_on_unit_torus(alpha, ratio):
    # Vol / (pi eps^2) > 1 whenever L^2 > 2 pi alpha^2 + pi eps^2, which
    # every admissible alpha < L/4 satisfies on the unit torus.
    eps = alpha * ratio
    assert bump_volume_exact(alpha, eps, 1.0) / (np.pi * eps**2) > 1.0


def test_volume_bubble_limit():
    # with the outer region negligible the volume tends to pi eps^2
    alpha = 0.2
    for eps, tol in [(1e-3, 2e-2), (1e-4, 2e-3)]:
        assert bump_volume_exact(alpha, eps, 1.0) / (np.pi * eps**2) == pytest.approx(1.0, rel=tol)


@pytest.mark.parametrize("order", [3, 5, 7, 9])
def test_smoothstep_endpoints_and_monotone(order):
    t = np.linspace(0, 1, 401)
    s = smoothstep(t, order)
    assert s[0] == 0.0 and s[-1] == pytest.approx(1.0)
    assert smoothstep(np.array(0.5), order) == pytest.approx(0.5)
    assert np.all(np.diff(s) >= -1e-15)
    assert smoothstep(np.array(-1.0), order) == 0.0
    assert smoothstep(np.array(2.0), order) == pytest.approx(1.0)


@settings(max_examples=40)
@given(order=st.sampled_from([3, 5, 7]), t=st.floats(0.01, 0.99))
def test_smoothstep_derivative_matches_difference(order, t):
    h = 1e-6
    fd = (smoothstep(np.array(t + h), order) - smoothstep(np.array(t - h), order)) / (2 * h)
    assert smoothstep_derivative(np.array(t), order) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_cutoff_profile_validation():
    with pytest.raises(ConfigurationError):
        CutoffProfile(0.1, order=4)
    with pytest.raises(ConfigurationError):
        CutoffProfile(-0.1)
    g = make_grid(1.0, 32)
    with pytest.raises(ConfigurationError):
        cutoff_field(g, CutoffProfile(0.3))


def test_cutoff_field_plateau_and_support():
    g = make_grid(1.0, 128)
    prof = CutoffProfile(1 / 8)
    eta = cutoff_field(g, prof)
    assert np.all(eta[g.radius <= prof.delta] == 1.0)
    assert np.all(eta[g.radius >= 2 * prof.delta] == 0.0)
    assert np.all((eta >= 0) & (eta <= 1))


def test_cutoff_gradient_matches_spectral_derivative():
    from torusspec.spectral import gradient

    g = make_grid(1.0, 256)
    prof = CutoffProfile(1 / 8, order=7)
    gx, gy = cutoff_gradient(g, prof)
    sx, sy = gradient(cutoff_field(g, prof), g)
    scale = np.max(np.hypot(gx, gy))
    assert np.max(np.abs(gx - sx)) / scale < 1e-3
    assert np.max(np.abs(gy - sy)) / scale < 1e-3


def test_gaussian_kernel_unit_mass():
    g = make_grid(1.0, 64)
    k = gaussian_kernel(g, 0.05)
    assert k.sum() == pytest.approx(1.0)
    assert k[0, 0] == k.max()
    with pytest.raises(ValueError):
        gaussian_kernel(g, 0.0)


def test_mollify_preserves_mass_and_bounds():
    g = make_grid(1.0, 64)
    f = bump_factor(g, 1 / 8, 1 / 32)
    m = mollify_factor(f, 2 * g.spacing)
    assert m.kind == "mollified"
    assert m.values.sum() == pytest.approx(f.values.sum())
    assert m.values.min() >= f.values.min() and m.values.max() <= f.values.max()


def test_mollify_converges_uniformly():
    g = make_grid(1.0, 128)
    f = bump_factor(g, 1 / 16, 1 / 32)
    h = g.spacing
    dists = [np.max(np.abs(mollify_factor(f, w).values - f.values)) for w in (4 * h, 2 * h, h, h / 4)]
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_mollify_needs_grid():
    f = ConformalFactor(np.ones((8, 8)), "smooth-custom")
    with pytest.raises(ValueError, match="grid"):
        mollify_factor(f, 0.1)

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusspec.analysis import (
    check_integration_identity,
    check_poincare_bump,
    continuity_experiment_dirac,
    continuity_experiment_laplace,
    liminf_product_check,
)
from torusspec.dirac import TRIVIAL_SPIN
from torusspec.geometry import bump_factor, make_grid
from torusspec.spectral import band_limited_field


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), degree=st.integers(1, 7))
def test_integration_identity(seed, degree):
    g = make_grid(1.0, 32)
    rng = np.random.default_rng(seed)
    u, v = band_limited_field(g, degree, rng), band_limited_field(g, degree, rng)
    assert check_integration_identity(u, v, g) <= 1e-8


def test_integration_identity_detects_wrong_sign():
    # flipping the sign of v^2 must break it
    g = make_grid(1.0, 32)
    rng = np.random.default_rng(0)
    u, v = band_limited_field(g, 3, rng), band_limited_field(g, 3, rng)
    assert check_integration_identity(u, 1j * v, g) > 1e-3


def _bubble_field(grid, alpha, rng, degree=6):
    cut = np.clip(1 - grid.radius / alpha, 0, None) ** 2
    return band_limited_field(grid, degree, rng) * cut


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), ratio=st.sampled_from([1.0, 0.5, 0.25]))
def test_poincare_slack_nonnegative(seed, ratio):
    g = make_grid(1.0, 128)
    alpha = 1 / 16
    u = _bubble_field(g, alpha, np.random.default_rng(seed))
    assert check_poincare_bump(u, alpha, alpha * ratio, g) >= -1e-6


def test_poincare_rejects_leaking_field():
    g = make_grid(1.0, 64)
    with pytest.raises(ValueError, match="vanish"):
        check_poincare_bump(np.ones(g.shape), 1 / 8, 1 / 16, g)


@pytest.fixture(scope="module")
def continuity_setup():
    g = make_grid(1.0, 64)
    return g, bump_factor(g, 1 / 8, 1 / 16)


def test_continuity_laplace(continuity_setup):
    g, f = continuity_setup
    h = g.spacing
    pts = continuity_experiment_laplace(f, [4 * h, 2 * h, h], g)
    gaps = [p.gap for p in pts]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    dists = [p.uniform_distance for p in pts]
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_continuity_dirac(continuity_setup):
    g, f = continuity_setup
    h = g.spacing
    pts = continuity_experiment_dirac(f, [4 * h, 2 * h, h], g, TRIVIAL_SPIN)
    gaps = [p.gap for p in pts]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert all(p.kernel_dim == 2 for p in pts)


@pytest.mark.parametrize("widths", [[0.1, 0.2], [0.1, 0.1], [], [0.1, -0.05]])
def test_continuity_rejects_bad_widths(continuity_setup, widths):
    g, f = continuity_setup
    with pytest.raises(ValueError):
        continuity_experiment_laplace(f, widths, g)


def _rec(alpha, eps, e2mu, vol_ratio=1.0):
    return SimpleNamespace(alpha=alpha, epsilon=eps, mu1=e2mu / eps**2, volume=vol_ratio * np.pi * eps**2)


def test_liminf_check_passes_on_increasing_sequence():
    recs = [_rec(0.1, e, v) for e, v in [(0.05, 6.0), (0.025, 7.2), (0.0125, 7.8)]]
    rep = liminf_product_check(recs)
    assert rep.passed and not rep.messages
    assert rep.rows[-1]["mu1_vol_over_8pi"] == pytest.approx(7.8 / 8)
    assert max(r["identity_gap"] for r in rep.rows) < 1e-12


def test_liminf_check_flags_low_tail_and_drop():
    recs = [_rec(0.1, e, v) for e, v in [(0.05, 7.0), (0.025, 6.0), (0.0125, 5.0)]]
    rep = liminf_product_check(recs)
    assert not rep.passed
    assert any("tail" in m for m in rep.messages)
    assert any("drops" in m for m in rep.messages)


def test_liminf_check_input_validation():
    with pytest.raises(ValueError):
        liminf_product_check([])
    with pytest.raises(ValueError):
        liminf_product_check([_rec(0.1, 0.01, 7), _rec(0.2, 0.005, 7)])
    with pytest.raises(ValueError):
        liminf_product_check([_rec(0.1, 0.005, 7), _rec(0.1, 0.01, 7)])

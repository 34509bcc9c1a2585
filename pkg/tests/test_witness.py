from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

import torusspec.witness as witness_mod
from torusspec.dirac import (
    DiracOperator,
    SpinStructure,
    apply_dirac,
    first_positive_weighted_eigenvalue,
    spin_structures,
)
from torusspec.errors import ConfigurationError, ConsistencyError
from torusspec.geometry import CutoffProfile, bump_factor, make_grid
from torusspec.witness import (
    UNIT_SPINOR,
    WITNESS_BASE,
    cross_term_imaginarity,
    denominator,
    model_spinor,
    numerator_split,
    seam_sign,
    sphere_weight,
    upper_bound_product,
    witness_report,
    witness_spinor,
)


@pytest.fixture(scope="module")
def fine_grid():
    return make_grid(1.0, 512)


@pytest.mark.parametrize("base", [UNIT_SPINOR, WITNESS_BASE, (0.3 + 0.4j, -0.2j)])
def test_model_spinor_pointwise_norm(base):
    g = make_grid(1.0, 64)
    psi = model_spinor(g, 0.1, base)
    f = sphere_weight(g.radius**2 / 0.01)
    assert_allclose(psi.pointwise_norm2(), 2 * f * np.sum(np.abs(base) ** 2), rtol=1e-13)


def test_model_spinor_solves_dirac_equation_locally():
    # D psi = (1/s) f(x/s) psi(x/s) checked by centred differences at an interior point
    s, h = 0.3, 1e-5

    def psi_at(x, y):
        y1, y2 = x / s, y / s
        f = 2 / (1 + y1**2 + y2**2)
        p0 = np.array([1.0, 0.0], dtype=complex)
        return f * (p0 - np.array([-1j * (y1 - 1j * y2) * p0[1], -1j * (y1 + 1j * y2) * p0[0]]))

    x0, y0 = 0.11, -0.07
    d1 = (psi_at(x0 + h, y0) - psi_at(x0 - h, y0)) / (2 * h)
    d2 = (psi_at(x0, y0 + h) - psi_at(x0, y0 - h)) / (2 * h)
    dpsi = np.array([-1j * (d1[1] - 1j * d2[1]), -1j * (d1[0] + 1j * d2[0])])
    f = 2 / (1 + (x0**2 + y0**2) / s**2)
    assert_allclose(dpsi, f / s * psi_at(x0, y0), rtol=1e-7)


def test_terms_reproduce_grid_dirac(fine_grid):
    w = witness_spinor(fine_grid, CutoffProfile(0.2), 0.05)
    grad_term, bubble_term = w.terms()
    d = apply_dirac(DiracOperator(fine_grid), w.field).values
    assert np.max(np.abs(d - grad_term - bubble_term)) / np.max(np.abs(d)) < 1e-4


def test_bubble_limits(fine_grid):
    errs_i2, errs_den = [], []
    for eps in (0.05, 0.025, 0.0125):
        rep = witness_report(fine_grid, CutoffProfile(0.2), bump_factor(fine_grid, 0.2, eps), eps)
        errs_i2.append(abs(rep.I2 / (8 * np.pi) - 1))
        errs_den.append(abs(rep.denominator / (4 * np.pi * eps) - 1))
        assert rep.grid_quotient == pytest.approx(rep.split_quotient, rel=1e-8)
    # second order in eps / alpha
    assert errs_i2[1] < errs_i2[0] / 3 and errs_i2[2] < errs_i2[1] / 3
    assert errs_den[1] < errs_den[0] / 3 and errs_den[2] < errs_den[1] / 3
    assert errs_i2[-1] < 5e-3 and errs_den[-1] < 5e-3


def test_gradient_term_is_bounded_in_eps(fine_grid):
    vals = []
    for eps in (0.05, 0.025, 0.0125):
        w = witness_spinor(fine_grid, CutoffProfile(0.2), eps)
        vals.append(numerator_split(w, bump_factor(fine_grid, 0.2, eps))[0])
    assert max(vals) / min(vals) < 1.1


def test_cross_term_is_imaginary():
    g = make_grid(1.0, 64)
    for eps in (1 / 8, 1 / 32, 1 / 128):
        assert cross_term_imaginarity(witness_spinor(g, CutoffProfile(1 / 8), eps)) <= 1e-10


def test_hermitian_clifford_is_caught(monkeypatch):
    g = make_grid(1.0, 64)

    def hermitian_product(v, psi):
        v1, v2 = v
        out = np.empty_like(psi, dtype=complex)
        out[0] = (v1 - 1j * v2) * psi[1]
        out[1] = (v1 + 1j * v2) * psi[0]
        return out

    monkeypatch.setattr(witness_mod, "clifford", hermitian_product)
    w = witness_spinor(g, CutoffProfile(1 / 8), 1 / 32)
    assert cross_term_imaginarity(w) > 1e-3
    with pytest.raises(ConsistencyError):
        numerator_split(w, bump_factor(g, 1 / 16, 1 / 32))


@pytest.mark.parametrize("spin", spin_structures(), ids=str)
def test_witness_dominates_first_eigenvalue(spin):
    g = make_grid(1.0, 64)
    prof = CutoffProfile(1 / 8)
    for alpha, eps in [(1 / 8, 1 / 16), (1 / 16, 1 / 64)]:
        f = bump_factor(g, alpha, eps)
        rep = witness_report(g, prof, f, eps, spin)
        lam = first_positive_weighted_eigenvalue(DiracOperator(g, spin), f).eigenvalue
        assert rep.upper_bound >= lam**2 * rep.volume * (1 - 1e-9)
        assert upper_bound_product(g, prof, f, eps, spin) == pytest.approx(rep.upper_bound)


def test_seam_sign():
    g = make_grid(1.0, 8)
    assert np.all(seam_sign(g, SpinStructure()) == 1)
    s = seam_sign(g, SpinStructure(0.5, 0.0))
    assert np.all(s[:4] == 1) and np.all(s[4:] == -1)
    s = seam_sign(g, SpinStructure(0.5, 0.5))
    assert s[5, 5] == 1 and s[5, 1] == -1


def test_denominator_spin_dependence_is_spectrally_small():
    # the field is supported away from the seam; the global spectral operator
    # only sees the twist through the truncated tail of its interpolant
    spread = []
    for n in (64, 128):
        g = make_grid(1.0, n)
        vals = [denominator(witness_spinor(g, CutoffProfile(1 / 8), 1 / 32, spin=s)) for s in spin_structures()]
        spread.append(np.ptp(vals) / vals[0])
    assert spread[0] < 1e-5 and spread[1] < spread[0] / 10


def test_witness_argument_checks():
    g = make_grid(1.0, 64)
    with pytest.raises(ConfigurationError):
        witness_spinor(g, CutoffProfile(1 / 8), 0.2)
    with pytest.raises(ConfigurationError):
        witness_spinor(g, CutoffProfile(0.25), 0.01)
    with pytest.raises(ValueError):
        model_spinor(g, 0.0)
    w = witness_spinor(g, CutoffProfile(1 / 8), 1 / 32)
    with pytest.raises(ValueError):
        numerator_split(w, bump_factor(g, 1 / 16, 1 / 64))
    with pytest.raises(ConfigurationError):
        witness_report(g, CutoffProfile(1 / 16), bump_factor(g, 1 / 8, 1 / 32), 1 / 32)

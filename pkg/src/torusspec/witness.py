"""Explicit test spinor giving the ``4 pi`` upper bound for ``lam_1^2 Vol``.

On the plane, ``psi(y) = f(y) (psi_0 - y . psi_0)`` with ``f(y) = 2 / (1 + |y|^2)``
solves ``D psi = f psi`` and has ``|psi|^2 = 2 f |psi_0|^2``. The witness is
``psi_eps(x) = eta(x) psi(x / eps)`` with ``eta`` a cutoff around ``p``, and

    D psi_eps = grad(eta) . psi(x/eps) + (eta / eps) f(x/eps) psi(x/eps).

The two terms are fibrewise orthogonal in real part (Clifford multiplication
is skew-Hermitian), which is what lets the numerator split into ``I1 + I2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirac import (
    TRIVIAL_SPIN,
    DiracOperator,
    SpinStructure,
    SpinorField,
    apply_dirac,
    clifford,
    pointwise_inner,
    rayleigh_quotient_J,
)
from .errors import ConfigurationError, ConsistencyError
from .geometry import (
    ConformalFactor,
    CutoffProfile,
    TorusGrid,
    cutoff_field,
    cutoff_gradient,
    generalized_volume,
    integrate,
)

UNIT_SPINOR = (1.0, 0.0)
# |psi_0|^2 = 1/2 makes |psi|^2 = f, so I2 -> 8 pi and the denominator -> 4 pi eps
WITNESS_BASE = (1.0 / np.sqrt(2.0), 0.0)
IMAGINARITY_TOL = 1e-10


def sphere_weight(y2: np.ndarray) -> np.ndarray:
    """``f(y) = 2 / (1 + |y|^2)`` as a function of ``|y|^2``."""
    return 2.0 / (1.0 + y2)


def _model_values(grid: TorusGrid, scale: float, base) -> np.ndarray:
    x, y = grid.mesh
    y1, y2 = x / scale, y / scale
    psi0 = np.empty((2,) + grid.shape, dtype=complex)
    psi0[0], psi0[1] = base
    f = sphere_weight(y1**2 + y2**2)
    return f[None] * (psi0 - clifford((y1, y2), psi0))


def seam_sign(grid: TorusGrid, spin: SpinStructure) -> np.ndarray:
    """``-1`` at nodes reached across an antiperiodic seam from ``p``, else ``+1``.

    A field supported near ``p`` is stored by its values on ``[0, L)``; for an
    antiperiodic direction, nodes at negative minimum-image offset pick up the
    sign of the twisted boundary condition.
    """
    sign = np.ones(grid.shape)
    neg = np.arange(grid.nodes_per_axis) >= grid.nodes_per_axis // 2
    if spin.phase_x:
        sign[neg, :] *= -1
    if spin.phase_y:
        sign[:, neg] *= -1
    return sign


def model_spinor(grid: TorusGrid, scale: float, base=UNIT_SPINOR) -> SpinorField:
    """Nodal values of ``psi(x / scale)`` in minimum-image coordinates around ``p``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return SpinorField(_model_values(grid, scale, base))


@dataclass
class WitnessSpinor:
    field: SpinorField
    epsilon: float
    delta: float
    base_spinor: tuple
    profile: CutoffProfile
    grid: TorusGrid
    spin: SpinStructure = TRIVIAL_SPIN

    def terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact nodal values of the cutoff-gradient term and the bubble term of ``D psi_eps``."""
        psi = _model_values(self.grid, self.epsilon, self.base_spinor)
        grad_eta = cutoff_gradient(self.grid, self.profile)
        eta = cutoff_field(self.grid, self.profile)
        f = sphere_weight(self.grid.radius**2 / self.epsilon**2)
        sign = seam_sign(self.grid, self.spin)[None]
        return sign * clifford(grad_eta, psi), sign * (eta * f / self.epsilon)[None] * psi


def witness_spinor(
    grid: TorusGrid,
    profile: CutoffProfile,
    epsilon: float,
    base=WITNESS_BASE,
    spin: SpinStructure = TRIVIAL_SPIN,
) -> WitnessSpinor:
    if 2 * profile.delta >= grid.period / 2:
        raise ConfigurationError(
            f"witness support 2*delta={2 * profile.delta} must be < period/2={grid.period / 2}"
        )
    if not 0 < epsilon <= profile.delta:
        raise ConfigurationError(f"need 0 < eps <= delta, got eps={epsilon}, delta={profile.delta}")
    eta = cutoff_field(grid, profile)
    values = (eta * seam_sign(grid, spin))[None] * _model_values(grid, epsilon, base)
    return WitnessSpinor(
        SpinorField(values, spin), epsilon, profile.delta, tuple(base), profile, grid, spin
    )


def cross_term_imaginarity(w: WitnessSpinor) -> float:
    """Largest nodal ``|Re <grad eta . psi, psi>| / (|psi|^2 |grad eta|)``."""
    psi = _model_values(w.grid, w.epsilon, w.base_spinor)
    gx, gy = cutoff_gradient(w.grid, w.profile)
    gnorm = np.hypot(gx, gy)
    re = np.abs(np.real(pointwise_inner(clifford((gx, gy), psi), psi)))
    scale = np.sum(np.abs(psi) ** 2, axis=0) * gnorm
    mask = scale > 0
    if not mask.any():
        return 0.0
    return float(np.max(re[mask] / scale[mask]))


def numerator_split(w: WitnessSpinor, factor: ConformalFactor) -> tuple[float, float]:
    """``(I1, I2)``: the two pieces of ``int |D psi_eps|^2 f_{alpha,eps}^{-1}``."""
    if factor.kind != "bump" or factor.epsilon != w.epsilon:
        raise ValueError("numerator_split expects the bump factor with the witness's eps")
    worst = cross_term_imaginarity(w)
    if worst > IMAGINARITY_TOL:
        raise ConsistencyError(
            f"Re <grad eta . psi, psi> = {worst:.2e} relative; Clifford convention broken"
        )
    grad_term, bubble_term = w.terms()
    inv_f = 1.0 / factor.values
    i1 = integrate(np.sum(np.abs(grad_term) ** 2, axis=0) * inv_f, w.grid)
    i2 = integrate(np.sum(np.abs(bubble_term) ** 2, axis=0) * inv_f, w.grid)
    return i1, i2


def denominator(w: WitnessSpinor, imag_tol: float = 1e-10) -> float:
    """``Re int <D psi_eps, psi_eps>`` with the grid Dirac operator; imaginary part asserted."""
    op = DiracOperator(w.grid, w.spin)
    dpsi = apply_dirac(op, w.field).values
    val = integrate(pointwise_inner(dpsi, w.field.values), w.grid)
    scale = integrate(np.abs(pointwise_inner(dpsi, w.field.values)), w.grid)
    if abs(val.imag) > imag_tol * max(scale, np.finfo(float).tiny):
        raise ConsistencyError(f"int <D psi, psi> has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass
class WitnessReport:
    I1: float
    I2: float
    denominator: float
    split_quotient: float
    grid_quotient: float
    volume: float
    split_bound: float
    upper_bound: float


def witness_report(
    grid: TorusGrid,
    profile: CutoffProfile,
    factor: ConformalFactor,
    epsilon: float,
    spin: SpinStructure = TRIVIAL_SPIN,
) -> WitnessReport:
    """All witness quantities for one parameter set.

    ``split_bound`` uses ``(I1 + I2) / denominator``; ``upper_bound`` uses the
    grid Rayleigh quotient ``J`` of the same nodal field, which is a rigorous
    upper bound for the discrete ``lam_1`` (the two agree once ``eps`` is
    resolved by the grid).
    """
    if factor.epsilon != epsilon or factor.alpha is None:
        raise ValueError("factor must be the bump with the same eps")
    if factor.alpha > profile.delta:
        raise ConfigurationError(f"alpha={factor.alpha} > delta={profile.delta}")
    w = witness_spinor(grid, profile, epsilon, spin=spin)
    i1, i2 = numerator_split(w, factor)
    den = denominator(w)
    if not den > 0:
        raise ConsistencyError(f"witness denominator {den:.3e} is not positive")
    vol = generalized_volume(factor, grid)
    split_q = (i1 + i2) / den
    grid_q = rayleigh_quotient_J(w.field, factor, DiracOperator(grid, spin))
    return WitnessReport(i1, i2, den, split_q, grid_q, vol, split_q**2 * vol, grid_q**2 * vol)


def upper_bound_product(
    grid: TorusGrid,
    profile: CutoffProfile,
    factor: ConformalFactor,
    epsilon: float,
    spin: SpinStructure = TRIVIAL_SPIN,
) -> float:
    """``J(psi_eps)^2 Vol``, an upper bound for ``lam_1^2 Vol`` on this grid."""
    return witness_report(grid, profile, factor, epsilon, spin).upper_bound

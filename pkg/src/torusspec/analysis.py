"""Numerical audits of the identities and inequalities behind the eigenvalue bounds.

* continuity of ``mu_1`` and ``lam_1`` when the conformal factor is
  mollified (uniform convergence of the factor);
* the integration-by-parts identity
  ``int (Delta u) u v^2 = int |grad(uv)|^2 - int u^2 |grad v|^2``;
* the Poincare-Sobolev inequality on the bubble ``B_p(alpha)``;
* the ``liminf eps^2 mu_1 >= 8`` reformulation over a sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dirac import DiracOperator, SpinStructure, first_positive_weighted_eigenvalue, kernel_dimension
from .geometry import ConformalFactor, TorusGrid, bump_profile, integrate, mollify_factor
from .laplace import LaplaceOperator, apply_laplacian, first_weighted_eigenvalue
from .spectral import gradient, gradient_energy


@dataclass
class ContinuityPoint:
    width: float
    eigenvalue: float
    gap: float
    uniform_distance: float
    kernel_dim: int | None = None


def _check_widths(widths: Sequence[float]) -> None:
    w = np.asarray(widths, dtype=float)
    if w.size == 0 or np.any(w <= 0) or np.any(np.diff(w) >= 0):
        raise ValueError("widths must be positive and strictly decreasing")


def continuity_experiment_laplace(
    factor: ConformalFactor, widths: Sequence[float], grid: TorusGrid, tol: float = 1e-10
) -> list[ContinuityPoint]:
    _check_widths(widths)
    op = LaplaceOperator(grid)
    base = first_weighted_eigenvalue(op, factor, tol).eigenvalue
    out = []
    for w in widths:
        fw = mollify_factor(factor, w)
        mu = first_weighted_eigenvalue(op, fw, tol).eigenvalue
        dist = float(np.max(np.abs(fw.values - factor.values)))
        out.append(ContinuityPoint(float(w), mu, abs(mu - base), dist))
    return out


def continuity_experiment_dirac(
    factor: ConformalFactor,
    widths: Sequence[float],
    grid: TorusGrid,
    spin: SpinStructure,
    tol: float = 1e-10,
) -> list[ContinuityPoint]:
    _check_widths(widths)
    op = DiracOperator(grid, spin)
    base = first_positive_weighted_eigenvalue(op, factor, tol).eigenvalue
    out = []
    for w in widths:
        fw = mollify_factor(factor, w)
        lam = first_positive_weighted_eigenvalue(op, fw, tol).eigenvalue
        dist = float(np.max(np.abs(fw.values - factor.values)))
        out.append(ContinuityPoint(float(w), lam, abs(lam - base), dist, kernel_dimension(op, factor=fw)))
    return out


def check_integration_identity(u: np.ndarray, v: np.ndarray, grid: TorusGrid) -> float:
    """Relative residual ``|LHS - RHS| / (1 + |LHS|)`` of the integration-by-parts identity."""
    lhs = integrate(apply_laplacian(LaplaceOperator(grid), u) * u * v**2, grid)
    gx, gy = gradient(u * v, grid)
    vx, vy = gradient(v, grid)
    rhs = integrate(gx**2 + gy**2, grid) - integrate(u**2 * (vx**2 + vy**2), grid)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def check_poincare_bump(
    u: np.ndarray, alpha: float, epsilon: float, grid: TorusGrid, leak_tol: float = 1e-12
) -> float:
    """Slack ``RHS - LHS`` of the bubble Poincare inequality for ``u`` supported in ``B_p(alpha)``.

    LHS ``int u^2 f^2``; RHS ``eps^2/8 int |grad u|^2 + (int u f^2)^2 / (pi eps^2)``.
    """
    outside = grid.radius > alpha
    scale = max(float(np.max(np.abs(u))), np.finfo(float).tiny)
    if np.any(outside) and np.max(np.abs(u[outside])) > leak_tol * scale:
        raise ValueError("u must vanish outside B_p(alpha)")
    f2 = bump_profile(grid.radius, alpha, epsilon) ** 2
    lhs = integrate(u**2 * f2, grid)
    rhs = epsilon**2 / 8 * gradient_energy(u, grid) + integrate(u * f2, grid) ** 2 / (np.pi * epsilon**2)
    return rhs - lhs


@dataclass
class LiminfReport:
    alpha: float
    rows: list[dict]
    passed: bool
    messages: list[str] = field(default_factory=list)


def liminf_product_check(
    records: Sequence, tail_floor: float = 8 * 0.8, noise: float = 0.01
) -> LiminfReport:
    """Audit ``eps^2 mu_1`` along an eps-decreasing sweep at fixed alpha.

    Passes when the tail value exceeds ``tail_floor`` and the sequence is
    nondecreasing up to a relative ``noise`` band.
    """
    recs = [r for r in records if np.isfinite(getattr(r, "mu1", np.nan))]
    if not recs:
        raise ValueError("no successful records to audit")
    alphas = {r.alpha for r in recs}
    if len(alphas) != 1:
        raise ValueError("records must share alpha")
    eps = [r.epsilon for r in recs]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("records must be ordered by decreasing eps")
    rows = []
    for r in recs:
        e2mu = r.epsilon**2 * r.mu1
        vol_ratio = r.volume / (np.pi * r.epsilon**2)
        rows.append(
            {
                "epsilon": r.epsilon,
                "eps2_mu1": e2mu,
                "mu1_vol_over_8pi": r.mu1 * r.volume / (8 * np.pi),
                "vol_over_pi_eps2": vol_ratio,
                # mu1 Vol / (pi eps^2 mu1) must reproduce the volume ratio
                "identity_gap": abs(r.mu1 * r.volume / (np.pi * e2mu) - vol_ratio),
            }
        )
    msgs = []
    tail = rows[-1]["eps2_mu1"]
    if tail <= tail_floor:
        msgs.append(f"tail eps^2 mu_1 = {tail:.4f} does not exceed {tail_floor:.2f}")
    vals = [row["eps2_mu1"] for row in rows]
    for i, (a, b) in enumerate(zip(vals, vals[1:])):
        if b < a * (1 - noise):
            msgs.append(f"eps^2 mu_1 drops from {a:.4f} to {b:.4f} at record {i + 1}")
    return LiminfReport(recs[0].alpha, rows, not msgs, msgs)

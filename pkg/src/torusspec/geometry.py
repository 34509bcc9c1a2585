"""Flat square torus grids, conformal factors, cutoffs and quadrature.

Everything lives on the periodic grid ``x_j = j * h`` with ``h = L / n``.
The distinguished point ``p`` is node ``(0, 0)`` and distances to it use the
minimum-image convention, so bumps centred at ``p`` wrap correctly as long as
they stay inside one fundamental domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from math import comb
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

FACTOR_KINDS = ("bump", "constant", "smooth-custom", "mollified")


@dataclass(frozen=True)
class TorusGrid:
    """Square torus ``R^2 / (L Z)^2`` sampled on ``n x n`` nodes."""

    period: float
    nodes_per_axis: int

    @property
    def spacing(self) -> float:
        return self.period / self.nodes_per_axis

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nodes_per_axis, self.nodes_per_axis)

    @property
    def origin_index(self) -> tuple[int, int]:
        return (0, 0)

    @property
    def size(self) -> int:
        return self.nodes_per_axis**2

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Nodal coordinates ``j * h`` along one axis, in ``[0, L)``."""
        return np.arange(self.nodes_per_axis) * self.spacing

    @cached_property
    def offsets(self) -> np.ndarray:
        """Minimum-image signed offsets from ``p`` along one axis, in ``[-L/2, L/2)``."""
        n = self.nodes_per_axis
        m = (np.arange(n) + n // 2) % n - n // 2
        return m * self.spacing

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Minimum-image offsets ``(X, Y)`` of every node from ``p``."""
        return np.meshgrid(self.offsets, self.offsets, indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        """Minimum-image distance ``d_g(x, p)`` at every node."""
        x, y = self.mesh
        return np.hypot(x, y)

    def wrap(self, i: int, j: int) -> tuple[int, int]:
        n = self.nodes_per_axis
        return (i % n, j % n)

    def distance(self, a: tuple[int, int], b: tuple[int, int]) -> float:
        """Minimum-image distance between two nodes given by index pairs."""
        n = self.nodes_per_axis
        d = [((ai - bi + n // 2) % n - n // 2) * self.spacing for ai, bi in zip(a, b)]
        return float(np.hypot(*d))


@dataclass(frozen=True)
class ConformalFactor:
    """Positive nodal weight ``f`` representing the generalized metric ``f^2 g``."""

    values: np.ndarray
    kind: str
    grid: Optional[TorusGrid] = field(default=None, compare=False)
    alpha: Optional[float] = None
    epsilon: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("conformal factor must be finite and strictly positive")

    def scaled(self, c: float) -> "ConformalFactor":
        """The factor ``c f``; bump parameters are kept for bookkeeping."""
        if c <= 0:
            raise ValueError("scale must be positive")
        return replace(self, values=c * self.values, meta={**self.meta, "scale": c})


@dataclass(frozen=True)
class CutoffProfile:
    """Radial cutoff: 1 on ``B_p(delta)``, 0 outside ``B_p(2 delta)``.

    ``order`` is the odd polynomial degree of the smoothstep used on the
    annulus (3 = cubic, C^1; 5 = quintic, C^2; ...).
    """

    delta: float
    order: int = 5

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError("cutoff radius delta must be positive")
        if self.order < 3 or self.order % 2 == 0:
            raise ConfigurationError("smoothstep order must be an odd integer >= 3")


def make_grid(period: float = 1.0, nodes_per_axis: int = 128) -> TorusGrid:
    if period <= 0:
        raise ConfigurationError("period must be positive")
    if int(nodes_per_axis) != nodes_per_axis:
        raise ConfigurationError("nodes_per_axis must be an integer")
    n = int(nodes_per_axis)
    if n < 8:
        raise ConfigurationError(f"nodes_per_axis must be >= 8, got {n}")
    if n % 2:
        raise ConfigurationError(f"nodes_per_axis must be even, got {n}")
    return TorusGrid(float(period), n)


def check_parameter_chain(
    period: float, alpha: float, epsilon: float, delta: Optional[float] = None
) -> None:
    """Validate ``0 < eps <= alpha <= delta <= L/4`` (delta optional)."""
    chain = "eps <= alpha <= delta <= period/4"
    if not (epsilon > 0 and alpha > 0):
        raise ConfigurationError(f"alpha and eps must be positive ({chain})")
    if epsilon > alpha:
        raise ConfigurationError(f"eps={epsilon} > alpha={alpha} violates {chain}")
    if delta is not None and alpha > delta:
        raise ConfigurationError(f"alpha={alpha} > delta={delta} violates {chain}")
    if 2 * alpha >= period / 2:
        raise ConfigurationError(
            f"alpha={alpha} too large for period {period}: need 2*alpha < period/2 ({chain})"
        )
    if delta is not None and 2 * delta >= period / 2:
        raise ConfigurationError(
            f"delta={delta} too large for period {period}: need 2*delta < period/2 ({chain})"
        )


def bump_profile(r: np.ndarray, alpha: float, epsilon: float) -> np.ndarray:
    """``eps^2 / (eps^2 + r^2)`` for ``r <= alpha``, frozen at its ``r = alpha`` value beyond."""
    rr = np.minimum(np.asarray(r, dtype=float), alpha)
    return epsilon**2 / (epsilon**2 + rr**2)


def bump_factor(grid: TorusGrid, alpha: float, epsilon: float) -> ConformalFactor:
    check_parameter_chain(grid.period, alpha, epsilon)
    return ConformalFactor(
        bump_profile(grid.radius, alpha, epsilon), "bump", grid, alpha=alpha, epsilon=epsilon
    )


def constant_factor(grid: TorusGrid, c: float = 1.0) -> ConformalFactor:
    return ConformalFactor(np.full(grid.shape, float(c)), "constant", grid)


def custom_factor(
    grid: TorusGrid, values: np.ndarray | Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> ConformalFactor:
    """Smooth user-supplied factor; a callable receives nodal coordinates ``(x, y)`` in ``[0, L)``."""
    if callable(values):
        x, y = np.meshgrid(grid.coordinates, grid.coordinates, indexing="ij")
        values = values(x, y)
    values = np.broadcast_to(np.asarray(values, dtype=float), grid.shape).copy()
    return ConformalFactor(values, "smooth-custom", grid)


def smoothstep(t: np.ndarray, order: int = 5) -> np.ndarray:
    """Odd-degree smoothstep ``S(t)`` clamped to [0, 1]; ``S(1/2) = 1/2``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    m = (order - 1) // 2
    out = np.zeros_like(t)
    for k in range(m + 1):
        out += comb(m + k, k) * comb(order, m - k) * (-t) ** k
    return out * t ** (m + 1)


def smoothstep_derivative(t: np.ndarray, order: int = 5) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    m = (order - 1) // 2
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, order * comb(2 * m, m) * tc**m * (1 - tc) ** m, 0.0)


def _check_cutoff(grid: TorusGrid, profile: CutoffProfile) -> None:
    if 2 * profile.delta >= grid.period / 2:
        raise ConfigurationError(
            f"cutoff support 2*delta={2 * profile.delta} must be < period/2={grid.period / 2}"
        )


def cutoff_field(grid: TorusGrid, profile: CutoffProfile) -> np.ndarray:
    """Nodal values of the radial cutoff ``eta``."""
    _check_cutoff(grid, profile)
    t = (grid.radius - profile.delta) / profile.delta
    return 1.0 - smoothstep(t, profile.order)


def cutoff_gradient(grid: TorusGrid, profile: CutoffProfile) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of the cutoff at the nodes (zero on the plateau and outside)."""
    _check_cutoff(grid, profile)
    r = grid.radius
    t = (r - profile.delta) / profile.delta
    dr = -smoothstep_derivative(t, profile.order) / profile.delta
    x, y = grid.mesh
    safe = np.where(r > 0, r, 1.0)
    return dr * x / safe, dr * y / safe


def integrate(field: np.ndarray, grid: TorusGrid) -> float | complex:
    """Periodic trapezoidal rule ``h^2 * sum(field)``; complex fields give complex results."""
    total = grid.spacing**2 * np.sum(field)
    return complex(total) if np.iscomplexobj(total) else float(total)


def generalized_volume(factor: ConformalFactor, grid: TorusGrid) -> float:
    """``Vol_{f^2 g}(M) = int f^2 dv_g``."""
    return integrate(factor.values**2, grid)


def bump_volume_exact(alpha: float, epsilon: float, period: float = 1.0) -> float:
    """Continuum ``int f_{alpha,eps}^2`` on the square torus of side ``period``."""
    e2, a2 = epsilon**2, alpha**2
    inner = np.pi * e2 * a2 / (e2 + a2)
    outer = (e2 / (e2 + a2)) ** 2 * (period**2 - np.pi * a2)
    return float(inner + outer)


def gaussian_kernel(grid: TorusGrid, width: float) -> np.ndarray:
    """Periodic (minimum-image) Gaussian of standard deviation ``width``, unit discrete mass."""
    if width <= 0:
        raise ValueError("mollification width must be positive")
    kern = np.exp(-0.5 * (grid.radius / width) ** 2)
    return kern / kern.sum()


def mollify_factor(factor: ConformalFactor, width: float) -> ConformalFactor:
    """Circular convolution with a positive Gaussian kernel centred at ``p``."""
    grid = _grid_of(factor)
    kern = gaussian_kernel(grid, width)
    smooth = np.real(np.fft.ifft2(np.fft.fft2(factor.values) * np.fft.fft2(kern)))
    # rounding in the FFT must not push the result below the convex-hull minimum
    smooth = np.clip(smooth, factor.values.min(), factor.values.max())
    return ConformalFactor(
        smooth,
        "mollified",
        grid,
        alpha=factor.alpha,
        epsilon=factor.epsilon,
        meta={**factor.meta, "width": width, "source": factor.kind},
    )


def _grid_of(factor: ConformalFactor) -> TorusGrid:
    if factor.grid is None:
        raise ValueError("factor carries no grid; build it with a geometry constructor")
    return factor.grid

"""Flat-torus Dirac operator and the weighted problem ``D phi = lam f phi``.

Conventions: ``D = -i (sigma_1 d_1 + sigma_2 d_2)`` with Pauli matrices, so
``D^2 = Delta (x) I`` and chirality ``sigma_3`` anticommutes with ``D``.
Clifford multiplication by a vector is ``v . psi = -i (v_1 sigma_1 + v_2 sigma_2) psi``;
it is skew-Hermitian, hence ``<v . psi, psi>`` is purely imaginary.

Spin structures are the four choices of periodic/antiperiodic boundary
conditions per axis. Spinor values are stored as they are (twisted fields
pick up a sign across the seam); the operator gauges the twist into a half
integer shift of the Fourier lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import (
    AdmissibilityError,
    ConvergenceError,
    GridTooLargeError,
    ResolutionError,
)
from .geometry import ConformalFactor, TorusGrid, integrate
from .laplace import SpectralResult
from .spectral import gradient, wavenumbers

DENSE_DIRAC_MAX_N = 32
# ``method="auto"`` switches to Lanczos above this size (dense is O(n^6))
AUTO_DENSE_MAX_N = 16
KERNEL_TOL = 1e-8

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class SpinStructure:
    """Phase shifts ``(theta_x, theta_y)``, each 0 (periodic) or 1/2 (antiperiodic)."""

    phase_x: float = 0.0
    phase_y: float = 0.0

    def __post_init__(self):
        for p in (self.phase_x, self.phase_y):
            if p not in (0, 0.5):
                raise ValueError(f"spin phase must be 0 or 1/2, got {p}")

    @property
    def is_trivial(self) -> bool:
        return self.phase_x == 0 and self.phase_y == 0

    def __str__(self) -> str:
        return f"({self.phase_x:g},{self.phase_y:g})"

    @classmethod
    def parse(cls, text: str) -> "SpinStructure":
        """Parse ``"0,0"``, ``"(0.5,0)"``, ``"1/2,1/2"`` ..."""
        parts = text.strip().strip("()").replace(" ", "").split(",")
        if len(parts) != 2:
            raise ValueError(f"cannot parse spin structure {text!r}")
        vals = []
        for p in parts:
            vals.append(0.5 if p in ("1/2", "0.5", ".5") else float(p))
        return cls(*vals)


TRIVIAL_SPIN = SpinStructure(0.0, 0.0)


def spin_structures() -> list[SpinStructure]:
    return [SpinStructure(a, b) for a in (0.0, 0.5) for b in (0.0, 0.5)]


@dataclass
class SpinorField:
    """Two complex components per node, shape ``(2, n, n)``."""

    values: np.ndarray
    spin: SpinStructure = TRIVIAL_SPIN

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 3 or self.values.shape[0] != 2:
            raise ValueError("spinor values must have shape (2, n, n)")

    def pointwise_norm2(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=0)


def clifford(v: tuple[np.ndarray, np.ndarray], psi: np.ndarray) -> np.ndarray:
    """Clifford product ``v . psi`` for a nodal vector field ``v = (v1, v2)``."""
    v1, v2 = v
    out = np.empty_like(psi, dtype=complex)
    out[0] = -1j * (v1 - 1j * v2) * psi[1]
    out[1] = -1j * (v1 + 1j * v2) * psi[0]
    return out


def pointwise_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Fibrewise Hermitian product ``<a, b>`` (linear in ``a``)."""
    return np.sum(a * np.conj(b), axis=0)


@dataclass(frozen=True)
class DiracOperator:
    grid: TorusGrid
    spin: SpinStructure = TRIVIAL_SPIN
    gamma_convention: str = "-i(s1 d1 + s2 d2)"

    @cached_property
    def _q(self) -> tuple[np.ndarray, np.ndarray]:
        qx = wavenumbers(self.grid, self.spin.phase_x)
        qy = wavenumbers(self.grid, self.spin.phase_y)
        return qx[:, None] * np.ones_like(qy)[None, :], np.ones_like(qx)[:, None] * qy[None, :]

    @cached_property
    def _gauge(self) -> np.ndarray:
        x = self.grid.coordinates
        k = 2 * np.pi / self.grid.period
        return np.exp(1j * k * (self.spin.phase_x * x[:, None] + self.spin.phase_y * x[None, :]))

    @property
    def symbol_norm(self) -> np.ndarray:
        """``|q|`` at every shifted lattice mode; eigenvalues of ``D`` are ``+-|q|``."""
        qx, qy = self._q
        return np.hypot(qx, qy)

    def _symbol_apply(self, values: np.ndarray, inverse: bool = False) -> np.ndarray:
        qx, qy = self._q
        a = np.fft.fft2(values * np.conj(self._gauge), axes=(1, 2))
        out = np.empty_like(a)
        out[0] = (qx - 1j * qy) * a[1]
        out[1] = (qx + 1j * qy) * a[0]
        if inverse:
            q2 = qx**2 + qy**2
            zero = q2 <= (KERNEL_TOL * 2 * np.pi / self.grid.period) ** 2
            out /= np.where(zero, 1.0, q2)
            out[:, zero] = 0.0
        return np.fft.ifft2(out, axes=(1, 2)) * self._gauge

    def _check(self, phi: SpinorField) -> None:
        if phi.spin != self.spin:
            raise ValueError(f"spinor spin structure {phi.spin} does not match operator {self.spin}")
        if phi.values.shape[1:] != self.grid.shape:
            raise ValueError("spinor is not sampled on this grid")

    def pseudo_inverse(self, values: np.ndarray) -> np.ndarray:
        return self._symbol_apply(values, inverse=True)


def apply_dirac(op: DiracOperator, phi: SpinorField) -> SpinorField:
    op._check(phi)
    return SpinorField(op._symbol_apply(phi.values), phi.spin)


def constant_spinor(grid: TorusGrid, components=(1.0, 0.0), spin: SpinStructure = TRIVIAL_SPIN) -> SpinorField:
    vals = np.empty((2,) + grid.shape, dtype=complex)
    vals[0], vals[1] = components
    return SpinorField(vals, spin)


def kernel_dimension(
    op: DiracOperator,
    tol: float = KERNEL_TOL,
    factor: Optional[ConformalFactor] = None,
    *,
    seed: int = 0,
) -> int:
    """Number of eigenvalues with ``|lam| < tol * 2 pi / L``.

    Without a factor this is the flat operator, counted exactly from the
    symbol. With a factor, the kernel of the weighted pencil is the flat
    kernel (verified by residual) plus any eigenvalue of the deflated pencil
    that the Lanczos estimate puts inside the band.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    band = tol * 2 * np.pi / op.grid.period
    flat = 2 * int(np.count_nonzero(op.symbol_norm < band))
    if factor is None:
        return flat
    count = 0
    if op.spin.is_trivial:
        for comp in ((1.0, 0.0), (0.0, 1.0)):
            c = constant_spinor(op.grid, comp)
            res = np.linalg.norm(apply_dirac(op, c).values / factor.values) / np.linalg.norm(c.values)
            count += int(res < band)
    theta = _deflated_inverse_spectrum(op, factor, k=4, which="LM", seed=seed)
    count += int(np.count_nonzero(np.abs(theta) > 1.0 / band))
    return count


def _deflated_inverse(op: DiracOperator, factor: ConformalFactor, counter: list):
    s = np.sqrt(factor.values)
    shape = (2,) + op.grid.shape
    q = (s / np.linalg.norm(s)).ravel()
    deflate = op.spin.is_trivial

    def proj(w):
        w = w.reshape(2, -1)
        if deflate:
            w = w - np.outer(w @ q, q)
        return w

    def matvec(w):
        counter[0] += 1
        w = proj(np.asarray(w, dtype=complex)).reshape(shape) * s
        v = op.pseudo_inverse(w) * s
        return proj(v.reshape(2, -1)).ravel()

    n = 2 * op.grid.size
    return LinearOperator((n, n), matvec=matvec, dtype=complex), s


def _deflated_inverse_spectrum(op, factor, k=4, which="LM", seed=0) -> np.ndarray:
    counter = [0]
    sop, _ = _deflated_inverse(op, factor, counter)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(sop.shape[0]) + 1j * rng.standard_normal(sop.shape[0])
    return eigsh(sop, k=k, which=which, tol=1e-10, v0=v0, return_eigenvectors=False)


def _dirac_matrix(op: DiracOperator) -> np.ndarray:
    n2 = 2 * op.grid.size
    eye = np.eye(n2, dtype=complex).reshape((n2, 2) + op.grid.shape)
    cols = np.stack([op._symbol_apply(e).ravel() for e in eye], axis=1)
    return 0.5 * (cols + cols.conj().T)


def weighted_dirac_spectrum(op: DiracOperator, factor: ConformalFactor) -> np.ndarray:
    """All eigenvalues of ``(D, diag(f))`` from the dense FFT-built matrix (small grids only)."""
    if op.grid.nodes_per_axis > DENSE_DIRAC_MAX_N:
        raise GridTooLargeError(f"dense Dirac spectrum refuses n={op.grid.nodes_per_axis} > {DENSE_DIRAC_MAX_N}")
    fb = np.concatenate([factor.values.ravel()] * 2)
    return scipy.linalg.eigh(_dirac_matrix(op), np.diag(fb), eigvals_only=True)


def _finish(op, factor, phi_vals, lam, iterations, solver) -> SpectralResult:
    f = factor.values
    norm = np.sqrt(integrate(np.sum(np.abs(phi_vals) ** 2, axis=0) * f, op.grid))
    phi_vals = phi_vals / norm
    flat = phi_vals.ravel()
    ref = flat[np.argmax(np.abs(flat))]
    phi_vals = phi_vals * (abs(ref) / ref)
    phi = SpinorField(phi_vals, op.spin)
    dphi = op._symbol_apply(phi_vals)
    bphi = f[None] * phi_vals
    residual = float(np.linalg.norm(dphi - lam * bphi) / (abs(lam) * np.linalg.norm(bphi)))
    return SpectralResult(float(lam), phi, residual, int(iterations), solver, {"weighted_l2_norm": 1.0})


def first_positive_weighted_eigenvalue(
    op: DiracOperator,
    factor: ConformalFactor,
    tol: float = 1e-10,
    *,
    method: str = "auto",
    seed: int = 0,
    nev: int = 6,
    kernel_tol: float = KERNEL_TOL,
    maxiter: Optional[int] = None,
) -> SpectralResult:
    """Smallest positive eigenvalue of the pencil ``(D, diag(f))``.

    The Lanczos route runs on ``Q f^{1/2} D^+ f^{1/2} Q`` with ``Q`` removing
    the weighted harmonic spinors ``f^{1/2} psi_0`` of the trivial structure.
    The eigenspinor is normalized by ``int |phi|^2 f = 1``.
    """
    grid = op.grid
    if factor.values.shape != grid.shape or np.any(factor.values <= 0):
        raise ValueError("factor must be positive and sampled on the operator grid")
    band = kernel_tol * 2 * np.pi / grid.period
    if method == "auto":
        method = "dense" if grid.nodes_per_axis <= AUTO_DENSE_MAX_N else "lanczos"

    if method == "dense":
        a = _dirac_matrix(op)
        fb = np.concatenate([factor.values.ravel()] * 2)
        vals, vecs = scipy.linalg.eigh(a, np.diag(fb))
        pos = np.flatnonzero(vals > band)
        if pos.size == 0:
            raise ResolutionError("no eigenvalue above the kernel band; increase n")
        i = pos[0]
        result = _finish(op, factor, vecs[:, i].reshape((2,) + grid.shape), vals[i], 1, "dense-eigh")
    elif method == "lanczos":
        counter = [0]
        sop, s = _deflated_inverse(op, factor, counter)
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(sop.shape[0]) + 1j * rng.standard_normal(sop.shape[0])
        try:
            theta, vecs = eigsh(
                sop, k=min(nev, sop.shape[0] - 2), which="LA",
                tol=min(tol * 1e-2, 1e-12), v0=v0, maxiter=maxiter,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge after {counter[0]} operator products"
            ) from exc
        ok = np.flatnonzero((theta > 0) & (theta < 1.0 / band))
        if ok.size == 0:
            raise ResolutionError("all computed eigenvalues lie in the kernel band; increase n")
        i = ok[np.argmax(theta[ok])]
        w = vecs[:, i].reshape((2,) + grid.shape)
        result = _finish(op, factor, w / s, 1.0 / theta[i], counter[0], "lanczos-deflated-inverse")
        result.diagnostics["ritz_values"] = sorted((1.0 / theta[theta > 0]).tolist())
    else:
        raise ValueError(f"unknown method {method!r}")

    if not result.residual <= tol:
        raise ConvergenceError(
            f"weighted Dirac residual {result.residual:.3e} exceeds tol {tol:.1e}", result.residual
        )
    return result


def rayleigh_quotient_J(phi: SpinorField, factor: ConformalFactor, op: DiracOperator) -> float:
    """``int |D phi|^2 f^{-1} / int <D phi, phi>``; the denominator must be positive."""
    dphi = apply_dirac(op, phi).values
    den = integrate(np.real(pointwise_inner(dphi, phi.values)), op.grid)
    if not den > 0:
        raise AdmissibilityError(f"int <D phi, phi> = {den:.3e} is not positive")
    num = integrate(np.sum(np.abs(dphi) ** 2, axis=0) / factor.values, op.grid)
    return num / den


def conformal_push(phi: SpinorField, factor: ConformalFactor) -> SpinorField:
    """Identify a spinor for ``g`` with one for ``f^2 g``: ``phi -> f^{-1/2} phi``."""
    if factor.kind == "bump":
        raise ValueError("conformal_push needs a smooth factor; mollify the bump first")
    return SpinorField(phi.values / np.sqrt(factor.values)[None], phi.spin)


def conformal_dirac(op: DiracOperator, phi: SpinorField, factor: ConformalFactor) -> SpinorField:
    """Dirac operator of ``f^2 g`` in flat coordinates: ``f^{-1} (D phi + 1/2 grad(ln f) . phi)``."""
    dphi = apply_dirac(op, phi).values
    glog = gradient(np.log(factor.values), op.grid)
    out = (dphi + 0.5 * clifford(glog, phi.values)) / factor.values[None]
    return SpinorField(out, phi.spin)


def covariance_residual(op: DiracOperator, psi: SpinorField, factor: ConformalFactor) -> float:
    """Relative mismatch in ``D_{f^2 g}(f^{-1/2} psi) = f^{-3/2} D_g psi``."""
    lhs = conformal_dirac(op, conformal_push(psi, factor), factor).values
    rhs = apply_dirac(op, psi).values / factor.values[None] ** 1.5
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


def _shifted_first_derivative(n: int, period: float, phase: float) -> np.ndarray:
    """Explicit matrix of ``-i d/dx`` on modes ``k + phase``, ``k = -n/2 .. n/2-1``."""
    x = np.arange(n) * period / n
    q = 2 * np.pi / period * (np.arange(-n // 2, n // 2) + phase)
    dx = x[:, None] - x[None, :]
    return np.einsum("k,jlk->jl", q, np.exp(1j * dx[:, :, None] * q[None, None, :])) / n


def dense_dirac_oracle(
    factor: ConformalFactor, grid: TorusGrid, spin: SpinStructure, count: int
) -> list[float]:
    """``count`` smallest-magnitude eigenvalues of ``(D, diag(f))``, sorted by ``(|lam|, sign)``.

    Built from explicit exponential sums, independent of the FFT path. In the
    spinor splitting ``D = [[0, A], [A^*, 0]]`` with ``A = P_1 - i P_2`` and the
    weight acts diagonally, so the pencil eigenvalues are exactly
    ``+-`` the singular values of ``f^{-1/2} A f^{-1/2}``.
    """
    n = grid.nodes_per_axis
    if n > DENSE_DIRAC_MAX_N:
        raise GridTooLargeError(f"dense Dirac oracle refuses n={n} > {DENSE_DIRAC_MAX_N}")
    eye = np.eye(n)
    p1 = np.kron(_shifted_first_derivative(n, grid.period, spin.phase_x), eye)
    p2 = np.kron(eye, _shifted_first_derivative(n, grid.period, spin.phase_y))
    w = 1.0 / np.sqrt(factor.values.ravel())
    sv = scipy.linalg.svdvals(w[:, None] * (p1 - 1j * p2) * w[None, :])
    vals = sorted(np.concatenate([sv, -sv]), key=lambda v: (float(f"{abs(v):.10g}"), np.sign(v)))
    return [float(v) for v in vals[:count]]

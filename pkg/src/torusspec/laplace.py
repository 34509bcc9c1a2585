"""Weighted Laplace eigenproblem ``Delta u = mu f^2 u`` on the flat torus.

The sign convention is ``Delta = -(d_1^2 + d_2^2) >= 0``, so that
``int (Delta u) u = int |grad u|^2``.

The iterative solver works on the deflated, symmetrized inverse

    S = Q F Delta^+ F Q,      Q = I - f f^T / |f|^2,   F = diag(f),

whose nonzero eigenvalues are ``1 / mu`` with eigenvectors ``w = f u``.
``Delta^+`` is diagonal in Fourier space, so a product with ``S`` costs two
FFTs, and the badly scaled pencil (``f^2`` spans many decades for small
``eps``) never has to be factorized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError, DegenerateFieldError, GridTooLargeError
from .geometry import ConformalFactor, TorusGrid, integrate
from .spectral import SCHEMES, gradient_energy, laplacian_symbol

DENSE_LAPLACE_MAX_N = 48
# ``method="auto"`` switches to Lanczos above this size (dense is O(n^6))
AUTO_DENSE_MAX_N = 16


@dataclass(frozen=True)
class LaplaceOperator:
    grid: TorusGrid
    scheme: str = "fourier-spectral"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")

    @property
    def symbol(self) -> np.ndarray:
        return laplacian_symbol(self.grid, self.scheme)

    def pseudo_inverse(self, v: np.ndarray) -> np.ndarray:
        """Mean-zero solution of ``Delta x = v - mean(v)``."""
        sym = self.symbol
        inv = np.zeros_like(sym)
        inv[sym > 0] = 1.0 / sym[sym > 0]
        return np.real(np.fft.ifft2(np.fft.fft2(v) * inv))


@dataclass
class SpectralResult:
    """Converged eigenpair plus solver diagnostics.

    ``residual`` is the relative pencil residual ``|A u - lam B u| / (|lam| |B u|)``.
    """

    eigenvalue: float
    eigenfunction: object
    residual: float
    iterations: int
    solver: str
    diagnostics: dict = field(default_factory=dict)


def apply_laplacian(op: LaplaceOperator, u: np.ndarray) -> np.ndarray:
    if u.shape != op.grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {op.grid.shape}")
    if op.scheme == "five-point":
        h2 = op.grid.spacing**2
        return (
            4 * u
            - np.roll(u, 1, 0)
            - np.roll(u, -1, 0)
            - np.roll(u, 1, 1)
            - np.roll(u, -1, 1)
        ) / h2
    return np.real(np.fft.ifft2(op.symbol * np.fft.fft2(u)))


def rayleigh_quotient_I(
    u: np.ndarray, factor: ConformalFactor, grid: TorusGrid, scheme: str = "fourier-spectral"
) -> float:
    """``int |grad u|^2 / int u^2 f^2``."""
    den = integrate(u**2 * factor.values**2, grid)
    if not den > 0:
        raise DegenerateFieldError("u vanishes on the grid; Rayleigh quotient undefined")
    return gradient_energy(u, grid, scheme) / den


def weighted_mean(u: np.ndarray, factor: ConformalFactor, grid: TorusGrid) -> float:
    """``int u f^2 dv_g``."""
    return integrate(u * factor.values**2, grid)


def _check_factor(factor: ConformalFactor, grid: TorusGrid) -> None:
    if factor.values.shape != grid.shape:
        raise ValueError("factor is not sampled on this grid")
    if np.any(factor.values <= 0):
        raise ValueError("conformal factor must be strictly positive")


def _finish(op, factor, u, mu, iterations, solver) -> SpectralResult:
    grid = op.grid
    f2 = factor.values**2
    u = u / np.sqrt(integrate(u**2 * f2, grid))
    # deterministic sign: largest-magnitude node positive
    u = u * np.sign(u.flat[np.argmax(np.abs(u))])
    lhs = apply_laplacian(op, u)
    residual = float(np.linalg.norm(lhs - mu * f2 * u) / (abs(mu) * np.linalg.norm(f2 * u)))
    diag = {
        "weighted_l2_norm": 1.0,
        "h1_norm": float(np.sqrt(integrate(u**2, grid) + gradient_energy(u, grid, op.scheme))),
        "weighted_mean": weighted_mean(u, factor, grid),
    }
    return SpectralResult(float(mu), u, residual, int(iterations), solver, diag)


def _laplace_matrix(op: LaplaceOperator) -> np.ndarray:
    """Dense matrix of the discrete Laplacian via its action on unit vectors."""
    n = op.grid.nodes_per_axis
    eye = np.eye(n * n).reshape(n * n, n, n)
    sym = op.symbol
    cols = np.real(np.fft.ifft2(sym[None] * np.fft.fft2(eye, axes=(1, 2)), axes=(1, 2)))
    mat = cols.reshape(n * n, n * n).T
    return 0.5 * (mat + mat.T)


def first_weighted_eigenvalue(
    op: LaplaceOperator,
    factor: ConformalFactor,
    tol: float = 1e-10,
    *,
    method: str = "auto",
    seed: int = 0,
    nev: int = 6,
    maxiter: Optional[int] = None,
) -> SpectralResult:
    """Smallest positive eigenvalue of the pencil ``(Delta, diag(f^2))``.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    ``n = 16``). The returned eigenfunction is normalized by
    ``int u^2 f^2 = 1`` and is weighted-mean-zero up to the solver tolerance.
    """
    grid = op.grid
    _check_factor(factor, grid)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "auto":
        method = "dense" if grid.nodes_per_axis <= AUTO_DENSE_MAX_N else "lanczos"

    f = factor.values.ravel()
    if method == "dense":
        a = _laplace_matrix(op)
        vals, vecs = scipy.linalg.eigh(a, np.diag(f**2), subset_by_index=[0, 1])
        result = _finish(op, factor, vecs[:, 1].reshape(grid.shape), vals[1], 1, "dense-eigh")
    elif method == "lanczos":
        q = f / np.linalg.norm(f)
        count = [0]

        def matvec(w):
            count[0] += 1
            w = np.ravel(w)
            w = w - q * (q @ w)
            v = f * op.pseudo_inverse((f * w).reshape(grid.shape)).ravel()
            return v - q * (q @ v)

        sop = LinearOperator((f.size, f.size), matvec=matvec, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(f.size)
        k = min(nev, f.size - 2)
        try:
            theta, vecs = eigsh(sop, k=k, which="LA", tol=min(tol * 1e-2, 1e-12), v0=v0, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge after {count[0]} operator products", float("nan")
            ) from exc
        i = int(np.argmax(theta))
        u = (vecs[:, i] / f).reshape(grid.shape)
        result = _finish(op, factor, u, 1.0 / theta[i], count[0], "lanczos-deflated-inverse")
        result.diagnostics["ritz_values"] = sorted((1.0 / theta[theta > 0]).tolist())
    else:
        raise ValueError(f"unknown method {method!r}")

    if not result.residual <= tol:
        raise ConvergenceError(
            f"weighted Laplace residual {result.residual:.3e} exceeds tol {tol:.1e}", result.residual
        )
    return result


def dense_laplace_oracle(
    factor: ConformalFactor, grid: TorusGrid, count: int, scheme: str = "fourier-spectral"
) -> list[float]:
    """``count`` smallest eigenvalues of ``(Delta, diag(f^2))`` by dense LAPACK.

    The Laplacian matrix is assembled from the closed-form periodic
    differentiation matrix (spectral) or the 5-point stencil, without FFTs.
    """
    n = grid.nodes_per_axis
    if n > DENSE_LAPLACE_MAX_N:
        raise GridTooLargeError(f"dense Laplace oracle refuses n={n} > {DENSE_LAPLACE_MAX_N}")
    _check_factor(factor, grid)
    if scheme == "fourier-spectral":
        d2 = _periodic_second_derivative(n, grid.period)
    elif scheme == "five-point":
        h = grid.spacing
        d2 = (2 * np.eye(n) - np.roll(np.eye(n), 1, 0) - np.roll(np.eye(n), -1, 0)) / h**2
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    eye = np.eye(n)
    a = np.kron(d2, eye) + np.kron(eye, d2)
    b = np.diag(factor.values.ravel() ** 2)
    vals = scipy.linalg.eigh(a, b, eigvals_only=True, subset_by_index=[0, count - 1])
    return sorted(float(v) for v in vals)


def _periodic_second_derivative(n: int, period: float) -> np.ndarray:
    """Matrix of ``-d^2/dx^2`` for the even-``n`` trigonometric interpolant."""
    h = 2 * np.pi / n
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    with np.errstate(divide="ignore"):
        off = 0.5 * (-1.0) ** diff / np.sin(diff * h / 2) ** 2
    mat = np.where(diff == 0, np.pi**2 / (3 * h**2) + 1.0 / 6.0, off)
    return mat * (2 * np.pi / period) ** 2

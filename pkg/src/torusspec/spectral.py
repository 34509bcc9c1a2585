"""Fourier symbols and spectral derivatives on the periodic grid."""

from __future__ import annotations

import numpy as np

from .geometry import TorusGrid

SCHEMES = ("fourier-spectral", "five-point")


def wavenumbers(grid: TorusGrid, shift: float = 0.0) -> np.ndarray:
    """Angular wavenumbers ``(2 pi / L) (k + shift)`` in FFT order.

    ``k`` runs over ``-n/2 .. n/2 - 1``; the Nyquist mode is kept at ``-n/2``.
    """
    n = grid.nodes_per_axis
    k = np.fft.fftfreq(n, d=1.0 / n)
    return 2 * np.pi / grid.period * (k + shift)


def laplacian_symbol(grid: TorusGrid, scheme: str = "fourier-spectral") -> np.ndarray:
    """Nonnegative symbol of ``-(d_1^2 + d_2^2)`` on the 2D FFT lattice."""
    k = wavenumbers(grid)
    if scheme == "fourier-spectral":
        s1 = k**2
    elif scheme == "five-point":
        h = grid.spacing
        s1 = (2.0 / h * np.sin(k * h / 2)) ** 2
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return s1[:, None] + s1[None, :]


def gradient(u: np.ndarray, grid: TorusGrid) -> tuple[np.ndarray, np.ndarray]:
    """Spectral gradient of a real periodic field (Nyquist derivative zeroed)."""
    n = grid.nodes_per_axis
    k = wavenumbers(grid)
    k[n // 2] = 0.0
    uh = np.fft.fft2(u)
    dx = np.real(np.fft.ifft2(1j * k[:, None] * uh))
    dy = np.real(np.fft.ifft2(1j * k[None, :] * uh))
    return dx, dy


def gradient_energy(u: np.ndarray, grid: TorusGrid, scheme: str = "fourier-spectral") -> float:
    """``int |grad u|^2`` via Parseval with the same symbol as the Laplacian."""
    uh = np.fft.fft2(u)
    return float(grid.spacing**2 * np.sum(laplacian_symbol(grid, scheme) * np.abs(uh) ** 2) / u.size)


def band_limited_field(
    grid: TorusGrid, degree: int, rng: np.random.Generator, components: int = 0
) -> np.ndarray:
    """Random real trigonometric polynomial with all modes ``|k_i| <= degree``.

    With ``components > 0`` a complex array of that many leading components is
    returned instead (for spinors).
    """
    n = grid.nodes_per_axis
    if 2 * degree >= n:
        raise ValueError("degree must stay below n/2")
    k = np.fft.fftfreq(n, d=1.0 / n)
    mask = (np.abs(k)[:, None] <= degree) & (np.abs(k)[None, :] <= degree)
    shape = (components,) + grid.shape if components else grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    field = np.fft.ifft2(coeffs * mask, axes=(-2, -1)) * n
    if components:
        return field
    return np.real(field)

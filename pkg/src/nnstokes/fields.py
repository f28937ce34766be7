"""Ready-made scalar densities and divergence-free velocities.

Everything here is deterministic given a seed. Random fields are built by
masking the transform of white noise, so they are real by construction and
band-limited exactly where claimed.
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    GridField,
    SpectralField,
    TorusGrid,
    VelocityField,
    k_squared,
    leray_project,
    to_grid,
    to_spectral,
)


def constant_field(grid: TorusGrid, c: float) -> GridField:
    return GridField(grid, np.full(grid.shape, float(c)))


def sine1_field(grid: TorusGrid, offset: float = 0.0, amp: float = 1.0) -> GridField:
    """offset + amp * sin(x1)."""
    return GridField(grid, offset + amp * np.sin(grid.coordinate(0)))


def sines2_field(grid: TorusGrid, offset: float = 1.0, a: float = 0.5, b: float = 0.25) -> GridField:
    """offset + a sin(x1) + b cos(2 x2), a smooth two-mode datum."""
    x1 = grid.coordinate(0)
    x2 = grid.coordinate(1)
    return GridField(grid, offset + a * np.sin(x1) + b * np.cos(2.0 * x2))


def stratified_field(grid: TorusGrid, offset: float = 2.0, amp: float = 0.5) -> GridField:
    """offset + amp * cos(x_d), a density depending on the last coordinate only."""
    return GridField(grid, offset + amp * np.cos(grid.coordinate(grid.d - 1)))


def _masked_noise(grid: TorusGrid, rng: np.random.Generator, mask: np.ndarray) -> GridField:
    white = rng.standard_normal(grid.shape)
    coeffs = to_spectral(GridField(grid, white, check=False)).coeffs * mask
    field = to_grid(SpectralField(grid, coeffs), check=False).values
    peak = np.abs(field).max()
    if peak > 0:
        field = field / peak
    return GridField(grid, field, check=False)


def random_band_field(grid: TorusGrid, seed, kmax: float, amplitude: float = 1.0,
                      offset: float = 0.0) -> GridField:
    """offset + amplitude * (random zero-mean field band-limited to |k| <= kmax,
    normalized to unit sup norm)."""
    rng = np.random.default_rng(seed)
    k2 = k_squared(grid)
    mask = (k2 > 0) & (k2 <= kmax * kmax)
    f = _masked_noise(grid, rng, mask)
    return GridField(grid, offset + amplitude * f.values)


def rough_field(grid: TorusGrid, seed, slope: float = -1.1, amplitude: float = 0.5,
                offset: float = 1.0) -> GridField:
    """offset + amplitude * (zero-mean field with power-law coefficient decay
    |k|^slope and random phases, normalized to unit sup norm)."""
    rng = np.random.default_rng(seed)
    k2 = k_squared(grid)
    with np.errstate(divide="ignore"):
        envelope = np.where(k2 > 0, np.sqrt(k2), 1.0) ** slope
    envelope = np.where(k2 > 0, envelope, 0.0)
    f = _masked_noise(grid, rng, envelope)
    return GridField(grid, offset + amplitude * f.values)


def random_velocity(grid: TorusGrid, seed, kmax: float, amplitude: float = 1.0) -> VelocityField:
    """Divergence-free zero-mean velocity with random band-limited components."""
    rng = np.random.default_rng(seed)
    k2 = k_squared(grid)
    mask = (k2 > 0) & (k2 <= kmax * kmax)
    comps = []
    for _ in range(grid.d):
        f = _masked_noise(grid, rng, mask)
        comps.append(to_spectral(GridField(grid, amplitude * f.values, check=False)))
    return leray_project(comps)

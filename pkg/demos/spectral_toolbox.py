"""Tour of the spectral toolbox: transforms, projection, dyadic analysis.

Run from the repository root after installing the package:

    python3 demos/spectral_toolbox.py
"""

import numpy as np

from nnstokes import (
    GridField,
    TorusGrid,
    bernstein_ratio,
    besov_norm,
    j_max,
    lebesgue_norm,
    leray_project,
    lp_block,
    partial_derivative,
    to_grid,
    to_spectral,
)
from nnstokes.fields import rough_field

grid = TorusGrid(2, 64)
print(f"grid: {grid.d}D torus, {grid.n} points per axis, spacing h = {grid.h:.4f}")

# A smooth field and its exact derivative.
x1 = grid.coordinate(0)
f = GridField(grid, np.sin(x1))
F = to_spectral(f)
dF = partial_derivative(F, 0)
err = np.abs(to_grid(dF).values - np.cos(x1)).max()
print(f"d/dx1 sin(x1) vs cos(x1): sup error {err:.2e}")

# Leray projection kills gradients and fixes divergence-free fields.
grad = [partial_derivative(F, 0), partial_derivative(F, 1)]
proj = leray_project(grad)
residue = max(np.abs(c.coeffs).max() for c in proj.components)
print(f"projection of a gradient: residue {residue:.2e}")

# Dyadic decomposition reconstructs the field.
rough = rough_field(grid, seed=42, slope=-1.5, amplitude=1.0, offset=0.5)
R = to_spectral(rough)
total = np.zeros(grid.shape, dtype=np.complex128)
for j in range(-1, j_max(grid) + 1):
    total += lp_block(R, j).coeffs
recon = np.abs(total - R.coeffs).max() / np.abs(R.coeffs).max()
print(f"dyadic reconstruction defect {recon:.2e}")

# Bernstein ratios compare the L2 mass of a block's derivative against
# the block itself, normalized by the block scale 2^j.
zero_mean = R
zero_mean.coeffs.flat[0] = 0.0
for j in range(0, 4):
    print(f"block {j}: bernstein ratio {bernstein_ratio(zero_mean, j, 2):.3f}")

# Norms: Lebesgue and Besov scales on the same field.
print(f"L2 norm        {lebesgue_norm(rough, 2):.4f}")
print(f"L4 norm        {lebesgue_norm(rough, 4):.4f}")
print(f"B^0.5_{{2,2}}    {besov_norm(R, 0.5, 2, 2):.4f}")
print(f"B^1_{{2,inf}}    {besov_norm(R, 1.0, 2, np.inf):.4f}")

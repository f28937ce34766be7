"""Classify exponent packs and illustrate the Besov embedding constant.

The scaling index Q = (1/p)(1 + gamma/sigma) + 1/q - 1/d sorts parameter
packs into SubCritical (Q < 1), Critical (Q = 1 with q above the floor
2d/(d+2)), and Inadmissible (everything else).

    python3 demos/exponent_classes.py
"""

from nnstokes import FluidParams, TorusGrid, besov_norm, classify_exponents, to_spectral
from nnstokes.fields import rough_field

packs = [
    dict(p=2.0, q=1.5, d=2),
    dict(p=2.0, q=1.2, d=3),
    dict(p=3.0, q=1.2, sigma=1.0, gamma=1.0, d=2),
    dict(p=1.5, q=1.4, d=3),
    dict(p=1.1, q=1.9, sigma=1.0, gamma=2.0, d=2),
]

print(f"{'p':>5} {'q':>5} {'sigma':>6} {'gamma':>6} {'d':>2}   "
      f"{'Q':>8} {'floor':>6}  class")
for kwargs in packs:
    params = FluidParams(**kwargs)
    v = classify_exponents(params)
    print(f"{params.p:5.2f} {params.q:5.2f} {params.sigma:6.2f} "
          f"{params.gamma:6.2f} {params.d:2d}   {v.Q:8.4f} {v.q_floor:6.3f}  "
          f"{v.label}")

# The embedding into a lower-regularity, higher-integrability Besov space
# holds with a uniform constant when s2 = s1 - d(1/q1 - 1/q2).
grid = TorusGrid(2, 64)
s1, q1, q2, r = 1.0, 2.0, 4.0, 2.0
s2 = s1 - grid.d * (1.0 / q1 - 1.0 / q2)
print(f"\nembedding B^{s1:g}_{{{q1:g},{r:g}}} -> B^{s2:g}_{{{q2:g},{r:g}}}")
for seed in (7, 8, 9):
    f = to_spectral(rough_field(grid, seed=seed, slope=-1.2, amplitude=1.0,
                                offset=0.3))
    c = besov_norm(f, s2, q2, r) / besov_norm(f, s1, q1, r)
    print(f"  seed {seed}: norm ratio {c:.4f}")

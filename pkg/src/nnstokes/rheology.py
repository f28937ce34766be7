"""Viscosity laws and the shear-dependent viscous stress.

The stress kernel is

    S[rho, u] = nu(rho) (delta^2 + |Du|^2)^{(p-2)/2} Du,

with |Du| the Frobenius norm of the symmetric strain. At delta = 0 this is
the exact power law nu(rho) |Du|^{p-2} Du; the offset delta > 0 restores
differentiability at Du = 0 when p < 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import GridField


@dataclass(frozen=True)
class FluidParams:
    """Exponent and forcing pack for one fluid configuration.

    p is the power-law exponent (> 1), q the density integrability
    exponent (in the open interval (1, 2)), sigma the reciprocal-density
    exponent (in [1, inf]), gamma the degeneracy exponent of the viscosity
    lower bound, nu_star and nu_max the viscosity bounds, g the constant
    gravity vector, d the dimension, and delta the strain regularization
    offset. The derived exponent beta satisfies
    1/beta = (1/p)(1 + gamma/sigma); packs with beta <= 1 are representable
    so the classifier can see them, and they always classify inadmissible.
    """

    p: float
    q: float
    sigma: float = math.inf
    gamma: float = 0.0
    nu_star: float = 1.0
    nu_max: float = 1.0
    g: tuple = None
    d: int = 2
    delta: float = 0.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not (1 < self.q < 2):
            raise ValueError(f"q must lie in (1, 2), got {self.q}")
        if not self.sigma >= 1:
            raise ValueError(f"sigma must be >= 1, got {self.sigma}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.nu_star > 0:
            raise ValueError(f"nu_star must be positive, got {self.nu_star}")
        if self.nu_max < self.nu_star:
            raise ValueError("nu_max must be >= nu_star")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        raw = self.g if self.g is not None else (0.0,) * (self.d - 1) + (-1.0,)
        g = tuple(float(c) for c in raw)
        if len(g) != self.d or not all(math.isfinite(c) for c in g):
            raise ValueError(f"g must be a finite vector of length {self.d}")
        object.__setattr__(self, "g", g)

    def _gamma_over_sigma(self) -> float:
        if np.isinf(self.sigma):
            return 0.0
        return self.gamma / self.sigma

    @property
    def beta(self) -> float:
        return 1.0 / ((1.0 / self.p) * (1.0 + self._gamma_over_sigma()))

    @property
    def gamma_bar(self) -> float:
        return min(1.0, self.gamma)


@dataclass(frozen=True)
class ViscosityLaw:
    """Scalar viscosity as a function of the density value.

    kind is one of constant, power, bounded_power, user_table. The law is
    even in its argument (only |r| matters).
    """

    kind: str
    coef: float = 1.0
    exponent: float = 0.0
    cap: float = math.inf
    table_r: tuple = field(default=())
    table_nu: tuple = field(default=())

    def __call__(self, r) -> np.ndarray:
        a = np.abs(np.asarray(r, dtype=np.float64))
        if self.kind == "constant":
            return np.full_like(a, self.coef)
        if self.kind == "power":
            return self.coef * a ** self.exponent
        if self.kind == "bounded_power":
            return np.minimum(self.cap, self.coef * a ** self.exponent)
        if self.kind == "user_table":
            return np.interp(a, self.table_r, self.table_nu)
        raise ValueError(f"unknown viscosity kind {self.kind!r}")


def constant_law(nu0: float) -> ViscosityLaw:
    if nu0 < 0:
        raise ValueError("viscosity must be nonnegative")
    return ViscosityLaw("constant", coef=nu0)


def power_law(coef: float, exponent: float) -> ViscosityLaw:
    if coef < 0 or exponent < 0:
        raise ValueError("power law needs nonnegative coefficient and exponent")
    return ViscosityLaw("power", coef=coef, exponent=exponent)


def bounded_power_law(coef: float, exponent: float, cap: float) -> ViscosityLaw:
    if coef < 0 or exponent < 0 or cap <= 0:
        raise ValueError("bounded power law needs nonnegative parameters, positive cap")
    return ViscosityLaw("bounded_power", coef=coef, exponent=exponent, cap=cap)


def table_law(r_nodes, nu_values) -> ViscosityLaw:
    r = tuple(float(x) for x in r_nodes)
    v = tuple(float(x) for x in nu_values)
    if len(r) != len(v) or len(r) < 2:
        raise ValueError("table law needs matching node and value sequences")
    if any(b <= a for a, b in zip(r, r[1:])):
        raise ValueError("table nodes must be strictly increasing")
    if any(x < 0 for x in v):
        raise ValueError("table viscosities must be nonnegative")
    return ViscosityLaw("user_table", table_r=r, table_nu=v)


def check_law(law: ViscosityLaw, params: FluidParams, samples: int = 400) -> list:
    """Sampled consistency check of a law against a parameter pack.

    Verifies 0 <= nu <= nu_max on a wide range, the degeneracy lower bound
    nu(|r|) >= nu_star |r|^gamma for |r| <= 1, and Holder continuity of
    order min(1, gamma) on [0.01, 10]. Returns a list of violation
    messages, empty when the law is consistent.
    """
    problems = []
    r = np.concatenate([[0.0], np.logspace(-6, 3, samples)])
    nu = law(r)
    if np.any(nu < 0):
        problems.append("law takes negative values")
    if np.any(nu > params.nu_max * (1 + 1e-12)):
        problems.append(f"law exceeds nu_max = {params.nu_max} (max {nu.max():.6g})")
    small = r[(r > 0) & (r <= 1.0)]
    lower = params.nu_star * small ** params.gamma
    if np.any(law(small) < lower * (1 - 1e-12)):
        problems.append("law falls below nu_star |r|^gamma on |r| <= 1")
    a = np.linspace(0.01, 10.0, samples)
    na = law(a)
    gb = params.gamma_bar
    if gb > 0:
        diffs = np.abs(np.diff(na))
        steps = np.diff(a) ** gb
        ratio = diffs / steps
        holder = float(ratio.max()) if ratio.size else 0.0
        # a finite sampled Holder constant; explode only on genuine jumps
        if not np.isfinite(holder) or holder > 1e6:
            problems.append("law is not Holder continuous of order gamma_bar on [0.01, 10]")
    return problems


# ---------------------------------------------------------------------------
# pointwise kernels on strain arrays of shape (d, d) + grid.shape

def strain_magnitude_sq(Du: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm, summed over both tensor axes."""
    return np.einsum("ij...,ij...->...", Du, Du)


def _power_factor(mag2: np.ndarray, p: float, delta: float) -> np.ndarray:
    """(delta^2 + |Du|^2)^{(p-2)/2}, with the p < 2, delta = 0 limit taken
    as zero where the strain vanishes (the stress limit there is zero)."""
    base = delta * delta + mag2
    if p >= 2 or delta > 0:
        return base ** ((p - 2.0) / 2.0)
    with np.errstate(divide="ignore"):
        out = np.where(mag2 > 0, mag2, 1.0) ** ((p - 2.0) / 2.0)
    return np.where(mag2 > 0, out, 0.0)


def viscosity_eval(law: ViscosityLaw, rho: GridField) -> GridField:
    """Pointwise nu(rho)."""
    return GridField(rho.grid, law(rho.values), check=False)


def stress(law: ViscosityLaw, params: FluidParams, rho: GridField, Du: np.ndarray) -> np.ndarray:
    """Viscous stress nu(rho) (delta^2 + |Du|^2)^{(p-2)/2} Du."""
    nu = law(rho.values)
    factor = nu * _power_factor(strain_magnitude_sq(Du), params.p, params.delta)
    return factor[np.newaxis, np.newaxis] * Du


def dissipation_density(law: ViscosityLaw, params: FluidParams, rho: GridField, Du: np.ndarray) -> GridField:
    """Pointwise nu(rho) (delta^2 + |Du|^2)^{(p-2)/2} |Du|^2, the integrand
    whose integral balances the work of the forcing at a minimizer."""
    nu = law(rho.values)
    mag2 = strain_magnitude_sq(Du)
    vals = nu * _power_factor(mag2, params.p, params.delta) * mag2
    return GridField(rho.grid, vals, check=False)

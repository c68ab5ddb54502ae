"""Closed-form collapse/revival analytics for a coherent initial field.

The harmonic S(t, m*omega) is obtained by replacing mu -> m * omega t e^{-alpha^2/2}
while f, alpha, |z|, mu_k and h_k stay fixed.  That reading is what makes the
second and third harmonics revive two and three times per fundamental period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import ModelParams

EQUILIBRIUM = 10 / 32
HARMONIC_WEIGHTS = {1: 15, 2: 6, 3: 1}


@dataclass(frozen=True)
class RevivalParams:
    f: float
    alpha: float
    z_abs: float
    omega: float

    def mu(self, t, mharm: int = 1):
        return mharm * self.omega * np.asarray(t, dtype=float) * math.exp(-self.alpha**2 / 2)

    def mu_k(self, k: int) -> float:
        if k == 0:
            return 0.0
        if self.alpha == 0:
            return math.inf
        return math.pi * k * (self.f + 2) / self.alpha**2

    def h_k(self, k: int) -> float:
        return (1 + (math.pi * k * self.f) ** 2) ** -0.25

    def delta_mu_k(self, k: int) -> float:
        if self.alpha == 0 or self.z_abs == 0:
            return math.inf
        return math.sqrt(1 + (math.pi * k * self.f) ** 2) / (self.z_abs * self.alpha**2)


def revival_params(z: complex, params: ModelParams) -> RevivalParams:
    return RevivalParams(abs(params.alpha * z) ** 2, params.alpha, abs(z), params.omega)


def _check_harmonic(mharm: int) -> None:
    if mharm not in HARMONIC_WEIGHTS:
        raise ValueError(f"harmonic index must be 1, 2 or 3, got {mharm}")


def revival_term(k: int, t, mharm: int, z: complex, params: ModelParams):
    """S_k(t, m omega) = h_k exp(Phi_Re + i Phi_Im)."""
    _check_harmonic(mharm)
    if k < 0:
        raise ValueError(f"revival index must be >= 0, got {k}")
    rp = revival_params(z, params)
    mu = rp.mu(t, mharm)
    h = rp.h_k(k)
    mu_k = rp.mu_k(k)
    if math.isinf(mu_k):
        return np.zeros_like(mu, dtype=complex)
    phi_re = -0.5 * h**4 * (mu - mu_k) ** 2 * rp.f * rp.alpha**2
    phi_im = 0.5 * math.atan(math.pi * k * rp.f) + mu * (1 - rp.f) + 2 * math.pi * k * rp.z_abs**2
    return h * np.exp(phi_re + 1j * phi_im)


def auto_k_max(t, mharm: int, z: complex, params: ModelParams) -> int:
    rp = revival_params(z, params)
    if rp.alpha == 0:
        return 0
    mu_max = float(np.max(rp.mu(t, mharm)))
    return int(math.ceil(mu_max * rp.alpha**2 / (math.pi * (rp.f + 2)))) + 3


def revival_sum(t, mharm: int, z: complex, params: ModelParams, k_max: int | None = None):
    """S(t, m omega) = sum_k S_k(t, m omega) for k = 0..k_max."""
    if k_max is None:
        k_max = auto_k_max(t, mharm, z, params)
    return sum(revival_term(k, t, mharm, z, params) for k in range(k_max + 1))


@dataclass(frozen=True)
class AnalyticPopulation:
    values: np.ndarray  # clipped to [0, 1]
    raw: np.ndarray
    clipped: bool
    regime_violation: bool  # raw left [-0.02, 1.02]


def population_analytic(z: complex, t, params: ModelParams, k_max: int | None = None, full_output: bool = False):
    """P_1(z, t) = Re[10 + 15 S(t,w) + 6 S(t,2w) + S(t,3w)] / 32.

    With ``full_output`` an :class:`AnalyticPopulation` carrying the clipping
    diagnostics is returned instead of the bare array.
    """
    total = 10.0 + sum(w * revival_sum(t, m, z, params, k_max) for m, w in HARMONIC_WEIGHTS.items())
    raw = np.real(total) / 32
    values = np.clip(raw, 0.0, 1.0)
    if not full_output:
        return values
    return AnalyticPopulation(
        values,
        raw,
        bool(np.any(values != raw)),
        bool(np.any((raw < -0.02) | (raw > 1.02))),
    )


def revival_schedule(k: int, mharm: int, z: complex, params: ModelParams) -> tuple[float, float]:
    """(center, width) of the k-th revival of harmonic ``mharm``, in units of 1/omega_c."""
    _check_harmonic(mharm)
    rp = revival_params(z, params)
    if params.omega == 0:
        return math.inf, math.inf
    scale = math.exp(rp.alpha**2 / 2) / (mharm * params.omega)
    return rp.mu_k(k) * scale, rp.delta_mu_k(k) * scale


def fundamental_frequency(z: complex, params: ModelParams) -> float:
    """omega* = omega e^{-alpha^2/2} (1 - |z|^2 alpha^2)."""
    a2 = params.alpha**2
    return params.omega * math.exp(-a2 / 2) * (1 - abs(z) ** 2 * a2)

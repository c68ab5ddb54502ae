"""Hamiltonians of the j = 3/2 sector.

Full space ordering is Fock (slow) x spin (fast), so the 4x4 block for
Fock level n occupies rows 4n..4n+3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hilbert import FockTruncation, ModelParams, annihilation, spin_operators

SQRT3 = math.sqrt(3.0)


def laguerre_table(n_max: int, x: float) -> np.ndarray:
    """L_0(x) .. L_{n_max}(x) by the three-term recurrence."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 - x
    for k in range(2, n_max + 1):
        out[k] = ((2 * k - 1 - x) * out[k - 1] - (k - 1) * out[k - 2]) / k
    return out


def omega_table(n_max: int, params: ModelParams) -> np.ndarray:
    """Omega_0 .. Omega_{n_max}."""
    a2 = params.alpha**2
    return -0.5 * params.omega * math.exp(-a2 / 2) * laguerre_table(n_max, a2)


def omega_n_sum(n: int, params: ModelParams) -> float:
    """Omega_n from the explicit factorial sum.  Overflows past n ~ 20."""
    a2 = params.alpha**2
    terms = [
        (-1) ** (n - l) * math.factorial(n) / (math.factorial(l) * math.factorial(n - l) ** 2) * a2 ** (n - l)
        for l in range(n + 1)
    ]
    return -0.5 * params.omega * math.exp(-a2 / 2) * math.fsum(terms)


def omega_n(n: int, params: ModelParams, method: str = "recurrence") -> float:
    """Effective tunnelling amplitude between neighbouring displaced ladders."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if method == "recurrence":
        return float(omega_table(n, params)[n])
    if method == "sum":
        return omega_n_sum(n, params)
    raise ValueError(f"unknown method {method!r}")


def epsilon(n, m: float, params: ModelParams):
    """Displaced-oscillator energy omega_c (n - beta_m^2)."""
    return params.omega_c * (n - params.beta(m) ** 2)


@dataclass(frozen=True)
class BlockHamiltonian:
    n: int
    matrix: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class ParityBlock:
    n: int
    kappa: int
    matrix: np.ndarray

    @property
    def xi(self) -> int:
        return xi_of(self.n, self.kappa)


def xi_of(n: int, kappa: int) -> int:
    return kappa * (-1) ** n


def _check_kappa(kappa: int) -> None:
    if kappa not in (1, -1):
        raise ValueError(f"kappa must be +1 or -1, got {kappa}")


def block_hamiltonian(n: int, params: ModelParams) -> BlockHamiltonian:
    om = omega_n(n, params)
    e32, e12 = epsilon(n, 1.5, params), epsilon(n, 0.5, params)
    h = np.array(
        [
            [e32, SQRT3 * om, 0.0, 0.0],
            [SQRT3 * om, e12, 2 * om, 0.0],
            [0.0, 2 * om, e12, SQRT3 * om],
            [0.0, 0.0, SQRT3 * om, e32],
        ]
    )
    return BlockHamiltonian(n, h, params)


def parity_block(n: int, kappa: int, params: ModelParams) -> ParityBlock:
    _check_kappa(kappa)
    om = omega_n(n, params)
    xi = xi_of(n, kappa)
    h = np.array(
        [
            [epsilon(n, 1.5, params), SQRT3 * om],
            [SQRT3 * om, epsilon(n, 0.5, params) + 2 * xi * om],
        ]
    )
    return ParityBlock(n, kappa, h)


@dataclass(frozen=True)
class FullHamiltonian:
    matrix: np.ndarray
    params: ModelParams
    trunc: FockTruncation

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def full_hamiltonian(params: ModelParams, trunc: FockTruncation) -> FullHamiltonian:
    """omega_c a^dag a - omega J_x + 2g (a^dag + a) J_z on Fock x spin."""
    a = annihilation(trunc)
    jx, _, jz = spin_operators()
    eye_f, eye_s = np.eye(trunc.dim), np.eye(4)
    h = (
        params.omega_c * np.kron(a.T @ a, eye_s)
        - params.omega * np.kron(eye_f, jx.real)
        + 2 * params.g * np.kron(a + a.T, jz.real)
    )
    return FullHamiltonian(h, params, trunc)


def spin_parity() -> np.ndarray:
    """exp[i pi (3/2 - J_x)] on the quadruplet; real, squares to one."""
    jx = spin_operators()[0]
    p = expm(1j * math.pi * (1.5 * np.eye(4) - jx))
    return np.round(p.real, 12)


def parity_operator(trunc: FockTruncation) -> np.ndarray:
    """Pi = exp[i pi (3/2 - J_x + a^dag a)] on the truncated space."""
    field = np.diag((-1.0) ** np.arange(trunc.dim))
    return np.kron(field, spin_parity())

"""Adiabatic-approximation eigen-solutions and the observables built on them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import SQRT3, epsilon, omega_table, xi_of, _check_kappa
from .hilbert import (
    BasisTag,
    FockTruncation,
    ModelParams,
    TruncationError,
    poisson_tail,
    poisson_weight,
    to_basis,
)


class SolverMode(enum.Enum):
    ExactInBlock = "exact_in_block"
    Simplified = "simplified"


@dataclass(frozen=True)
class AdiabaticEigenpair:
    n: int
    kappa: int
    branch: int  # +1 or -1
    energy: float
    state: np.ndarray  # (c, 1, xi, xi c) * d in the |3/2,m>|n>_{A_m} basis
    theta: float
    c: float
    d: float
    validity_ratio: float  # |Omega_n| / (4 g^2 / omega_c)

    @property
    def xi(self) -> int:
        return xi_of(self.n, self.kappa)


def _block_solution(n, xi, params: ModelParams, mode: SolverMode, om=None):
    """Vectorised eigen-solution of the 2x2 parity block.

    Returns (energies, u, v, theta) with shape (..., 2) for branches (+, -);
    (u, v) is the normalised 2-vector on (|3/2> + xi|-3/2>, |1/2> + xi|-1/2>)/sqrt2
    with v >= 0 (and u > 0 when v == 0).
    """
    n = np.asarray(n)
    xi = np.asarray(xi, dtype=float)
    if om is None:
        om = omega_table(int(n.max()), params)[n]
    om = np.asarray(om, dtype=float)
    g2 = 4 * params.g**2 / params.omega_c

    if mode == SolverMode.Simplified:
        signs = np.array([1.0, -1.0])
        xs = xi[..., None]
        energies = params.omega_c * n[..., None] + (xs - 2 * signs) * om[..., None]
        c = SQRT3 / (xs - 2 * signs)
        v = np.sqrt((2 - signs * xs) / 4) * np.ones_like(c)  # d*sqrt2
        u = c * v
        theta = 2 * np.abs(om)
        return energies, u, v, theta

    a = xi * om + g2
    theta = np.sqrt(a**2 + 3 * om**2)
    mean = params.omega_c * n + xi * om - 5 * params.g**2 / params.omega_c
    energies = np.stack([mean + theta, mean - theta], axis=-1)
    # Eigenvector (sqrt3*Omega, a +- theta), rewritten where a +- theta cancels:
    # a + s*theta = -3 Omega^2 / (a - s*theta).
    vecs = []
    for s in (1.0, -1.0):
        den = a + s * theta
        alt = a - s * theta
        cancel = np.abs(den) < np.abs(alt)
        with np.errstate(divide="ignore", invalid="ignore"):
            # (u, v) proportional to (sqrt3 Omega, den) or, equivalently, to (-alt, sqrt3 Omega)
            u = np.where(cancel, -alt, SQRT3 * om)
            w = np.where(cancel, SQRT3 * om, den)
        vecs.append((u, w))
    out_u, out_v = [], []
    for (u, w) in vecs:
        norm = np.hypot(u, w)
        degenerate = norm == 0
        norm = np.where(degenerate, 1.0, norm)
        out_u.append(u / norm)
        out_v.append(w / norm)
    u = np.stack(out_u, axis=-1)
    v = np.stack(out_v, axis=-1)
    # Omega == 0 and a == 0: the block is a multiple of the identity.
    both = (np.hypot(u, v) == 0).any(axis=-1)
    if np.any(both):
        u[both] = [0.0, 1.0]
        v[both] = [1.0, 0.0]
    # Omega == 0 only one branch can survive the formula; the other is its complement.
    for i, j in ((0, 1), (1, 0)):
        dead = np.hypot(u[..., i], v[..., i]) == 0
        u[..., i] = np.where(dead, -v[..., j], u[..., i])
        v[..., i] = np.where(dead, u[..., j], v[..., i])
    flip = (v < 0) | ((v == 0) & (u < 0))
    u = np.where(flip, -u, u)
    v = np.where(flip, -v, v)
    return energies, u, v, theta


def _pair(n, kappa, branch_idx, energies, u, v, theta, om, params) -> AdiabaticEigenpair:
    xi = xi_of(n, kappa)
    uu, vv = float(u[branch_idx]), float(v[branch_idx])
    state = np.array([uu, vv, xi * vv, xi * uu]) / math.sqrt(2)
    c = uu / vv if vv != 0 else math.copysign(math.inf, uu)
    d = abs(vv) / math.sqrt(2)
    g2 = 4 * params.g**2 / params.omega_c
    ratio = abs(om) / g2 if g2 > 0 else math.inf
    return AdiabaticEigenpair(n, kappa, 1 - 2 * branch_idx, float(energies[branch_idx]), state, float(theta), c, d, ratio)


def adiabatic_eigensystem(
    n: int, kappa: int, params: ModelParams, mode: SolverMode = SolverMode.ExactInBlock
) -> tuple[AdiabaticEigenpair, AdiabaticEigenpair]:
    """The (+, -) eigenpairs of the parity block H_n^kappa."""
    _check_kappa(kappa)
    om = float(omega_table(n, params)[n])
    xi = xi_of(n, kappa)
    energies, u, v, theta = _block_solution(np.array(n), xi, params, mode, om=np.array(om))
    return tuple(_pair(n, kappa, i, energies, u, v, theta, om, params) for i in (0, 1))


@dataclass(frozen=True)
class BlockTable:
    """Eigen-data for all Fock levels 0..n_max, both parities, both branches.

    Arrays are indexed [n, parity, branch] with parity 0 -> kappa=+1.
    ``state`` has a trailing axis of length 4.
    """

    n: np.ndarray
    kappa: np.ndarray
    energy: np.ndarray
    state: np.ndarray


def block_table(n_max: int, params: ModelParams, mode: SolverMode = SolverMode.ExactInBlock) -> BlockTable:
    n = np.arange(n_max + 1)
    om = omega_table(n_max, params)
    kappas = np.array([1, -1])
    nn = np.repeat(n[:, None], 2, axis=1)
    xi = kappas[None, :] * (-1.0) ** nn
    energies, u, v, _ = _block_solution(nn, xi, params, mode, om=np.repeat(om[:, None], 2, axis=1))
    xs = xi[..., None]
    state = np.stack([u, v, xs * v, xs * u], axis=-1) / math.sqrt(2)
    return BlockTable(n, kappas, energies, state)


def population_fock(n: int, t, params: ModelParams, mode: SolverMode = SolverMode.ExactInBlock):
    """P_1(n, t) for the initial state |3/2,3/2>|n>_{A_{3/2}}."""
    t = np.asarray(t, dtype=float)
    if mode == SolverMode.Simplified:
        x = float(omega_table(n, params)[n]) * t
        return (10 + 15 * np.cos(2 * x) + 6 * np.cos(4 * x) + np.cos(6 * x)) / 32
    table = block_table(n, params, mode)
    return _fock_population_from_table(table, n, t)


def _fock_population_from_table(table: BlockTable, n: int, t: np.ndarray):
    w = table.state[n, :, :, 0] ** 2  # (d c)^2 per (parity, branch)
    e = table.energy[n]
    amp = np.tensordot(w.ravel(), np.exp(-1j * np.multiply.outer(e.ravel(), t)), axes=1)
    return np.abs(amp) ** 2


def _check_poisson(z: complex, trunc: FockTruncation, tol: float = 1e-8) -> None:
    tail = poisson_tail(trunc.n_tr, z)
    if tail > tol:
        raise TruncationError(f"n_tr={trunc.n_tr} leaves Poisson mass for z={z}", tail)


def population_coherent_adiabatic(
    z: complex, t, params: ModelParams, trunc: FockTruncation, mode: SolverMode = SolverMode.ExactInBlock
):
    """P_1(z, t) = sum_n p(n) P_1(n, t) over n <= n_tr."""
    _check_poisson(z, trunc)
    t = np.asarray(t, dtype=float)
    p = poisson_weight(np.arange(trunc.dim), z)
    keep = np.flatnonzero(p > 1e-18 * p.max())
    if mode == SolverMode.Simplified:
        om = omega_table(trunc.n_tr, params)[keep]
        x = np.multiply.outer(om, t)
        pf = (10 + 15 * np.cos(2 * x) + 6 * np.cos(4 * x) + np.cos(6 * x)) / 32
        return np.tensordot(p[keep], pf, axes=1)
    table = block_table(trunc.n_tr, params, mode)
    out = np.zeros(t.shape)
    for n in keep:
        out += p[n] * _fock_population_from_table(table, n, t)
    return out


@dataclass(frozen=True)
class AdiabaticExpansion:
    """Evolved GHZ x coherent state in the adiabatic eigenbasis.

    Flat arrays over the terms (n, kappa, branch); ``coeff`` is the t = 0
    amplitude and each term picks up exp(-i energy t).
    """

    n: np.ndarray
    kappa: np.ndarray
    branch: np.ndarray
    coeff: np.ndarray
    energy: np.ndarray
    state: np.ndarray  # (terms, 4), J_z-ordered spin components
    trunc: FockTruncation

    def total_weight(self) -> float:
        return float(np.sum(np.abs(self.coeff) ** 2))

    def spin_vectors(self, t: float) -> np.ndarray:
        """(n_tr+1, 4) spin amplitudes attached to each Fock level at time t."""
        out = np.zeros((self.trunc.dim, 4), dtype=complex)
        contrib = (self.coeff * np.exp(-1j * self.energy * t))[:, None] * self.state
        np.add.at(out, self.n, contrib)
        return out

    def reduced_density(self, t: float, basis: BasisTag = BasisTag.Jz):
        from .entanglement import QubitDensity

        phi = self.spin_vectors(t)
        rho = phi.T @ phi.conj()
        return QubitDensity(to_basis(rho, BasisTag.Jz, basis), basis, "adiabatic")


def ghz_amplitudes_adiabatic(
    z: complex, params: ModelParams, trunc: FockTruncation, mode: SolverMode = SolverMode.ExactInBlock
) -> AdiabaticExpansion:
    """Expansion coefficients sqrt(p(n)/2) (1 + xi) d c of the GHZ x |z> state.

    Uses |n> ~ |n>_{A_m}; the phase of z^n is carried along so complex z is
    handled.
    """
    _check_poisson(z, trunc)
    table = block_table(trunc.n_tr, params, mode)
    n = np.arange(trunc.dim)
    amp_n = np.sqrt(poisson_weight(n, z)) * np.exp(1j * n * np.angle(z))
    xi = table.kappa[None, :] * (-1) ** n[:, None]
    dc = table.state[..., 0]  # (n, parity, branch)
    coeff = (amp_n[:, None, None] / math.sqrt(2)) * (1 + xi)[..., None] * dc
    shape = coeff.shape
    nn = np.broadcast_to(n[:, None, None], shape)
    kk = np.broadcast_to(table.kappa[None, :, None], shape)
    bb = np.broadcast_to(np.array([1, -1])[None, None, :], shape)
    return AdiabaticExpansion(
        nn.ravel().copy(),
        kk.ravel().copy(),
        bb.ravel().copy(),
        coeff.ravel(),
        table.energy.ravel().copy(),
        table.state.reshape(-1, 4).copy(),
        trunc,
    )

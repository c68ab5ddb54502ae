"""I-tangles for the GHZ dynamics: field-qubits and one-qubit-vs-pair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import BasisTag, dicke_to_product, to_basis

SQRT3 = math.sqrt(3.0)
PATTERN_TOL = 0.05
FQ_BOUND = 1.75  # 2(d-1)/d with d = 8


class DensityError(ValueError):
    """A matrix failed the density-matrix axioms."""


class DomainError(ValueError):
    """Input outside the range where the closed forms apply."""


class PatternError(DomainError):
    pass


@dataclass(frozen=True)
class QubitDensity:
    matrix: np.ndarray
    basis: BasisTag = BasisTag.Jz
    source: str = "analytic"

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12, psd_tol: float = 1e-10) -> "QubitDensity":
        m = self.matrix
        if m.shape != (4, 4):
            raise DensityError(f"expected 4x4, got {m.shape}")
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise DensityError("not Hermitian")
        if abs(np.trace(m) - 1) > trace_tol:
            raise DensityError(f"trace {np.trace(m).real:.15g} != 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -psd_tol:
            raise DensityError("not positive semidefinite")
        return self

    def to(self, basis: BasisTag) -> "QubitDensity":
        return QubitDensity(to_basis(self.matrix, self.basis, basis), basis, self.source)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def embed(self) -> np.ndarray:
        """8x8 density on the three-qubit product space."""
        v = dicke_to_product(self.basis)
        return v @ self.matrix @ v.conj().T


@dataclass(frozen=True)
class TangleValue:
    value: float
    kind: str  # "FQ" or "AB"
    S: complex | None = field(default=None)


def rho_q_analytic(S: complex) -> QubitDensity:
    """Qubit density in the J_x eigenbasis for a given S(t, 2 omega)."""
    if abs(S) > 1 + 1e-9:
        raise DomainError(f"|S| = {abs(S):.6g} > 1: adiabatic closed form does not apply")
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 0.25
    m[2, 2] = 0.75
    m[0, 2] = SQRT3 * S / 4
    m[2, 0] = np.conj(m[0, 2])
    return QubitDensity(m, BasisTag.Jx, "analytic")


def tau_fq(rho: QubitDensity) -> TangleValue:
    """2 (1 - Tr rho^2) for the pure field-qubits bipartition."""
    rho.validate(psd_tol=1e-8)
    return TangleValue(2 * (1 - rho.purity()), "FQ")


def tau_fq_analytic(S: complex) -> TangleValue:
    return TangleValue(tau_fq_curve(S), "FQ", S)


def tau_fq_curve(S):
    """Vectorised (3 - 3|S|^2)/4."""
    s2 = np.abs(S) ** 2
    out = (3 - 3 * s2) / 4
    return float(out) if np.ndim(out) == 0 else out


def partial_traces(rho8: np.ndarray, qubit: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(rho_A, rho_B) for qubit ``qubit`` against the remaining pair."""
    if rho8.shape != (8, 8):
        raise ValueError(f"expected 8x8 density, got {rho8.shape}")
    t = rho8.reshape(2, 2, 2, 2, 2, 2)
    order = [qubit] + [q for q in range(3) if q != qubit]
    t = t.transpose(order + [3 + q for q in order]).reshape(2, 4, 2, 4)
    rho_a = np.einsum("ajbj->ab", t)
    rho_b = np.einsum("iaib->ab", t)
    return rho_a, rho_b


def _move_qubit_first(rho8: np.ndarray, qubit: int) -> np.ndarray:
    order = [qubit] + [q for q in range(3) if q != qubit]
    t = rho8.reshape(2, 2, 2, 2, 2, 2).transpose(order + [3 + q for q in order])
    return t.reshape(8, 8)


def state_inverter(rho8: np.ndarray, qubit: int = 0) -> np.ndarray:
    """I - rho_A x I - I x rho_B + rho on the (qubit) | (pair) split.

    The returned operator is expressed with ``qubit`` moved to the front.
    """
    rho_a, rho_b = partial_traces(rho8, qubit)
    return (
        np.eye(8)
        - np.kron(rho_a, np.eye(4))
        - np.kron(np.eye(2), rho_b)
        + _move_qubit_first(rho8, qubit)
    )


def m_matrix(S: complex) -> tuple[np.ndarray, float]:
    """The 3x3 matrix M(|S|) and its smallest eigenvalue."""
    s = abs(S)
    if s > 1 + 1e-9:
        raise DomainError(f"|S| = {s:.6g} > 1")
    s2 = s * s
    m = np.array(
        [
            [2 + 2 * s2, 0.0, 4 * s / SQRT3],
            [0.0, (-1 - s2) / 2, 0.0],
            [4 * s / SQRT3, 0.0, (-1 + 9 * s2) / 3],
        ]
    ) / (3 * (1 + 3 * s2))
    return m, float(np.linalg.eigvalsh(m)[0])


def lambda_min_closed(S) -> float:
    s2 = np.abs(S) ** 2
    return -(1 + s2) / (6 + 18 * s2)


def tau_ab_curve(S):
    """Vectorised (5 + 20|S|^2 + 7|S|^4) / (8 (1 + 3|S|^2))."""
    s2 = np.abs(S) ** 2
    out = (5 + 20 * s2 + 7 * s2**2) / (8 * (1 + 3 * s2))
    return float(out) if np.ndim(out) == 0 else out


def extract_S(rho: QubitDensity, tol: float = PATTERN_TOL) -> complex:
    """S(t, 2 omega) read off a density matrix of the analytic family.

    Raises PatternError if, in the J_x tag, rows/columns 2 and 4 are not empty
    or the populations differ from (1/4, 3/4) by more than ``tol``.
    """
    mx = rho.to(BasisTag.Jx).matrix
    outside = max(
        np.abs(mx[[1, 3], :]).max(),
        np.abs(mx[:, [1, 3]]).max(),
        abs(mx[0, 0] - 0.25),
        abs(mx[2, 2] - 0.75),
    )
    if outside > tol:
        raise PatternError(
            f"state outside the analytic rank-2 family (off-pattern entry {outside:.3g} > {tol}); "
            "the general Osborne M-construction for rank-2 states is not implemented"
        )
    return complex(4 / SQRT3 * mx[0, 2])


def tau_ab(rho: QubitDensity | None = None, mode: str = "semianalytic", S: complex | None = None, qubit: int = 0) -> TangleValue:
    """One-qubit-vs-pair I-tangle.

    ``mode="analytic"`` evaluates the closed form from S alone.
    ``mode="semianalytic"`` computes Tr(rho rho~) numerically from the embedded
    8x8 state and takes lambda_min from M(S_est), with S_est read off rho.
    """
    if mode == "analytic":
        if S is None:
            raise ValueError("analytic mode needs S")
        return TangleValue(tau_ab_curve(S), "AB", S)
    if mode != "semianalytic":
        raise ValueError(f"unknown mode {mode!r}")
    if rho is None:
        raise ValueError("semianalytic mode needs rho")
    rho.validate(psd_tol=1e-8)
    s_est = extract_S(rho)
    if abs(s_est) > 1:
        s_est = s_est / abs(s_est)
    rho8 = rho.embed()
    inv = state_inverter(rho8, qubit)
    overlap = float(np.real(np.trace(_move_qubit_first(rho8, qubit) @ inv)))
    _, lam = m_matrix(s_est)
    return TangleValue(overlap + 2 * lam * (1 - rho.purity()), "AB", s_est)

"""Reference solver on the truncated j = 3/2 x Fock space.

Propagation goes through the spectral decomposition, so any time can be
reached exactly without step-size control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import TimeSeries
from .hamiltonian import FullHamiltonian, full_hamiltonian, parity_operator
from .hilbert import (
    BasisTag,
    FockTruncation,
    ModelParams,
    TruncationError,
    ValidationError,
    coherent_vector,
    displacement_matrix,
    displaced_fock_vector,
    to_basis,
)

DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns
    parity: np.ndarray  # +1 / -1, 0 where undefined
    hamiltonian: FullHamiltonian

    @property
    def trunc(self) -> FockTruncation:
        return self.hamiltonian.trunc


@dataclass(frozen=True)
class SpinFieldState:
    amplitudes: np.ndarray
    trunc: FockTruncation
    basis: BasisTag = BasisTag.Jz

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_matrix(self) -> np.ndarray:
        """(n_tr+1, 4) view indexed [Fock level, spin]."""
        return self.amplitudes.reshape(self.trunc.dim, 4)


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    mags = np.abs(vecs)
    idx = np.argmax(mags >= mags.max(axis=0) - 1e-12, axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.conj(lead) / np.abs(lead))


def eigendecompose(h: FullHamiltonian) -> SpectralDecomposition:
    m = h.matrix
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.conj().T).max() > 1e-12 * scale:
        raise ValidationError("Hamiltonian is not Hermitian")
    vals, vecs = np.linalg.eigh(m)
    vecs = vecs.astype(complex)
    pi = parity_operator(h.trunc)

    # rotate degenerate clusters onto parity eigenvectors
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[stop] - vals[stop - 1] < DEGENERACY_GAP:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            _, rot = np.linalg.eigh(block.conj().T @ pi @ block)
            vecs[:, start:stop] = block @ rot
        start = stop

    vecs = _fix_phases(vecs)
    expect = np.einsum("ik,ij,jk->k", vecs.conj(), pi, vecs).real
    labels = np.where(np.abs(expect) > 0.99, np.sign(expect), 0).astype(int)
    return SpectralDecomposition(vals, vecs, labels, h)


def _check_state(decomp: SpectralDecomposition, psi: SpinFieldState) -> None:
    if psi.amplitudes.shape != (decomp.vectors.shape[0],):
        raise ValidationError(
            f"state dimension {psi.amplitudes.shape} does not match Hamiltonian {decomp.vectors.shape[0]}"
        )


def propagate(decomp: SpectralDecomposition, psi0: SpinFieldState, t: float) -> SpinFieldState:
    """psi(t) = V exp(-i Lambda t) V^dag psi0."""
    _check_state(decomp, psi0)
    c = decomp.vectors.conj().T @ psi0.amplitudes
    return SpinFieldState(decomp.vectors @ (np.exp(-1j * decomp.eigenvalues * t) * c), psi0.trunc)


def evolve(decomp: SpectralDecomposition, psi0: SpinFieldState, t_grid) -> np.ndarray:
    """Amplitudes on the whole grid, shape (len(t_grid), dim)."""
    _check_state(decomp, psi0)
    t_grid = np.asarray(t_grid, dtype=float)
    c = decomp.vectors.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.multiply.outer(t_grid, decomp.eigenvalues))
    return (phases * c) @ decomp.vectors.T


def scaled_time(t_grid, params: ModelParams) -> tuple[np.ndarray, str]:
    """Time axis for reporting: omega t / 2 pi, or omega_c t / 2 pi when omega = 0."""
    t_grid = np.asarray(t_grid, dtype=float)
    if params.omega > 0:
        return params.omega * t_grid / (2 * math.pi), "omega_t_over_2pi"
    return params.omega_c * t_grid / (2 * math.pi), "omega_c_t_over_2pi"


def physical_time(tau, params: ModelParams) -> np.ndarray:
    """Inverse of :func:`scaled_time` for omega > 0."""
    return 2 * math.pi * np.asarray(tau, dtype=float) / params.omega


def _series(t_grid, values, params, label, **meta) -> TimeSeries:
    times, unit = scaled_time(t_grid, params)
    return TimeSeries(times, np.asarray(values, dtype=float), {"params": params, "method": label, "time_unit": unit, **meta})


def _leak_check(mass: float, tol: float = 1e-8) -> None:
    if mass > tol:
        raise TruncationError("initial field state not contained in truncation", mass)


def excited_displaced_fock_state(n: int, params: ModelParams, trunc: FockTruncation) -> SpinFieldState:
    """|3/2,3/2> |n>_{A_{3/2}}."""
    field = displaced_fock_vector(n, 1.5, params, trunc)
    _leak_check(field.truncated_mass)
    return SpinFieldState(np.kron(field.amplitudes, [1, 0, 0, 0]).astype(complex), trunc)


def excited_displaced_coherent_state(z: complex, params: ModelParams, trunc: FockTruncation) -> tuple[SpinFieldState, float]:
    """sum_n e^{-|z|^2/2} z^n / sqrt(n!) |3/2,3/2> |n>_{A_{3/2}}; returns (state, leaked mass)."""
    coh = coherent_vector(z, trunc)
    beta = params.beta(1.5)
    # D(-beta) applied on a widened space, then cut back
    wide = FockTruncation(trunc.n_tr + int(math.ceil(8 * abs(beta) * math.sqrt(trunc.dim) + 40)))
    d = displacement_matrix(-beta, wide)
    field = d[: trunc.dim, : trunc.dim] @ coh.amplitudes
    leaked = max(0.0, 1.0 - float(np.sum(np.abs(field) ** 2)))
    _leak_check(leaked)
    return SpinFieldState(np.kron(field, [1, 0, 0, 0]), trunc), leaked


def ghz_coherent_state(z: complex, trunc: FockTruncation) -> SpinFieldState:
    """(|3/2,3/2> + |3/2,-3/2>)/sqrt2 x |z>, with a true (undisplaced) coherent state."""
    coh = coherent_vector(z, trunc)
    _leak_check(coh.truncated_mass)
    spin = np.array([1, 0, 0, 1]) / math.sqrt(2)
    return SpinFieldState(np.kron(coh.amplitudes, spin), trunc)


def _decomp(params: ModelParams, trunc: FockTruncation, decomp: SpectralDecomposition | None):
    if decomp is None:
        return eigendecompose(full_hamiltonian(params, trunc))
    if decomp.trunc != trunc or decomp.hamiltonian.params != params:
        raise ValidationError("decomposition was built for other parameters")
    return decomp


def population_fock_exact(
    n: int, t_grid, params: ModelParams, trunc: FockTruncation, decomp: SpectralDecomposition | None = None
) -> TimeSeries:
    """|<n|_{A_{3/2}} <3/2,3/2| psi(t)>|^2 under the full truncated Hamiltonian."""
    decomp = _decomp(params, trunc, decomp)
    psi0 = excited_displaced_fock_state(n, params, trunc)
    w = np.abs(decomp.vectors.conj().T @ psi0.amplitudes) ** 2
    amp = np.exp(-1j * np.multiply.outer(np.asarray(t_grid, dtype=float), decomp.eigenvalues)) @ w
    return _series(t_grid, np.abs(amp) ** 2, params, "exact", n=n)


def population_coherent_exact(
    z: complex, t_grid, params: ModelParams, trunc: FockTruncation, decomp: SpectralDecomposition | None = None
) -> TimeSeries:
    """<3/2,3/2| Tr_F rho(z, t) |3/2,3/2> with the field traced out."""
    decomp = _decomp(params, trunc, decomp)
    psi0, leaked = excited_displaced_coherent_state(z, params, trunc)
    amps = evolve(decomp, psi0, t_grid).reshape(len(np.atleast_1d(t_grid)), trunc.dim, 4)
    values = np.sum(np.abs(amps[:, :, 0]) ** 2, axis=1)
    return _series(t_grid, values, params, "exact", z=z, leaked_mass=leaked)


def ghz_evolution_exact(
    z: complex, t_grid, params: ModelParams, trunc: FockTruncation, decomp: SpectralDecomposition | None = None
) -> list[SpinFieldState]:
    decomp = _decomp(params, trunc, decomp)
    psi0 = ghz_coherent_state(z, trunc)
    amps = evolve(decomp, psi0, t_grid)
    return [SpinFieldState(row, trunc) for row in amps]


def reduced_density_exact(psi: SpinFieldState, basis: BasisTag = BasisTag.Jz):
    """Qubit density matrix with the field traced out."""
    from .entanglement import QubitDensity

    m = psi.as_matrix()
    rho = m.T @ m.conj()
    return QubitDensity(to_basis(rho, BasisTag.Jz, basis), basis, "exact")

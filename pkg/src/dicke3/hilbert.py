"""State-space ingredients for the three-qubit Dicke model.

Everything here lives on the j = 3/2 quadruplet tensored with a truncated
Fock space.  Spin objects use the descending ordering m = 3/2, 1/2, -1/2, -3/2
for both the J_z and the J_x eigenbases.  Frequencies are in units of
``omega_c``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import eval_genlaguerre, gammaln
from scipy.stats import poisson

SPIN = 1.5
M_VALUES = np.array([1.5, 0.5, -0.5, -1.5])


class ValidationError(ValueError):
    """Raised for physically meaningless inputs."""


class TruncationError(RuntimeError):
    """The Fock truncation cannot hold the requested state to tolerance."""

    def __init__(self, message: str, leakage: float):
        super().__init__(f"{message} (estimated leakage {leakage:.3e})")
        self.leakage = leakage


class BasisTag(enum.Enum):
    Jz = "Jz"
    Jx = "Jx"


@dataclass(frozen=True)
class ModelParams:
    omega_c: float
    omega: float
    g: float

    @property
    def alpha(self) -> float:
        return 2.0 * self.g / self.omega_c

    @property
    def adiabatic_regime(self) -> bool:
        # advisory only
        return self.omega <= 0.25 * self.omega_c and self.g <= 0.1 * self.omega_c

    def beta(self, m: float) -> float:
        """Displacement of the field equilibrium for spin projection ``m``."""
        return m * self.alpha


def make_params(omega_c: float = 1.0, omega: float = 0.15, g: float = 0.08) -> ModelParams:
    values = {"omega_c": omega_c, "omega": omega, "g": g}
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValidationError(f"{name} must be finite, got {v!r}")
    if omega_c <= 0:
        raise ValidationError(f"omega_c must be positive, got {omega_c}")
    if omega < 0 or g < 0:
        raise ValidationError(f"omega and g must be non-negative, got omega={omega}, g={g}")
    return ModelParams(float(omega_c), float(omega), float(g))


@dataclass(frozen=True)
class FockTruncation:
    n_tr: int

    def __post_init__(self):
        if int(self.n_tr) != self.n_tr or self.n_tr < 1:
            raise ValidationError(f"n_tr must be an integer >= 1, got {self.n_tr!r}")

    @property
    def dim(self) -> int:
        return self.n_tr + 1


def default_truncation(z: complex, params: ModelParams) -> FockTruncation:
    """Poisson tail below 1e-10 plus a margin for the largest displacement."""
    r = abs(z)
    beta_max = SPIN * params.alpha
    return FockTruncation(int(math.ceil(r**2 + 8 * r + 20 + 4 * beta_max**2)))


@dataclass(frozen=True)
class FieldVector:
    amplitudes: np.ndarray
    truncation: FockTruncation
    truncated_mass: float = 0.0

    def __post_init__(self):
        if len(self.amplitudes) != self.truncation.dim:
            raise ValidationError("amplitude length does not match truncation")
        if self.norm() > 1 + 1e-12:
            raise ValidationError(f"field vector norm {self.norm()} exceeds 1")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# -- spin operators -----------------------------------------------------------

def spin_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J_x, J_y, J_z) on j = 3/2 in the descending-m basis."""
    jp = np.zeros((4, 4))
    for i in range(1, 4):
        m = M_VALUES[i]
        jp[i - 1, i] = math.sqrt(SPIN * (SPIN + 1) - m * (m + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    jz = np.diag(M_VALUES)
    return jx.astype(complex), jy, jz.astype(complex)


def jx_rotation() -> np.ndarray:
    """Unitary U taking J_z-basis components to J_x-basis components.

    Rows of U are the J_x eigenvectors (descending m_x).  Each eigenvector is
    phased so that its first largest-magnitude component is real positive.
    """
    jx = spin_operators()[0].real
    vals, vecs = np.linalg.eigh(jx)
    order = np.argsort(vals)[::-1]
    vecs = vecs[:, order]
    for k in range(4):
        vecs[:, k] *= _phase_fix(vecs[:, k])
    return vecs.conj().T.astype(complex)


def _phase_fix(v: np.ndarray) -> complex:
    mags = np.abs(v)
    i = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return np.conj(v[i]) / mags[i]


def to_basis(matrix: np.ndarray, source: BasisTag, target: BasisTag) -> np.ndarray:
    """Re-express a 4x4 operator given in ``source`` in the ``target`` tag."""
    if source == target:
        return matrix
    u = jx_rotation()
    if target == BasisTag.Jx:
        return u @ matrix @ u.conj().T
    return u.conj().T @ matrix @ u


def dicke_to_product(basis: BasisTag = BasisTag.Jz) -> np.ndarray:
    """8x4 isometry embedding the symmetric subspace into three qubits.

    Product index is ``4*b1 + 2*b2 + b3`` with ``b = 0`` for |e> and ``b = 1``
    for |g>, so single-qubit sigma_z = diag(1, -1).
    """
    v = np.zeros((8, 4), dtype=complex)
    for col, m in enumerate(M_VALUES):
        n_ground = int(round(SPIN - m))
        strings = list(combinations(range(3), n_ground))
        for ground in strings:
            idx = sum(1 << (2 - q) for q in ground)
            v[idx, col] = 1.0 / math.sqrt(len(strings))
    if basis == BasisTag.Jx:
        v = v @ jx_rotation().conj().T
    return v


# -- field states -------------------------------------------------------------

def annihilation(trunc: FockTruncation) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, trunc.dim, dtype=float)), 1)


def displacement_matrix(beta: complex, trunc: FockTruncation, leakage_tol: float = 1e-10) -> np.ndarray:
    """<p|D(beta)|q> on the truncated space from the Laguerre closed form.

    Raises TruncationError when a column q <= n_tr/2 loses more than
    ``leakage_tol`` of its norm to levels above n_tr.
    """
    dim = trunc.dim
    if beta == 0:
        return np.eye(dim, dtype=complex)
    x = abs(beta) ** 2
    p, q = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    k = hi - lo
    # sqrt(lo!/hi!) |beta|^k e^{-x/2} in log space
    log_mag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + k * math.log(abs(beta)) - x / 2
    lag = eval_genlaguerre(lo, k, x)
    phase = beta / abs(beta)
    # p >= q carries beta^k, p < q carries (-beta*)^k
    ph = np.where(p >= q, phase**k, (-np.conj(phase)) ** k)
    d = np.exp(log_mag) * lag * ph
    half = trunc.n_tr // 2
    leak = float(np.max(1.0 - np.sum(np.abs(d[:, : half + 1]) ** 2, axis=0)))
    if leak > leakage_tol:
        raise TruncationError(f"n_tr={trunc.n_tr} too small for displacement {beta}", leak)
    return d


def displaced_fock_vector(n: int, m: float, params: ModelParams, trunc: FockTruncation) -> FieldVector:
    """|n>_{A_m} = D(-m*alpha)|n>, the number state of the shifted mode a + m*alpha."""
    if n < 0 or n > trunc.n_tr:
        raise IndexError(f"Fock index {n} outside 0..{trunc.n_tr}")
    beta = params.beta(m)
    col = displacement_matrix(-beta, _wide(trunc, n, beta))[: trunc.dim, n]
    mass = max(0.0, 1.0 - float(np.sum(np.abs(col) ** 2)))
    return FieldVector(col, trunc, mass)


def _wide(trunc: FockTruncation, n: int, beta: float) -> FockTruncation:
    # A scratch space wide enough that column n of D is converged, so the
    # mass reported for the narrow space is the genuine tail.
    extra = int(math.ceil(4 * abs(beta) * math.sqrt(n + 1) + 4 * abs(beta) ** 2 + 40))
    return FockTruncation(max(2 * (trunc.n_tr + extra), 2 * n + 2))


def coherent_vector(z: complex, trunc: FockTruncation, mass_tol: float = 1e-8) -> FieldVector:
    """Coherent state amplitudes e^{-|z|^2/2} z^n / sqrt(n!) for n <= n_tr."""
    amps = np.empty(trunc.dim, dtype=complex)
    amps[0] = math.exp(-abs(z) ** 2 / 2)
    for n in range(1, trunc.dim):
        amps[n] = amps[n - 1] * z / math.sqrt(n)
    mass = float(poisson.sf(trunc.n_tr, abs(z) ** 2)) if z != 0 else 0.0
    if mass > mass_tol:
        raise TruncationError(f"n_tr={trunc.n_tr} too small for coherent amplitude {z}", mass)
    return FieldVector(amps, trunc, mass)


def poisson_weight(n, z: complex):
    """p(n) = e^{-|z|^2} |z|^{2n} / n!, evaluated in log space."""
    n = np.asarray(n)
    x = abs(z) ** 2
    if x == 0:
        out = (n == 0).astype(float)
    else:
        out = np.exp(-x + n * math.log(x) - gammaln(n + 1))
    return out if out.ndim else float(out)


def poisson_tail(n_tr: int, z: complex) -> float:
    """Poisson probability mass above ``n_tr``."""
    return float(poisson.sf(n_tr, abs(z) ** 2)) if z != 0 else 0.0

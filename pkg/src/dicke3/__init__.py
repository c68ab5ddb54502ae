"""Three-qubit Dicke model in the ultrastrong-coupling regime.

Population collapse/revival and I-tangle dynamics computed by exact
diagonalisation, by the adiabatic block solution, and by closed-form
revival analytics.
"""

from .hilbert import (
    BasisTag,
    FieldVector,
    FockTruncation,
    ModelParams,
    TruncationError,
    ValidationError,
    coherent_vector,
    default_truncation,
    dicke_to_product,
    displaced_fock_vector,
    displacement_matrix,
    jx_rotation,
    make_params,
    poisson_weight,
    spin_operators,
)
from .hamiltonian import (
    block_hamiltonian,
    full_hamiltonian,
    omega_n,
    parity_block,
    parity_operator,
)
from .adiabatic import (
    SolverMode,
    adiabatic_eigensystem,
    ghz_amplitudes_adiabatic,
    population_coherent_adiabatic,
    population_fock,
)
from .exact import (
    eigendecompose,
    ghz_evolution_exact,
    population_coherent_exact,
    population_fock_exact,
    propagate,
    reduced_density_exact,
)
from .revival import (
    fundamental_frequency,
    population_analytic,
    revival_schedule,
    revival_sum,
    revival_term,
)
from .entanglement import (
    QubitDensity,
    m_matrix,
    rho_q_analytic,
    state_inverter,
    tau_ab,
    tau_fq,
    tau_fq_analytic,
)
from .analysis import Spectrum, TimeSeries, compare_series, find_peaks, fourier_transform

__version__ = "0.1.0"

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.special import factorial

from dicke3.hilbert import (
    BasisTag,
    FockTruncation,
    TruncationError,
    ValidationError,
    annihilation,
    coherent_vector,
    default_truncation,
    dicke_to_product,
    displaced_fock_vector,
    displacement_matrix,
    jx_rotation,
    make_params,
    poisson_tail,
    poisson_weight,
    spin_operators,
    to_basis,
)


def wigner_small_d(j, theta):
    """d^j_{m'm}(theta) from the explicit Wigner sum, rows/cols in descending m."""
    ms = [j - k for k in range(int(2 * j) + 1)]
    d = np.zeros((len(ms), len(ms)))
    for a, mp in enumerate(ms):
        for b, m in enumerate(ms):
            pref = math.sqrt(
                math.factorial(int(j + mp)) * math.factorial(int(j - mp)) * math.factorial(int(j + m)) * math.factorial(int(j - m))
            )
            total = 0.0
            for s in range(0, int(2 * j) + 1):
                den = [j + m - s, s, mp - m + s, j - mp - s]
                if min(den) < 0:
                    continue
                total += (-1) ** (mp - m + s) * math.cos(theta / 2) ** (2 * j + m - mp - 2 * s) * math.sin(theta / 2) ** (
                    mp - m + 2 * s
                ) / math.prod(math.factorial(int(x)) for x in den)
            d[a, b] = pref * total
    return d


class TestParams:
    def test_reference_alpha(self):
        assert make_params(1, 0.15, 0.08).alpha == pytest.approx(0.16, abs=1e-15)

    def test_decoupled(self):
        assert make_params(1, 0.15, 0).alpha == 0

    def test_degenerate_qubit_accepted(self):
        p = make_params(1, 0, 0.05)
        assert p.alpha == pytest.approx(0.1) and p.omega == 0

    @pytest.mark.parametrize("args", [(0, 0.1, 0.1), (-1, 0.1, 0.1), (1, -0.1, 0.1), (1, 0.1, -0.1), (1, math.nan, 0.1), (1, 0.1, math.inf)])
    def test_invalid(self, args):
        with pytest.raises(ValidationError):
            make_params(*args)

    def test_regime_flag(self):
        assert make_params(1, 0.15, 0.08).adiabatic_regime
        assert not make_params(1, 0.3, 0.08).adiabatic_regime
        assert not make_params(1, 0.15, 0.2).adiabatic_regime

    def test_truncation_validation(self):
        with pytest.raises(ValidationError):
            FockTruncation(0)
        with pytest.raises(ValidationError):
            FockTruncation(2.5)
        assert default_truncation(3, make_params()).n_tr >= 53


class TestSpin:
    def test_su2_algebra(self):
        jx, jy, jz = spin_operators()
        for a, b, c in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
            assert np.abs(a @ b - b @ a - 1j * c).max() < 1e-14

    def test_casimir(self):
        jx, jy, jz = spin_operators()
        assert np.abs(jx @ jx + jy @ jy + jz @ jz - 3.75 * np.eye(4)).max() < 1e-14

    def test_jx_rotation_diagonalises(self):
        u = jx_rotation()
        jx = spin_operators()[0]
        assert np.abs(u @ u.conj().T - np.eye(4)).max() < 1e-14
        assert np.allclose(u @ jx @ u.conj().T, np.diag([1.5, 0.5, -0.5, -1.5]), atol=1e-14)

    def test_jx_rotation_matches_wigner_d(self):
        # J_x eigenvectors are the J_z ones rotated by pi/2 about y: columns of d(pi/2)
        d = wigner_small_d(1.5, math.pi / 2)
        u = jx_rotation()
        # rows of u equal columns of d up to one phase per row
        for k in range(4):
            ref = d[:, k]
            phase = np.vdot(ref, u[k])
            assert abs(abs(phase) - 1) < 1e-12
            assert np.abs(u[k] - phase * ref).max() < 1e-12

    def test_to_basis_round_trip(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        back = to_basis(to_basis(m, BasisTag.Jz, BasisTag.Jx), BasisTag.Jx, BasisTag.Jz)
        assert np.abs(back - m).max() < 1e-14


class TestDickeEmbedding:
    def test_isometry(self):
        v = dicke_to_product(BasisTag.Jz)
        assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-15

    def test_collective_jz(self):
        v = dicke_to_product(BasisTag.Jz)
        sz = np.diag([0.5, -0.5])
        i2 = np.eye(2)
        jz8 = np.kron(np.kron(sz, i2), i2) + np.kron(np.kron(i2, sz), i2) + np.kron(np.kron(i2, i2), sz)
        assert np.abs(v.conj().T @ jz8 @ v - spin_operators()[2]).max() < 1e-14

    def test_top_state_is_product(self):
        v = dicke_to_product(BasisTag.Jz)
        psi = v[:, 0]
        rho = np.outer(psi, psi.conj()).reshape(2, 4, 2, 4)
        rho1 = np.einsum("ajbj->ab", rho)
        assert np.allclose(rho1, [[1, 0], [0, 0]], atol=1e-15)

    def test_jx_embedding_consistent(self):
        vz = dicke_to_product(BasisTag.Jz)
        vx = dicke_to_product(BasisTag.Jx)
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        rho = a @ a.T
        assert np.allclose(vz @ rho @ vz.T, vx @ to_basis(rho, BasisTag.Jz, BasisTag.Jx) @ vx.conj().T, atol=1e-13)


class TestDisplacement:
    def test_zero_is_identity(self):
        assert np.abs(displacement_matrix(0.0, FockTruncation(20)) - np.eye(21)).max() == 0

    def test_vacuum_overlap(self):
        d = displacement_matrix(0.24, FockTruncation(40))
        assert d[0, 0] == pytest.approx(math.exp(-0.0288), abs=1e-15)

    def test_matches_matrix_exponential(self):
        # oracle: exp(beta a^dag - beta a) on a much larger space, cut back
        big = FockTruncation(200)
        a = annihilation(big)
        ref = expm(0.24 * (a.T - a))[:61, :61]
        d = displacement_matrix(0.24, FockTruncation(60))
        assert np.abs(d - ref).max() < 1e-12

    def test_complex_beta_against_expm(self):
        beta = 0.3 - 0.2j
        a = annihilation(FockTruncation(150))
        ref = expm(beta * a.conj().T - np.conj(beta) * a)[:41, :41]
        assert np.abs(displacement_matrix(beta, FockTruncation(40)) - ref).max() < 1e-12

    def test_unitarity_low_levels(self):
        d = displacement_matrix(0.24, FockTruncation(60))
        gram = d.conj().T @ d
        assert np.abs(gram[:31, :31] - np.eye(31)).max() < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-1.5, 1.5))
    def test_group_property(self, beta):
        # D(b) D(-b) = I on the low-level block
        tr = FockTruncation(80)
        d = displacement_matrix(beta, tr) @ displacement_matrix(-beta, tr)
        assert np.abs(d[:30, :30] - np.eye(30)).max() < 1e-9

    def test_leakage_detected(self):
        with pytest.raises(TruncationError) as err:
            displacement_matrix(5.0, FockTruncation(10))
        assert err.value.leakage > 1e-10


class TestDisplacedFock:
    def test_undisplaced_vacuum(self):
        v = displaced_fock_vector(0, 0.0, make_params(), FockTruncation(20))
        assert np.array_equal(v.amplitudes, np.eye(21)[0])

    def test_displaced_vacuum_is_gaussian(self):
        p = make_params(1, 0.15, 0.08)
        v = displaced_fock_vector(0, 1.5, p, FockTruncation(40))
        beta = 0.24
        # coherent state with amplitude -beta: e^{-b^2/2} (-b)^k / sqrt(k!)
        k = np.arange(41)
        ref = math.exp(-beta**2 / 2) * (-beta) ** k / np.sqrt(factorial(k))
        assert np.abs(np.abs(v.amplitudes) - np.abs(ref)).max() < 1e-14
        assert abs(v.amplitudes[0]) == pytest.approx(math.exp(-beta**2 / 2), abs=1e-15)

    def test_orthonormal(self):
        p = make_params()
        tr = FockTruncation(60)
        vecs = np.array([displaced_fock_vector(n, 1.5, p, tr).amplitudes for n in range(11)])
        assert np.abs(vecs.conj() @ vecs.T - np.eye(11)).max() < 1e-10

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            displaced_fock_vector(21, 1.5, make_params(), FockTruncation(20))


class TestCoherent:
    def test_vacuum(self):
        v = coherent_vector(0, FockTruncation(10))
        assert np.array_equal(v.amplitudes, np.eye(11)[0])

    def test_reference_mass(self):
        v = coherent_vector(3, FockTruncation(80))
        assert v.truncated_mass < 1e-10
        assert abs(np.linalg.norm(v.amplitudes) ** 2 - (1 - v.truncated_mass)) < 1e-14

    def test_complex_phase(self):
        z = 2 * np.exp(0.7j)
        v = coherent_vector(z, FockTruncation(60))
        k = np.arange(61)
        ref = np.exp(-abs(z) ** 2 / 2) * z**k / np.sqrt(factorial(k))
        assert np.abs(v.amplitudes - ref).max() < 1e-14

    def test_too_small_truncation(self):
        with pytest.raises(TruncationError):
            coherent_vector(5, FockTruncation(10))


class TestPoisson:
    def test_vacuum_weight(self):
        assert poisson_weight(0, 3) == pytest.approx(math.exp(-9), rel=1e-14)

    def test_normalised(self):
        assert abs(np.sum(poisson_weight(np.arange(81), 3)) - 1) < 1e-12

    def test_mode(self):
        assert int(np.argmax(poisson_weight(np.arange(81), 3))) in (8, 9)

    def test_tail_consistent(self):
        tail = poisson_tail(20, 3)
        assert tail == pytest.approx(1 - np.sum(poisson_weight(np.arange(21), 3)), abs=1e-14)

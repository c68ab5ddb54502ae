import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from dicke3.entanglement import (
    FQ_BOUND,
    DensityError,
    DomainError,
    PatternError,
    QubitDensity,
    extract_S,
    lambda_min_closed,
    m_matrix,
    partial_traces,
    rho_q_analytic,
    state_inverter,
    tau_ab,
    tau_ab_curve,
    tau_fq,
    tau_fq_analytic,
    tau_fq_curve,
)
from dicke3.hilbert import BasisTag, dicke_to_product

s_complex = st.builds(lambda r, phi: r * np.exp(1j * phi), st.floats(0, 1), st.floats(-math.pi, math.pi))


def random_density(rng, dim=4, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestRhoQ:
    def test_plateau(self):
        assert np.allclose(rho_q_analytic(0).matrix, np.diag([0.25, 0, 0.75, 0]))

    def test_pure_at_unit_S(self):
        ev = np.linalg.eigvalsh(rho_q_analytic(1).matrix)
        assert np.allclose(ev, [0, 0, 0, 1], atol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(s_complex)
    def test_axioms(self, S):
        rho = rho_q_analytic(S)
        assert rho.basis is BasisTag.Jx
        rho.validate()

    def test_domain(self):
        with pytest.raises(DomainError):
            rho_q_analytic(1.01)

    def test_validate_rejects(self):
        with pytest.raises(DensityError):
            QubitDensity(np.diag([1.1, 0, 0, 0])).validate()
        with pytest.raises(DensityError):
            QubitDensity(np.diag([1.5, -0.5, 0, 0])).validate()
        with pytest.raises(DensityError):
            QubitDensity(np.eye(3) / 3).validate()
        m = np.diag([0.5, 0.5, 0, 0]).astype(complex)
        m[0, 1] = 0.1j
        with pytest.raises(DensityError):
            QubitDensity(m).validate()


class TestTauFQ:
    def test_pure(self):
        assert tau_fq(rho_q_analytic(1)).value == pytest.approx(0, abs=1e-15)

    def test_plateau(self):
        assert tau_fq(rho_q_analytic(0)).value == pytest.approx(0.75, abs=1e-15)

    def test_maximally_mixed(self):
        v = tau_fq(QubitDensity(np.eye(4) / 4)).value
        assert v == pytest.approx(1.5) and v <= FQ_BOUND

    def test_analytic_endpoints(self):
        assert tau_fq_analytic(1).value == 0
        assert tau_fq_analytic(0).value == 0.75

    def test_identity_grid(self):
        for s in np.linspace(0, 1, 11):
            assert abs(tau_fq_analytic(s).value - tau_fq(rho_q_analytic(s)).value) < 1e-12

    def test_vectorised(self):
        s = np.linspace(0, 1, 5)
        assert np.allclose(tau_fq_curve(s), [tau_fq_analytic(x).value for x in s])


class TestInverter:
    def test_maximally_mixed(self):
        assert np.allclose(state_inverter(np.eye(8) / 8), 3 / 8 * np.eye(8))

    def test_pure_state_oracle(self):
        # for pure |psi>, Tr(rho rho~) = 2 (1 - Tr rho_A^2)
        rng = np.random.default_rng(7)
        for _ in range(20):
            psi = rng.normal(size=8) + 1j * rng.normal(size=8)
            psi /= np.linalg.norm(psi)
            rho = np.outer(psi, psi.conj())
            rho_a, _ = partial_traces(rho, 0)
            lhs = np.trace(rho @ state_inverter(rho, 0)).real
            assert lhs == pytest.approx(2 * (1 - np.trace(rho_a @ rho_a).real), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_overlap_nonnegative(self, seed, rank):
        rho = random_density(np.random.default_rng(seed), rank=rank)
        v = dicke_to_product()
        rho8 = v @ rho @ v.conj().T
        assert np.trace(rho8 @ state_inverter(rho8)).real >= -1e-12

    def test_partial_traces_normalised(self):
        rho = rho_q_analytic(0.4).embed()
        a, b = partial_traces(rho, 1)
        assert np.trace(a).real == pytest.approx(1) and np.trace(b).real == pytest.approx(1)
        with pytest.raises(ValueError):
            partial_traces(np.eye(4) / 4)


class TestM:
    def test_origin(self):
        m, lam = m_matrix(0)
        assert np.allclose(m, np.diag([2, -0.5, -1 / 3]) / 3)
        assert np.allclose(np.linalg.eigvalsh(m), sorted([2 / 3, -1 / 6, -1 / 9]))
        assert lam == pytest.approx(-1 / 6, abs=1e-15)

    @pytest.mark.parametrize("s", [0, 0.25, 0.5, 0.75, 1])
    def test_lambda_min(self, s):
        m, lam = m_matrix(s)
        assert np.array_equal(m, m.T)
        assert abs(lam - lambda_min_closed(s)) < 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            m_matrix(1.5)


class TestTauAB:
    def test_endpoints(self):
        assert tau_ab(mode="analytic", S=1).value == pytest.approx(1, abs=1e-15)
        assert tau_ab(mode="analytic", S=0).value == pytest.approx(5 / 8, abs=1e-15)

    def test_minimum_oracle(self):
        res = minimize_scalar(tau_ab_curve, bounds=(0, 1), method="bounded", options={"xatol": 1e-10})
        assert res.fun == pytest.approx(5 / 8, abs=1e-12)
        assert res.x < 1e-4

    @settings(max_examples=60, deadline=None)
    @given(s_complex)
    def test_no_sudden_death(self, S):
        assert tau_ab(mode="analytic", S=S).value >= 5 / 8 - 1e-15

    @settings(max_examples=40, deadline=None)
    @given(s_complex)
    def test_semianalytic_equals_closed_form(self, S):
        assert abs(tau_ab(rho_q_analytic(S)).value - tau_ab_curve(S)) < 1e-10

    @pytest.mark.parametrize("qubit", [0, 1, 2])
    def test_permutation_invariance(self, qubit):
        # symmetric states: the choice of the single qubit does not matter
        for s in (0.0, 0.3, 0.8):
            rho = rho_q_analytic(s)
            assert tau_ab(rho, qubit=qubit).value == pytest.approx(tau_ab(rho, qubit=0).value, abs=1e-13)

    def test_jz_tagged_input(self):
        rho = rho_q_analytic(0.6).to(BasisTag.Jz)
        assert tau_ab(rho).value == pytest.approx(tau_ab_curve(0.6), abs=1e-12)

    def test_extract_S(self):
        S = 0.3 - 0.4j
        assert abs(extract_S(rho_q_analytic(S)) - S) < 1e-14

    def test_out_of_family(self):
        with pytest.raises(PatternError, match="rank-2"):
            tau_ab(QubitDensity(np.eye(4) / 4, BasisTag.Jx))

    def test_mode_errors(self):
        with pytest.raises(ValueError):
            tau_ab(mode="analytic")
        with pytest.raises(ValueError):
            tau_ab()
        with pytest.raises(ValueError):
            tau_ab(rho_q_analytic(0), mode="other")

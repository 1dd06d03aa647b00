import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcausal import causal, quantum
from qcausal.causal import (
    CausalChoi,
    build_scenario,
    causal_map_from_circuit,
    dephasing,
    induced_state_given_b,
    induced_state_given_c,
    induced_state_given_d,
    joint_distribution,
    partial_swap,
    predict_probability,
    random_probabilistic_mixture,
)
from qcausal.quantum import DensityOperator, SWAP_4, pauli_projector


class TestPartialSwap:
    def test_unitary(self):
        for theta in (-np.pi / 2, 0.3, np.pi / 2, 2.0):
            u = partial_swap(theta)
            assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-12)

    def test_endpoints(self):
        assert np.allclose(partial_swap(0.0), np.eye(4))
        u = partial_swap(np.pi)
        phase = u[0, 0]
        assert np.allclose(u / phase, SWAP_4, atol=1e-12)

    def test_half_swap_form(self):
        # theta = -pi/2 is (1 + i SWAP)/sqrt(2) up to the global phase e^{-i pi/4}
        u = partial_swap(-np.pi / 2)
        target = (np.eye(4) + 1j * SWAP_4) / np.sqrt(2)
        assert np.allclose(u / np.exp(-1j * np.pi / 4), target, atol=1e-12)


class TestDephasing:
    def test_kills_off_diagonals(self):
        ch = dephasing((0, 0, 1))
        rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        assert np.allclose(ch.apply_matrix(rho), np.eye(2) / 2)

    def test_fixes_basis_states(self):
        ch = dephasing((1, 0, 0))
        plus = quantum.ket_dm(np.array([1, 1]) / np.sqrt(2))
        assert np.allclose(ch.apply_matrix(plus), plus)

    def test_requires_unit_vector(self):
        with pytest.raises(ValueError):
            dephasing((0, 0, 2))


class TestScenarios:
    @pytest.mark.parametrize("sid", causal.SCENARIO_IDS)
    def test_all_valid(self, sid):
        tau = build_scenario(sid)
        assert tau.tau.factors == causal.CBD_FACTORS
        assert abs(np.trace(tau.mat).real - 1.0) < 1e-10

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            build_scenario("nope")

    def test_epsmix_eps_range(self):
        with pytest.raises(ValueError):
            build_scenario("epsmix", eps=1.5)

    def test_epsmix_zero_is_probq(self):
        assert np.allclose(build_scenario("epsmix", eps=0.0).mat,
                           build_scenario("probq").mat, atol=1e-12)

    def test_probc_is_diagonal(self):
        m = build_scenario("probc").mat
        assert np.max(np.abs(m - np.diag(np.diag(m)))) < 1e-12

    def test_json_roundtrip(self):
        tau = build_scenario("coh")
        again = CausalChoi.from_json(tau.to_json())
        assert np.allclose(again.mat, tau.mat, atol=1e-15)

    def test_no_retro_rejects_signalling(self):
        # correlating C directly with the later input D would be retrocausal
        kets = (quantum.KET_H, quantum.KET_V)
        m = np.zeros((8, 8), dtype=complex)
        for d in range(2):
            blk = np.kron(np.kron(quantum.ket_dm(kets[d]), np.eye(2) / 2),
                          quantum.ket_dm(kets[d]))
            m += 0.5 * blk
        with pytest.raises(quantum.StateValidationError):
            CausalChoi(DensityOperator(m, causal.CBD_FACTORS))

    def test_circuit_requires_two_qubit_gate(self):
        with pytest.raises(quantum.ShapeMismatchError):
            causal_map_from_circuit(quantum.bell_phi_plus(("C", "E")),
                                    quantum.identity_channel(2))


class TestInducedStates:
    def test_given_d_trace_one(self):
        tau = build_scenario("coh")
        for outcome in (+1, -1):
            st_cb = induced_state_given_d(tau, pauli_projector("z", outcome))
            assert st_cb.factors == (("C", 2), ("B", 2))

    def test_given_d_known_state(self):
        # coherent mixture, prepare |H> on D: 3/4 |psi><psi| + 1/4 |VH><VH|
        tau = build_scenario("coh")
        st_cb = induced_state_given_d(tau, pauli_projector("z", +1))
        psi = (2 * np.kron(quantum.KET_H, quantum.KET_H)
               + np.exp(1j * np.pi / 4) * np.sqrt(2) * np.kron(quantum.KET_V, quantum.KET_V)) / np.sqrt(6)
        vh = np.kron(quantum.KET_V, quantum.KET_H)
        target = 0.75 * quantum.ket_dm(psi) + 0.25 * quantum.ket_dm(vh)
        assert np.allclose(st_cb.mat, target, atol=1e-10)

    def test_conditional_probabilities_sum(self):
        tau = build_scenario("probq")
        _, p_h = induced_state_given_b(tau, pauli_projector("x", +1))
        _, p_v = induced_state_given_b(tau, pauli_projector("x", -1))
        assert p_h + p_v == pytest.approx(1.0, abs=1e-10)

    def test_zero_probability_conditioning(self):
        # pure |H> on C: conditioning C on |V> is impossible
        phi = quantum.bell_phi_plus(("B", "D")).mat
        m = np.kron(quantum.ket_dm(quantum.KET_H), phi)
        tau = CausalChoi(DensityOperator(m, causal.CBD_FACTORS))
        with pytest.raises(causal.ConditioningError):
            induced_state_given_c(tau, pauli_projector("z", -1))


class TestPredictions:
    @pytest.mark.parametrize("sid", causal.SCENARIO_IDS)
    def test_joint_normalized(self, sid):
        tau = build_scenario(sid)
        p = joint_distribution(tau, "x", "y", "z")
        assert p.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(p >= -1e-12)

    def test_joint_matches_pointwise(self):
        tau = build_scenario("coh")
        p = joint_distribution(tau, "z", "x", "y")
        for ci in range(2):
            for di in range(2):
                for bi in range(2):
                    cond = predict_probability(tau, "z", "x", "y",
                                               1 - 2 * ci, 1 - 2 * bi, 1 - 2 * di)
                    assert p[ci, di, bi] == pytest.approx(cond / 2, abs=1e-12)

    def test_uniform_d_marginal(self):
        p = joint_distribution(build_scenario("physc"), "x", "z", "y")
        assert np.allclose(p.sum(axis=(0, 2)), [0.5, 0.5], atol=1e-10)


class TestRandomMixtures:
    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_always_valid(self, seed):
        tau = random_probabilistic_mixture(np.random.default_rng(seed))
        # construction passed CausalChoi validation (trace, PSD, no-retro)
        assert abs(np.trace(tau.mat).real - 1.0) < 1e-10

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcausal import quantum
from qcausal.quantum import (
    DensityOperator,
    KrausChannel,
    bell_phi_plus,
    channel_of_choi,
    choi_of_channel,
    fidelity,
    identity_channel,
    ket_dm,
    pauli_projector,
    unitary_channel,
)


def random_channel(rng, n_kraus=4):
    v = rng.standard_normal((2 * n_kraus, 2)) + 1j * rng.standard_normal((2 * n_kraus, 2))
    v, _ = np.linalg.qr(v)
    return KrausChannel(tuple(v[2 * k:2 * k + 2, :] for k in range(n_kraus)))


def random_state(rng, labels=("A",)):
    n = 2 ** len(labels)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real, tuple((lbl, 2) for lbl in labels))


class TestProjectors:
    def test_completeness(self):
        for axis in quantum.PAULI_AXES:
            s = pauli_projector(axis, +1) + pauli_projector(axis, -1)
            assert np.allclose(s, np.eye(2))

    def test_eigenvector(self):
        for axis in quantum.PAULI_AXES:
            p = pauli_projector(axis, -1)
            assert np.allclose(quantum.SIGMA[axis] @ p, -p)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            pauli_projector("w", 1)
        with pytest.raises(ValueError):
            pauli_projector("x", 0)


class TestDensityOperator:
    def test_rejects_unnormalized(self):
        with pytest.raises(quantum.StateValidationError):
            DensityOperator(np.eye(2, dtype=complex), (("A", 2),))

    def test_rejects_negative(self):
        with pytest.raises(quantum.StateValidationError):
            DensityOperator(np.diag([1.5, -0.5]).astype(complex), (("A", 2),))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(quantum.ShapeMismatchError):
            DensityOperator(np.eye(2, dtype=complex) / 2, (("A", 2), ("B", 2)))

    def test_marginal_of_bell_is_mixed(self):
        rho = bell_phi_plus(("C", "E")).marginal("C")
        assert rho.factors == (("C", 2),)
        assert np.allclose(rho.mat, np.eye(2) / 2)
        assert rho.purity() == pytest.approx(0.5)

    def test_bell_is_pure(self):
        assert bell_phi_plus().purity() == pytest.approx(1.0)


class TestChannels:
    def test_trace_preservation_enforced(self):
        with pytest.raises(quantum.StateValidationError):
            KrausChannel((0.5 * np.eye(2),))

    def test_sub_normalized_allowed(self):
        ch = KrausChannel((0.5 * np.eye(2),), sub_normalized=True)
        assert np.allclose(ch.apply_matrix(np.eye(2) / 2), np.eye(2) / 8)

    def test_unitary_preserves_purity(self):
        rng = np.random.default_rng(10)
        u = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
        rho = random_state(rng)
        out = quantum.apply_channel(unitary_channel(u), rho)
        assert out.purity() == pytest.approx(rho.purity(), abs=1e-10)

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_channel_preserves_trace_and_psd(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_channel(rng)
        rho = random_state(rng)
        out = quantum.apply_channel(ch, rho)   # validation inside asserts PSD/trace
        assert abs(np.trace(out.mat).real - 1.0) < 1e-10

    def test_mix_channels(self):
        flip = unitary_channel(quantum.SIGMA["x"])
        mixed = quantum.mix_channels([identity_channel(2), flip], [0.5, 0.5])
        out = mixed.apply_matrix(ket_dm(quantum.KET_H))
        assert np.allclose(out, np.eye(2) / 2)

    def test_compose_is_sequential(self):
        flip = unitary_channel(quantum.SIGMA["x"])
        twice = quantum.compose_channels(flip, flip)
        rho = ket_dm(quantum.KET_H)
        assert np.allclose(twice.apply_matrix(rho), rho)


class TestChoi:
    def test_identity_choi_is_bell(self):
        tau = choi_of_channel(identity_channel(2), "B", "A")
        assert np.allclose(tau.mat, bell_phi_plus().mat)
        assert tau.factors == (("B", 2), ("A", 2))

    def test_input_marginal_is_mixed(self):
        rng = np.random.default_rng(11)
        tau = choi_of_channel(random_channel(rng), "B", "A")
        assert np.allclose(tau.marginal("A").mat, np.eye(2) / 2, atol=1e-10)

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_channel_choi_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_channel(rng)
        tau = choi_of_channel(ch, "B", "A")
        evaluate = channel_of_choi(tau, "A")
        rho = random_state(rng).mat
        assert np.allclose(evaluate(rho), ch.apply_matrix(rho), atol=1e-10)


class TestFidelity:
    def test_self_fidelity(self):
        rng = np.random.default_rng(12)
        rho = random_state(rng, ("A", "B"))
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_states(self):
        h = DensityOperator(ket_dm(quantum.KET_H), (("A", 2),))
        v = DensityOperator(ket_dm(quantum.KET_V), (("A", 2),))
        assert fidelity(h, v) == pytest.approx(0.0, abs=1e-12)

    def test_pure_vs_mixed(self):
        h = DensityOperator(ket_dm(quantum.KET_H), (("A", 2),))
        mixed = DensityOperator(np.eye(2, dtype=complex) / 2, (("A", 2),))
        assert fidelity(h, mixed) == pytest.approx(0.5, abs=1e-10)

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng), random_state(rng)
        f = fidelity(a, b)
        assert 0.0 <= f <= 1.0
        assert f == pytest.approx(fidelity(b, a), abs=1e-9)

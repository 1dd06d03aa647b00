"""Quantum-information primitives: states, Pauli observables, channels, Choi.

Conventions: the qubit basis is (|H>, |V>), the sigma_z eigenbasis, and every
transpose is taken in that basis.  Choi states are unit-trace, built from the
symmetric maximally entangled state with the output factor listed first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matlin
from .matlin import Factors, as_factors, hermitize, partial_trace, partial_transpose, tensor_product

TRACE_ATOL = 1e-10
HERM_ATOL = 1e-12
EIG_FLOOR = -1e-10

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_AXES = ("x", "y", "z")

IDENTITY_2 = np.eye(2, dtype=complex)
SWAP_4 = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]], dtype=complex)


class ShapeMismatchError(ValueError):
    pass


class StateValidationError(ValueError):
    pass


def ket_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def pauli_projector(axis: str, outcome: int) -> np.ndarray:
    """Rank-1 projector onto the +1 or -1 eigenstate of a Pauli observable."""
    if axis not in SIGMA:
        raise ValueError(f"axis must be one of {PAULI_AXES}, got {axis!r}")
    if outcome not in (+1, -1):
        raise ValueError("outcome must be +1 or -1")
    return hermitize((IDENTITY_2 + outcome * SIGMA[axis]) / 2)


@dataclass(frozen=True)
class DensityOperator:
    """Trace-one PSD operator over labeled qubit factors."""

    mat: np.ndarray
    factors: Factors

    def __post_init__(self):
        factors = as_factors(self.factors)
        object.__setattr__(self, "factors", factors)
        mat = np.asarray(self.mat, dtype=complex)
        object.__setattr__(self, "mat", mat)
        n = matlin.total_dim(factors)
        if mat.shape != (n, n):
            raise ShapeMismatchError(f"matrix shape {mat.shape} vs factors {factors}")
        if not matlin.is_hermitian(mat, atol=1e-9):
            raise StateValidationError("density operator is not Hermitian")
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > 1e-8:
            raise StateValidationError(f"trace {tr} != 1")
        w = np.linalg.eigvalsh(mat)
        if float(np.min(w)) < EIG_FLOOR * 10:
            raise StateValidationError(f"negative eigenvalue {np.min(w):g}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.factors)

    def marginal(self, keep: str) -> "DensityOperator":
        m, f = self.mat, self.factors
        for lbl in self.labels:
            if lbl != keep:
                m, f = partial_trace(m, f, lbl)
        return DensityOperator(m, f)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


def bell_phi_plus(labels=("C", "E")) -> DensityOperator:
    """|Phi+><Phi+| with |Phi+> = (|HH> + |VV>)/sqrt(2)."""
    psi = (np.kron(KET_H, KET_H) + np.kron(KET_V, KET_V)) / np.sqrt(2)
    return DensityOperator(ket_dm(psi), tuple((lbl, 2) for lbl in labels))


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive map stored as a Kraus collection.

    Trace preservation (sum K^dag K = 1) is checked unless the channel is
    flagged sub-normalized, as for conditioned (trace-non-increasing) maps.
    """

    kraus_ops: tuple[np.ndarray, ...]
    sub_normalized: bool = False

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("need at least one Kraus operator")
        object.__setattr__(self, "kraus_ops", ops)
        s = sum(k.conj().T @ k for k in ops)
        eye = np.eye(ops[0].shape[1])
        if self.sub_normalized:
            if np.max(np.linalg.eigvalsh(hermitize(s - eye))) > TRACE_ATOL * 10:
                raise StateValidationError("sub-normalized channel with sum K^dag K > 1")
        elif np.max(np.abs(s - eye)) > TRACE_ATOL:
            raise StateValidationError("channel is not trace-preserving")

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        if rho.shape != (self.dim_in, self.dim_in):
            raise ShapeMismatchError(f"input shape {rho.shape}, channel expects {self.dim_in}")
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),))


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),))


def compose_channels(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """outer after inner."""
    ops = tuple(a @ b for a in outer.kraus_ops for b in inner.kraus_ops)
    return KrausChannel(ops, sub_normalized=outer.sub_normalized or inner.sub_normalized)


def tensor_channels(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    ops = tuple(np.kron(ka, kb) for ka in a.kraus_ops for kb in b.kraus_ops)
    return KrausChannel(ops, sub_normalized=a.sub_normalized or b.sub_normalized)


def mix_channels(channels, weights) -> KrausChannel:
    """Probabilistic mixture: Kraus union with sqrt(weight) prefactors."""
    ops = []
    for ch, w in zip(channels, weights):
        ops.extend(np.sqrt(w) * k for k in ch.kraus_ops)
    return KrausChannel(tuple(ops))


def apply_channel(ch: KrausChannel, rho: DensityOperator, out_labels=None) -> DensityOperator:
    """Apply a channel to a full density operator (matching total dimension)."""
    out = ch.apply_matrix(rho.mat)
    if out_labels is None:
        factors = rho.factors
    else:
        factors = tuple((lbl, 2) for lbl in out_labels)
    return DensityOperator(hermitize(out), factors)


def choi_of_channel(ch: KrausChannel, out_label: str = "B", in_label: str = "A") -> DensityOperator:
    """Unit-trace Choi state (E x I)(|Phi+><Phi+|), output factor first."""
    d = ch.dim_in
    if d != 2:
        raise ValueError("only qubit-input channels are needed here")
    phi = bell_phi_plus(("in1", "in2")).mat
    lifted = tuple(np.kron(k, np.eye(d)) for k in ch.kraus_ops)
    tau = sum(k @ phi @ k.conj().T for k in lifted)
    return DensityOperator(hermitize(tau), ((out_label, ch.dim_out), (in_label, d)))


def channel_of_choi(tau: DensityOperator, input_label: str):
    """Map evaluator E(rho) = d * Tr_in[tau (1 x T(rho))] from a Choi state.

    Emits a warning-level diagnostic (returned flag on the evaluator) when the
    input marginal deviates from 1/2, as fitted states may.
    """
    import warnings

    d = dict(tau.factors)[input_label]
    marg = tau.marginal(input_label).mat
    if np.max(np.abs(marg - np.eye(d) / d)) > 1e-8:
        warnings.warn("Choi input marginal deviates from the maximally mixed state; "
                      "the induced map is not exactly trace-preserving")
    out_labels = [lbl for lbl in tau.labels if lbl != input_label]
    mat, factors = matlin.reorder(tau.mat, tau.factors, out_labels + [input_label])
    n_out = matlin.total_dim(as_factors([f for f in factors if f[0] != input_label]))

    def evaluate(rho_in: np.ndarray) -> np.ndarray:
        if rho_in.shape != (d, d):
            raise ShapeMismatchError("input dimension mismatch")
        op = np.kron(np.eye(n_out), rho_in.T)
        prod = mat @ op
        out, _ = partial_trace(prod, factors, input_label)
        return d * out

    return evaluate


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2."""
    if rho.factors != sigma.factors:
        raise ShapeMismatchError(f"factor mismatch {rho.factors} vs {sigma.factors}")
    r = matlin.psd_sqrt(rho.mat)
    inner = hermitize(r @ sigma.mat @ r)
    w, _ = matlin.hermitian_eigs(inner)
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)

"""Two-qubit causal relations: circuits, their Choi states, induced states.

A causal relation between a pre-intervention system C, a repreparation D and
a later system B is represented by the tripartite Choi state tau_CBD of the
map from D to (C, B).  The four reference circuits share a single structure:
C and E start in |Phi+>, a gate takes the (D, E) wire pair to (B, F), and F
is discarded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import matlin, quantum
from .matlin import hermitize, partial_trace, partial_transpose, reorder, tensor_product
from .quantum import (
    DensityOperator,
    KrausChannel,
    SIGMA,
    SWAP_4,
    bell_phi_plus,
    ket_dm,
    mix_channels,
    pauli_projector,
    unitary_channel,
)

NO_RETRO_ATOL = 1e-8
SCENARIO_IDS = ("probc", "physc", "probq", "coh", "epsmix")

CBD_FACTORS = (("C", 2), ("B", 2), ("D", 2))


class ConditioningError(ValueError):
    """Conditioning on an outcome of (numerically) zero probability."""


@dataclass(frozen=True)
class CausalChoi:
    """Choi state tau_CBD of a trace-preserving causal map from D to (C, B)."""

    tau: DensityOperator

    def __post_init__(self):
        if self.tau.factors != CBD_FACTORS:
            raise quantum.ShapeMismatchError(f"expected factors {CBD_FACTORS}")
        marg, f = partial_trace(self.tau.mat, self.tau.factors, "B")
        rho_c, _ = partial_trace(marg, f, "D")
        target = np.kron(rho_c, np.eye(2) / 2)
        if np.max(np.abs(marg - target)) > NO_RETRO_ATOL:
            raise quantum.StateValidationError(
                "no-retrocausation violated: Tr_B(tau) != rho_C x 1/2")

    @property
    def mat(self) -> np.ndarray:
        return self.tau.mat

    def to_json(self) -> str:
        m = self.tau.mat
        return json.dumps({
            "labels": ["C", "B", "D"],
            "dim": 8,
            "re": m.real.tolist(),
            "im": m.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "CausalChoi":
        data = json.loads(text)
        m = np.array(data["re"]) + 1j * np.array(data["im"])
        return cls(DensityOperator(m, CBD_FACTORS))


def partial_swap(theta: float) -> np.ndarray:
    """Unitary interpolating identity (theta=0) and swap (theta=pi) on two wires.

    Implements exp(i theta/2) (cos(theta/2) 1x1 - i sin(theta/2) SWAP); at
    theta = -pi/2 this is (1x1 + i SWAP)/sqrt(2) up to a global phase.
    """
    half = theta / 2.0
    u = np.exp(1j * half) * (np.cos(half) * np.eye(4) - 1j * np.sin(half) * SWAP_4)
    return u


def dephasing(axis_unit_vector) -> KrausChannel:
    """Complete dephasing in the eigenbasis of n.sigma."""
    n = np.asarray(axis_unit_vector, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("dephasing axis must be a unit vector")
    nsigma = n[0] * SIGMA["x"] + n[1] * SIGMA["y"] + n[2] * SIGMA["z"]
    s = 1 / np.sqrt(2)
    return KrausChannel((s * np.eye(2, dtype=complex), s * nsigma))


def _dephase_gate(u: np.ndarray, pre_d, pre_e, post_b) -> KrausChannel:
    """Wrap a (D,E)->(B,F) unitary in dephasing channels on D, E and B."""
    pre = quantum.tensor_channels(dephasing(pre_d), dephasing(pre_e))
    post = quantum.tensor_channels(dephasing(post_b), quantum.identity_channel(2))
    return quantum.compose_channels(post, quantum.compose_channels(unitary_channel(u), pre))


def causal_map_from_circuit(rho_ce: DensityOperator, gate: KrausChannel) -> CausalChoi:
    """Choi state of Tr_F o E_BF|DE( . x rho_CE ), fed with half of |Phi+> on D."""
    if gate.dim_in != 4 or gate.dim_out != 4:
        raise quantum.ShapeMismatchError("gate must act on the two-qubit (D,E) pair")
    if rho_ce.labels != ("C", "E"):
        raise quantum.ShapeMismatchError("initial state must carry labels (C, E)")
    lifted = [np.kron(np.eye(2), k) for k in gate.kraus_ops]
    blocks = {}
    for j, k in product(range(2), repeat=2):
        sigma = np.zeros((2, 2), dtype=complex)
        sigma[j, k] = 1.0
        inp, f = tensor_product(sigma, (("Dp", 2),), rho_ce.mat, rho_ce.factors)
        inp, f = reorder(inp, f, ("C", "Dp", "E"))
        out = sum(w @ inp @ w.conj().T for w in lifted)
        out, fo = partial_trace(out, (("C", 2), ("B", 2), ("F", 2)), "F")
        blocks[(j, k)] = out
    tau = np.zeros((8, 8), dtype=complex)
    for (j, k), block in blocks.items():
        ejk = np.zeros((2, 2), dtype=complex)
        ejk[j, k] = 1.0
        tau += 0.5 * np.kron(block, ejk)
    return CausalChoi(DensityOperator(hermitize(tau), CBD_FACTORS))


def _tau_probq() -> np.ndarray:
    phi = bell_phi_plus(("a", "b")).mat
    ce = np.kron(np.eye(2) / 2, phi)          # C x Phi+_BD
    cc_m, f = tensor_product(phi, (("C", 2), ("B", 2)), np.eye(2) / 2, (("D", 2),))
    return 0.5 * ce + 0.5 * cc_m


def _tau_epsmix(eps: float) -> np.ndarray:
    """Probabilistic blend of the ProbQ map with a z-basis physically mixed term."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    kets = (quantum.KET_H, quantum.KET_V)
    xor = np.zeros((8, 8), dtype=complex)
    for c, b, d in product(range(2), repeat=3):
        if b != c ^ d:
            continue
        cell = np.kron(np.kron(ket_dm(kets[c]), ket_dm(kets[b])), ket_dm(kets[d]))
        xor += 0.25 * cell                     # u(c) u(d) delta_{b, c xor d}
    mixed = np.kron(np.eye(4) / 4, np.eye(2) / 2)
    return (1 - eps) * _tau_probq() + eps * (0.5 * mixed + 0.5 * xor)


def build_scenario(scenario: str, eps: float = 0.1) -> CausalChoi:
    """Reference causal relations; all share rho_CE = |Phi+> and differ by gate."""
    scenario = scenario.lower()
    rho_ce = bell_phi_plus(("C", "E"))
    u = partial_swap(-np.pi / 2)
    if scenario == "coh":
        gate = unitary_channel(u)
    elif scenario == "probq":
        gate = mix_channels([unitary_channel(np.eye(4)), unitary_channel(SWAP_4)], [0.5, 0.5])
    elif scenario == "probc":
        gate = _dephase_gate(u, (0, 0, 1), (0, 0, 1), (0, 0, 1))
    elif scenario == "physc":
        # The opposite swap phase gives the anti-correlated XOR form of this
        # map; with theta = -pi/2 the correlations come out sign-exchanged.
        gate = _dephase_gate(partial_swap(np.pi / 2), (0, 1, 0), (1, 0, 0), (0, 0, 1))
    elif scenario == "epsmix":
        return CausalChoi(DensityOperator(_tau_epsmix(eps), CBD_FACTORS))
    else:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIO_IDS}")
    return causal_map_from_circuit(rho_ce, gate)


def random_probabilistic_mixture(rng=None) -> CausalChoi:
    """Random convex combination of a pure cause-effect and a pure
    common-cause relation with matched marginal on C:
    p rho_C x tau_BD + (1 - p) tau_CB x 1/2, rho_C = Tr_B(tau_CB).
    """
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    tau_cb = g @ g.conj().T
    tau_cb = tau_cb / np.trace(tau_cb).real
    rho_c, _ = partial_trace(tau_cb, (("C", 2), ("B", 2)), "B")
    # random qubit channel D -> B from a Haar-ish isometry into B x env
    v = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
    v, _ = np.linalg.qr(v)
    kraus = tuple(v[2 * k:2 * k + 2, :] for k in range(4))
    tau_bd = quantum.choi_of_channel(quantum.KrausChannel(kraus), "B", "D").mat
    p = float(rng.uniform())
    ce = np.kron(rho_c, tau_bd)                               # (C, B, D)
    cc, _ = tensor_product(tau_cb, (("C", 2), ("B", 2)), np.eye(2) / 2, (("D", 2),))
    return CausalChoi(DensityOperator(hermitize(p * ce + (1 - p) * cc), CBD_FACTORS))


def _project_and_trace(tau: CausalChoi, proj: np.ndarray, wire: str):
    ops = {lbl: np.eye(2, dtype=complex) for lbl in ("C", "B", "D")}
    ops[wire] = proj
    big = np.kron(np.kron(ops["C"], ops["B"]), ops["D"])
    weighted = big @ tau.mat
    prob = float(np.trace(weighted).real)
    reduced, f = partial_trace(weighted, CBD_FACTORS, wire)
    return reduced, f, prob


def induced_state_given_b(tau: CausalChoi, proj_b: np.ndarray):
    """Conditional state on (C, D) after finding outcome Pi_b on B."""
    reduced, f, prob = _project_and_trace(tau, proj_b, "B")
    if prob < 1e-12:
        raise ConditioningError("outcome probability vanishes")
    return DensityOperator(hermitize(reduced / prob), f), prob


def induced_state_given_c(tau: CausalChoi, proj_c: np.ndarray):
    """Conditional state on (B, D) after finding outcome Pi_c on C."""
    reduced, f, prob = _project_and_trace(tau, proj_c, "C")
    if prob < 1e-12:
        raise ConditioningError("outcome probability vanishes")
    return DensityOperator(hermitize(reduced / prob), f), prob


def induced_state_given_d(tau: CausalChoi, proj_d: np.ndarray) -> DensityOperator:
    """State on (C, B) prepared by feeding Pi_d into the causal map."""
    big = np.kron(np.eye(4, dtype=complex), proj_d.T)
    weighted = 2.0 * (tau.mat @ big)
    reduced, f = partial_trace(weighted, CBD_FACTORS, "D")
    return DensityOperator(hermitize(reduced), f)


def predict_probability(tau: CausalChoi, s: str, t: str, u: str,
                        c: int, b: int, d: int) -> float:
    """P(c, b | d; s, t, u): measure sigma_s on C, sigma_u on B, prepare the
    d eigenstate of sigma_t on D."""
    td_tau = partial_transpose(tau.mat, CBD_FACTORS, "D")
    op = np.kron(np.kron(pauli_projector(s, c), pauli_projector(u, b)),
                 pauli_projector(t, d))
    return float((2.0 * np.trace(td_tau @ op)).real)


def joint_distribution(tau: CausalChoi, s: str, t: str, u: str) -> np.ndarray:
    """Joint P(c, d, b) under uniform preparation P(d) = 1/2.

    Indexed [ci, di, bi] with index 0 for outcome +1 and 1 for outcome -1.
    """
    td_tau = partial_transpose(tau.mat, CBD_FACTORS, "D")
    out = np.empty((2, 2, 2))
    for ci, di, bi in product(range(2), repeat=3):
        c, d, b = 1 - 2 * ci, 1 - 2 * di, 1 - 2 * bi
        op = np.kron(np.kron(pauli_projector(s, c), pauli_projector(u, b)),
                     pauli_projector(t, d))
        out[ci, di, bi] = float(np.trace(td_tau @ op).real)
    return out

"""Witnesses and classification of two-qubit causal relations.

Three witness families: pathway negativities (entanglement of the induced
states), the covariance witness C_CD that vanishes on every probabilistic
mixture of cause-effect and common-cause, and the Berkson-type test (induced
entanglement between C and D for every outcome on B).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import causal, matlin
from .causal import CausalChoi
from .quantum import DensityOperator, pauli_projector

NEG_FLOOR = 1e-12
DEFAULT_THRESHOLD = 1e-6
DEFAULT_CCD_SETTINGS = ("x", "y", "z")

CLASS_LABELS = ("ProbC", "PhysC", "ProbQ", "PhysQ", "Coh")


def negativity(rho: DensityOperator, over: str) -> float:
    """Entanglement negativity (trace norm of the partial transpose - 1)/2."""
    if len(rho.factors) != 2:
        raise ValueError("negativity is defined here for bipartite states")
    pt = matlin.partial_transpose(rho.mat, rho.factors, over)
    n = 0.5 * (matlin.trace_norm(pt) - 1.0)
    return 0.0 if n < NEG_FLOOR else float(n)


def _check_normalized(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2, 2, 2):
        raise ValueError("expected a (c, d, b) array of shape (2, 2, 2)")
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError(f"distribution sums to {p.sum()}, not 1")
    return p


def witness_ccd_from_distribution(p: np.ndarray) -> float:
    """Covariance form 2 sum_b b P(b)^2 cov(c, d | b).

    p is indexed [ci, di, bi] with index 0 for outcome +1, 1 for -1.
    """
    p = _check_normalized(p)
    sign = np.array([1.0, -1.0])
    pb = p.sum(axis=(0, 1))
    total = 0.0
    for bi in range(2):
        if pb[bi] <= 0:
            continue
        cond = p[:, :, bi] / pb[bi]
        mean_c = float(sign @ cond.sum(axis=1))
        mean_d = float(cond.sum(axis=0) @ sign)
        cov = float(sign @ cond @ sign) - mean_c * mean_d
        total += 2.0 * sign[bi] * pb[bi] ** 2 * cov
    return total


def witness_ccd_product_form(p: np.ndarray) -> float:
    """Equivalent product form 8 sum_b b [P(++b)P(--b) - P(+-b)P(-+b)]."""
    p = _check_normalized(p)
    out = 0.0
    for bi, bsign in enumerate((1.0, -1.0)):
        out += 8.0 * bsign * (p[0, 0, bi] * p[1, 1, bi] - p[0, 1, bi] * p[1, 0, bi])
    return out


def witness_ccd_from_counts(counts: np.ndarray) -> float:
    """C_CD directly from raw count numbers for one fixed (s, t, u) setting.

    counts is indexed like the distribution form.  Identical to normalizing
    the counts first; the overall factor 8 is kept so that all three forms
    agree exactly.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (2, 2, 2):
        raise ValueError("expected a (c, d, b) array of shape (2, 2, 2)")
    total = counts.sum()
    if total <= 0:
        raise ValueError("zero total counts")
    out = 0.0
    for bi, bsign in enumerate((1.0, -1.0)):
        out += bsign * (counts[0, 0, bi] * counts[1, 1, bi]
                        - counts[0, 1, bi] * counts[1, 0, bi])
    return 8.0 * out / total ** 2


def witness_ccd0(p: np.ndarray) -> float:
    """Expectation value sum_{cdb} c d b P(c, d, b); equals C_CD when the
    (c, b) and (d, b) marginals are uniform."""
    p = np.asarray(p, dtype=float)
    sign = np.array([1.0, -1.0])
    return float(np.einsum("cdb,c,d,b->", p, sign, sign, sign))


def distribution_from_choi(tau: CausalChoi, settings=DEFAULT_CCD_SETTINGS) -> np.ndarray:
    """Joint P(c, d, b) generated by a Choi state at Pauli settings (s, t, u)."""
    s, t, u = settings
    joint = causal.joint_distribution(tau, s, t, u)
    return joint


@dataclass(frozen=True)
class Thresholds:
    negativity: float = DEFAULT_THRESHOLD
    ccd: float = DEFAULT_THRESHOLD


@dataclass(frozen=True)
class WitnessReport:
    """All witness values for one causal map plus the resulting class label.

    The pathway tests are sufficient conditions: a flag reports "witnessed at
    these settings", never "proven absent".
    """

    neg_c_bd: dict
    neg_d_cb: dict
    neg_b_cd: dict
    ccd: float
    ccd0: float
    label: str
    thresholds: Thresholds
    ccd_settings: tuple = DEFAULT_CCD_SETTINGS
    stddevs: dict = field(default_factory=dict)

    @property
    def quantum_cause_effect(self) -> bool:
        return min(self.neg_c_bd.values()) > self.thresholds.negativity

    @property
    def quantum_common_cause(self) -> bool:
        return min(self.neg_d_cb.values()) > self.thresholds.negativity

    @property
    def physical_mixture(self) -> bool:
        return abs(self.ccd) > self.thresholds.ccd

    @property
    def berkson(self) -> bool:
        return min(self.neg_b_cd.values()) > self.thresholds.negativity

    def to_json(self) -> str:
        return json.dumps({
            "neg_c_bd": self.neg_c_bd,
            "neg_d_cb": self.neg_d_cb,
            "neg_b_cd": self.neg_b_cd,
            "ccd": self.ccd,
            "ccd0": self.ccd0,
            "ccd_settings": list(self.ccd_settings),
            "label": self.label,
            "thresholds": {"negativity": self.thresholds.negativity,
                           "ccd": self.thresholds.ccd},
            "stddevs": self.stddevs,
        })


def _assign_label(quantum_both: bool, physical: bool, berkson: bool) -> str:
    if berkson and quantum_both:
        return "Coh"
    if quantum_both and physical:
        return "PhysQ"
    if quantum_both:
        return "ProbQ"
    if physical:
        return "PhysC"
    return "ProbC"


def classify(tau: CausalChoi, thresholds: Thresholds | None = None,
             ccd_settings=DEFAULT_CCD_SETTINGS, stddevs: dict | None = None) -> WitnessReport:
    """Evaluate all witnesses in the H/V conditioning bases and label the map.

    ccd_settings picks one member of the covariance-witness family; (x, y, z)
    is the default but a single setting can miss some physical mixtures.
    """
    thresholds = thresholds or Thresholds()
    proj = {"H": pauli_projector("z", +1), "V": pauli_projector("z", -1)}
    neg_c_bd, neg_d_cb, neg_b_cd = {}, {}, {}
    for name, pj in proj.items():
        st_c, _ = causal.induced_state_given_c(tau, pj)
        neg_c_bd[name] = negativity(st_c, "D")
        st_d = causal.induced_state_given_d(tau, pj)
        neg_d_cb[name] = negativity(st_d, "B")
        st_b, _ = causal.induced_state_given_b(tau, pj)
        neg_b_cd[name] = negativity(st_b, "D")
    p = distribution_from_choi(tau, ccd_settings)
    ccd = witness_ccd_from_distribution(p)
    ccd0 = witness_ccd0(p)
    quantum_both = (min(neg_c_bd.values()) > thresholds.negativity
                    and min(neg_d_cb.values()) > thresholds.negativity)
    physical = abs(ccd) > thresholds.ccd
    berkson = min(neg_b_cd.values()) > thresholds.negativity
    return WitnessReport(
        neg_c_bd=neg_c_bd, neg_d_cb=neg_d_cb, neg_b_cd=neg_b_cd,
        ccd=ccd, ccd0=ccd0,
        label=_assign_label(quantum_both, physical, berkson),
        thresholds=thresholds, ccd_settings=tuple(ccd_settings),
        stddevs=stddevs or {},
    )

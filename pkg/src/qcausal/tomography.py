"""Causal tomography: simulate counting experiments and reconstruct the
tripartite Choi state from them.

The full experiment runs all 27 Pauli setting triples (s on C, t for the
repreparation on D, u on B), N/27 runs each, recording the 8 outcome triples.
Reconstruction is weighted least squares over a Cholesky-parametrized PSD
matrix, with a large quadratic penalty enforcing that the fitted map cannot
signal from B back to (C, D).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import matlin, optimize
from .causal import CBD_FACTORS, CausalChoi
from .quantum import DensityOperator, pauli_projector

AXES = ("x", "y", "z")
DEFAULT_RUNS = 200_000


def _axis_index(a) -> int:
    if isinstance(a, str):
        return AXES.index(a)
    return int(a)


@dataclass(frozen=True)
class CountTable:
    """Counts of one full experiment, indexed [s, t, u, c, b, d].

    Setting axes run over (x, y, z); outcome index 0 means +1, 1 means -1.
    ``n_runs`` is the designed total; the recorded counts fluctuate around
    n_runs/27 per setting when Poisson-sampled.
    """

    counts: np.ndarray
    n_runs: int

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (3, 3, 3, 2, 2, 2):
            raise ValueError("expected a (3, 3, 3, 2, 2, 2) count array")
        if np.any(c < 0):
            raise ValueError("negative counts")
        object.__setattr__(self, "counts", c.astype(float))

    def setting(self, s, t, u) -> np.ndarray:
        """(c, b, d) block for one setting triple (axis names or indices)."""
        return self.counts[_axis_index(s), _axis_index(t), _axis_index(u)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["s", "t", "u", "c", "b", "d", "count"])
        for si, ti, ui, ci, bi, di in product(range(3), range(3), range(3),
                                              range(2), range(2), range(2)):
            w.writerow([AXES[si], AXES[ti], AXES[ui],
                        1 - 2 * ci, 1 - 2 * bi, 1 - 2 * di,
                        repr(float(self.counts[si, ti, ui, ci, bi, di]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n_runs: int | None = None) -> "CountTable":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["s", "t", "u", "c", "b", "d", "count"]:
            raise ValueError("unexpected CSV header")
        counts = np.zeros((3, 3, 3, 2, 2, 2))
        for s, t, u, c, b, d, n in rows[1:]:
            idx = (AXES.index(s), AXES.index(t), AXES.index(u),
                   (1 - int(c)) // 2, (1 - int(b)) // 2, (1 - int(d)) // 2)
            counts[idx] = float(n)
        total = int(round(counts.sum())) if n_runs is None else n_runs
        return cls(counts, total)


def _measurement_stack() -> np.ndarray:
    """(216, 64) stack whose row i, dotted with vec(T_D tau), gives
    P(c, b, d | s, t, u) for the i-th (s, t, u, c, b, d) cell."""
    rows = []
    for si, ti, ui, ci, bi, di in product(range(3), range(3), range(3),
                                          range(2), range(2), range(2)):
        op = np.kron(np.kron(pauli_projector(AXES[si], 1 - 2 * ci),
                             pauli_projector(AXES[ui], 1 - 2 * bi)),
                     pauli_projector(AXES[ti], 1 - 2 * di))
        rows.append(op.T.reshape(-1))
    return np.stack(rows)


_MEAS_STACK = _measurement_stack()


def _cell_probabilities(tau_mat: np.ndarray) -> np.ndarray:
    """All 216 values Tr[T_D(tau) Pi_c x Pi_b x T(Pi_d)], flattened."""
    td = matlin.partial_transpose(tau_mat, CBD_FACTORS, "D")
    return np.real(_MEAS_STACK @ td.reshape(-1))


def expected_counts(tau: CausalChoi, n_runs: int = DEFAULT_RUNS) -> CountTable:
    """Noiseless count table: n_runs/27 per setting times the cell probability."""
    cells = _cell_probabilities(tau.mat) * (n_runs / 27.0)
    return CountTable(cells.reshape(3, 3, 3, 2, 2, 2), n_runs)


def sample_counts(tau: CausalChoi, n_runs: int = DEFAULT_RUNS,
                  seed: int | None = None) -> CountTable:
    """Poisson-sample every cell of the expected table independently."""
    rng = np.random.default_rng(seed)
    mean = np.clip(expected_counts(tau, n_runs).counts, 0.0, None)
    return CountTable(rng.poisson(mean).astype(float), n_runs)


@dataclass(frozen=True)
class FitConfig:
    lam: float = 1e7
    eps_cell: float = 0.5
    seed: int | None = None
    restarts: int = 5
    jitter: float = 1e-3
    max_iter: int = 2000
    ftol: float = 1e-6
    gtol: float = 1e-8
    stall_iters: int = 10
    fd_step: float = 1e-6


@dataclass(frozen=True)
class FitResult:
    tau: CausalChoi
    cost: float
    chi2: float
    penalty_residual: float
    n_iter: int
    converged: bool
    params: np.ndarray
    config: FitConfig
    restart_costs: tuple = ()

    def to_json(self) -> str:
        import json
        m = self.tau.mat
        cfg = self.config
        return json.dumps({
            "tau": {"re": m.real.tolist(), "im": m.imag.tolist()},
            "chi2": self.chi2,
            "penalty_residual": self.penalty_residual,
            "cost": self.cost,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "config": {"lam": cfg.lam, "eps_cell": cfg.eps_cell, "seed": cfg.seed,
                       "restarts": cfg.restarts, "jitter": cfg.jitter,
                       "max_iter": cfg.max_iter},
        })


def _batched_psd(params: np.ndarray, dim: int) -> np.ndarray:
    """(m, dim, dim) stack of J^dag J for an (m, dim**2) parameter stack."""
    m = params.shape[0]
    j = np.zeros((m, dim, dim), dtype=complex)
    di = np.arange(dim)
    j[:, di, di] = params[:, :dim]
    rows, cols = np.tril_indices(dim, k=-1)
    off = params[:, dim:].reshape(m, -1, 2)
    j[:, rows, cols] = off[:, :, 0] + 1j * off[:, :, 1]
    return np.conj(np.swapaxes(j, 1, 2)) @ j


def _penalty_residuals(s_mat: np.ndarray, sqrt_lam: float) -> np.ndarray:
    """Deviation of Tr_B(S) from Tr_BD(S) x 1/2, as 32 real numbers."""
    t = s_mat.reshape(2, 2, 2, 2, 2, 2)
    marg = np.trace(t, axis1=1, axis2=4)       # (c, d, c', d')
    rho_c = np.trace(marg, axis1=1, axis2=3)   # (c, c')
    dev = marg - np.einsum("ij,kl->ikjl", rho_c, np.eye(2) / 2)
    flat = dev.reshape(-1)
    return sqrt_lam * np.concatenate([flat.real, flat.imag])


def _batched_penalty(s_stack: np.ndarray, sqrt_lam: float) -> np.ndarray:
    t = s_stack.reshape(-1, 2, 2, 2, 2, 2, 2)
    marg = np.trace(t, axis1=2, axis2=5)
    rho_c = np.trace(marg, axis1=2, axis2=4)
    dev = marg - np.einsum("mij,kl->mikjl", rho_c, np.eye(2) / 2)
    flat = dev.reshape(dev.shape[0], -1)
    return sqrt_lam * np.concatenate([flat.real, flat.imag], axis=1)


def _quadratic_tensors(dim: int):
    """Quadratic-form tensors of the Cholesky parametrization (cached).

    Every model quantity here is linear in S = J^dag J and hence an exact
    quadratic form x^T A x in the parameter vector; precomputing the forms
    gives the optimizer an exact, cheap Jacobian (2 A x per residual row).
    Returns (B_model, B_pen) with shapes (n_cells, n, n) and (32, n, n);
    B_pen is None for the 4-dimensional conditioned-state model.
    """
    if dim in _QUAD_CACHE:
        return _QUAD_CACHE[dim]
    n = dim * dim
    e = np.stack([matlin.cholesky_factor(np.eye(n)[p], dim) for p in range(n)])
    g = np.einsum("pij,qik->pqjk", e.conj(), e)      # S(x) = sum_pq x_p x_q g[p,q]
    if dim == 8:
        gt = np.swapaxes(g.reshape(n, n, 2, 2, 2, 2, 2, 2), 4, 7).reshape(n, n, n)
        b_model = np.real(np.einsum("il,pql->ipq", _MEAS_STACK, gt))
        basis = np.zeros((n, dim, dim), dtype=complex)
        for l in range(n):
            basis[l, l // dim, l % dim] = 1.0
        # the penalty splits re/im and is therefore only real-linear in S
        p_re = _batched_penalty(basis, 1.0)
        p_im = _batched_penalty(1j * basis, 1.0)
        gs = g.reshape(n, n, n)
        b_pen = (np.einsum("lr,pql->rpq", p_re, gs.real)
                 + np.einsum("lr,pql->rpq", p_im, gs.imag))
    else:
        b_model = np.real(np.einsum("il,pql->ipq", _CD_MEAS_STACK, g.reshape(n, n, n)))
        b_pen = None
    _QUAD_CACHE[dim] = (b_model, b_pen)
    return _QUAD_CACHE[dim]


_QUAD_CACHE: dict = {}


def _run_quadratic_fit(a: np.ndarray, const: np.ndarray, x0: np.ndarray,
                       config: "FitConfig") -> optimize.OptimizeResult:
    """LM on residuals r(x) = x^T A_i x + const_i with exact Jacobian."""

    def residual(x):
        return (a @ x) @ x + const

    def jacobian(x):
        return 2.0 * (a @ x)

    return optimize.levenberg_marquardt(
        residual, x0, jacobian=jacobian, max_iter=config.max_iter,
        ftol=config.ftol, gtol=config.gtol, stall_iters=config.stall_iters,
        keep_history=True)


def _cost_flattened(history, tail_frac: float = 0.1, rel: float = 0.01) -> bool:
    """Whether the cost curve gained less than `rel` over its final stretch.

    A fit that hits max_iter while only polishing the last fraction of a
    percent is effectively converged; only genuinely stuck runs fail this.
    """
    if len(history) < 20:
        return False
    tail = history[int((1.0 - tail_frac) * len(history)):]
    return (tail[0] - tail[-1]) < rel * max(tail[-1], 1e-30)


def _psd_clip_scale(mat: np.ndarray, scale: float, floor_frac: float = 1e-6) -> np.ndarray:
    """Clip eigenvalues to a small positive floor and rescale the trace."""
    w, v = matlin.hermitian_eigs(matlin.hermitize(mat))
    w = np.clip(w, floor_frac * scale / mat.shape[0], None)
    out = (v * w) @ v.conj().T
    return matlin.hermitize(out / np.trace(out).real * scale)


def _linear_inversion_start(data: np.ndarray, scale: float) -> np.ndarray:
    """Warm start from unconstrained linear inversion of the count data.

    The 27 setting triples are Pauli-complete, so the least-squares solution
    of the (216, 64) linear system recovers the Choi matrix directly; it is
    then clipped to strictly positive eigenvalues so the Cholesky
    parametrization is well conditioned.
    """
    v, *_ = np.linalg.lstsq(_MEAS_STACK, data.astype(complex), rcond=None)
    s = matlin.partial_transpose(v.reshape(8, 8), CBD_FACTORS, "D")
    return matlin.cholesky_params(_psd_clip_scale(s, scale), 8)


def _project_no_retro(mat: np.ndarray) -> np.ndarray:
    """Remove the (traceless) component violating Tr_B tau = rho_C x 1/2."""
    t = mat.reshape(2, 2, 2, 2, 2, 2)
    marg = np.trace(t, axis1=1, axis2=4)
    rho_c = np.trace(marg, axis1=1, axis2=3)
    delta = marg - np.einsum("ij,kl->ikjl", rho_c, np.eye(2) / 2)
    corr = np.einsum("ikjl,ab->iakjbl", delta, np.eye(2) / 2)
    return matlin.hermitize(mat - corr.reshape(8, 8))


def fit_causal_map(table: CountTable, config: FitConfig | None = None) -> FitResult:
    """Reconstruct the Choi state from a count table.

    Parametrizes (N/27) tau = J^dag J with 64 real numbers, minimizes the
    variance-weighted count residuals plus the no-signalling penalty, then
    renormalizes the optimum to unit trace.  The first restart begins at the
    linear-inversion estimate; further restarts jitter around it.
    """
    config = config or FitConfig()
    data = table.counts.reshape(-1)
    weights = 1.0 / np.sqrt(np.maximum(data, config.eps_cell))
    scale = table.n_runs / 27.0
    b_model, b_pen = _quadratic_tensors(8)
    # S = J^dag J carries the N/27 scale, so Tr[T_D(S) op] is a count.
    a = np.concatenate([b_model * weights[:, None, None],
                        np.sqrt(config.lam) * b_pen], axis=0)
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    const = np.concatenate([-data * weights, np.zeros(32)])

    rng = np.random.default_rng(config.seed)
    base = _linear_inversion_start(data, scale)
    best = None
    restart_costs = []
    for k in range(max(1, config.restarts)):
        x0 = base if k == 0 else base + config.jitter * np.sqrt(scale) * rng.standard_normal(64)
        res = _run_quadratic_fit(a, const, x0, config)
        restart_costs.append(res.cost)
        if best is None or res.cost < best.cost:
            best = res
    s_mat = matlin.cholesky_psd(best.x, 8)
    normalized = s_mat / np.trace(s_mat).real
    penalty = float(np.max(np.abs(_penalty_residuals(normalized, 1.0))))
    full = (a @ best.x) @ best.x + const
    chi2 = float(full[:216] @ full[:216])
    tau_mat = _project_no_retro(normalized)
    w_eigs, _ = matlin.hermitian_eigs(tau_mat)
    if float(w_eigs.min()) < 0.0:
        # lift roundoff negatives by blending in 1/8, which obeys the
        # no-retrocausation constraint exactly
        eta = min(1e-6, 16.0 * -float(w_eigs.min()) + 1e-14)
        tau_mat = matlin.hermitize((1.0 - eta) * tau_mat + eta * np.eye(8) / 8.0)
    tau = CausalChoi(DensityOperator(tau_mat, CBD_FACTORS))
    converged = (best.converged
                 or (penalty < 1e-6 and _cost_flattened(best.history)))
    return FitResult(tau=tau, cost=best.cost, chi2=chi2, penalty_residual=penalty,
                     n_iter=best.n_iter, converged=converged,
                     params=best.x, config=config,
                     restart_costs=tuple(restart_costs))


# ---------------------------------------------------------------------------
# Tomography of an induced two-qubit state (C with a repreparation on D),
# used for the Berkson analysis of post-selected data.

CD_FACTORS = (("C", 2), ("D", 2))


def _cd_measurement_stack() -> np.ndarray:
    rows = []
    for si, ti, ci, di in product(range(3), range(3), range(2), range(2)):
        op = np.kron(pauli_projector(AXES[si], 1 - 2 * ci),
                     pauli_projector(AXES[ti], 1 - 2 * di).T)
        rows.append(op.T.reshape(-1))
    return np.stack(rows)


_CD_MEAS_STACK = _cd_measurement_stack()


def expected_conditioned_counts(state: DensityOperator, n_runs: int) -> np.ndarray:
    """Noiseless (3, 3, 2, 2) table over (s, t, c, d) for a (C, D) state whose
    D wire is a transposed input: model count (N/9) Tr[rho Pi_c x T(Pi_d)]."""
    if state.factors != CD_FACTORS:
        raise ValueError("expected a state over factors (C, D)")
    cells = np.real(_CD_MEAS_STACK @ state.mat.reshape(-1)) * (n_runs / 9.0)
    return cells.reshape(3, 3, 2, 2)


def sample_conditioned_counts(state: DensityOperator, n_runs: int,
                              seed: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.poisson(np.clip(expected_conditioned_counts(state, n_runs), 0, None)).astype(float)


def fit_conditioned_state(counts: np.ndarray, config: FitConfig | None = None):
    """Least-squares reconstruction of the induced (C, D) state from a
    (3, 3, 2, 2) count table; 16 Cholesky parameters, no penalty term."""
    config = config or FitConfig()
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (3, 3, 2, 2):
        raise ValueError("expected a (3, 3, 2, 2) count array")
    data = counts.reshape(-1)
    n_runs = data.sum()
    scale = n_runs / 9.0
    weights = 1.0 / np.sqrt(np.maximum(data, config.eps_cell))
    b_model, _ = _quadratic_tensors(4)
    a = b_model * weights[:, None, None]
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    const = -data * weights

    rng = np.random.default_rng(config.seed)
    v, *_ = np.linalg.lstsq(_CD_MEAS_STACK, data.astype(complex), rcond=None)
    base = matlin.cholesky_params(_psd_clip_scale(v.reshape(4, 4), scale), 4)
    best = None
    for k in range(max(1, config.restarts)):
        x0 = base if k == 0 else base + config.jitter * np.sqrt(scale) * rng.standard_normal(16)
        res = _run_quadratic_fit(a, const, x0, config)
        if best is None or res.cost < best.cost:
            best = res
    s_mat = matlin.cholesky_psd(best.x, 4)
    rho = matlin.hermitize(s_mat / np.trace(s_mat).real)
    return DensityOperator(rho, CD_FACTORS), best


def bootstrap_errorbars(table: CountTable, statistic, n_resamples: int = 20,
                        seed: int | None = None,
                        config: FitConfig | None = None) -> dict:
    """Parametric bootstrap around an observed count table.

    Each resample Poisson-fluctuates the observed counts, refits, and applies
    ``statistic`` (a FitResult -> dict of floats).  Returns per-key mean and
    standard deviation.  Refits use a single restart; the observed-table fit
    provides the reference starting point implicitly through the shared
    initialization.
    """
    config = replace(config or FitConfig(), restarts=1)
    rng = np.random.default_rng(seed)
    samples: dict[str, list] = {}
    for _ in range(n_resamples):
        sub_seed = int(rng.integers(0, 2**32 - 1))
        resampled = CountTable(
            np.random.default_rng(sub_seed).poisson(np.clip(table.counts, 0, None)).astype(float),
            table.n_runs)
        fit = fit_causal_map(resampled, replace(config, seed=sub_seed))
        for key, val in statistic(fit).items():
            samples.setdefault(key, []).append(float(val))
    return {
        "mean": {k: float(np.mean(v)) for k, v in samples.items()},
        "std": {k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
                for k, v in samples.items()},
        "n_resamples": n_resamples,
    }

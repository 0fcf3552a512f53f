"""Data-driven policy iteration for slow-state LQR gains.

The learner never sees the model.  Along any trajectory of
y' = a y + b u driven by an exploration input u0, the value matrix P of a
gain K and the improved gain K+ = R^-1 b' P satisfy, over each window
[t, t + T],

    y'Py |_t^{t+T} = -int y'(Q + K'RK)y
                     + 2 int (u0 + K y)' R K+ y.

Stacking one such equation per window gives a linear system in
(vec P, vec K+) that one minimum-norm least-squares solve inverts; no
system matrices appear anywhere.  The same windows serve every iteration,
so data is collected once and replayed (off-policy).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .linalg import (
    devec,
    kron,
    solve_least_squares,
    sym_param_count,
    symmetrize,
    vec,
)
from .sim import AdpDataset


class LearnDivergence(RuntimeError):
    """Iterates blew past the divergence guard; data or K0 is unusable."""


@dataclass
class AdpConfig:
    """Weights and iteration controls for the data-driven learner."""

    q_weight: np.ndarray
    r_weight: np.ndarray
    k0: np.ndarray | None = None
    gamma: float = 1e-6
    max_iters: int = 30
    rank_tolerance: float = 1e-8

    def __post_init__(self):
        self.q_weight = np.atleast_2d(np.asarray(self.q_weight, dtype=float))
        self.r_weight = np.atleast_2d(np.asarray(self.r_weight, dtype=float))
        if not np.allclose(self.q_weight, self.q_weight.T):
            raise ValueError("q_weight must be symmetric")
        if np.linalg.eigvalsh(self.q_weight).min() < -1e-10:
            raise ValueError("q_weight must be positive semidefinite")
        scipy.linalg.cholesky(self.r_weight)  # raises unless SPD
        if self.k0 is not None:
            self.k0 = np.atleast_2d(np.asarray(self.k0, dtype=float))
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class RankCheck:
    """Excitation test: the data matrix [i_yy i_yu0] needs full learnable rank."""

    ok: bool
    rank: int
    required: int


def check_rank(data: AdpDataset, tol: float = 1e-8) -> RankCheck:
    """Rank of [i_yy i_yu0] against r(r+1)/2 + r*m.

    kron(y, y) repeats the symmetric cross terms, so that bound, not the
    raw column count, is what persistent excitation can reach.
    """
    stacked = np.hstack([data.i_yy, data.i_yu0])
    sv = np.linalg.svd(stacked, compute_uv=False)
    rank = int((sv > tol * sv[0]).sum()) if sv.size and sv[0] > 0 else 0
    required = sym_param_count(data.r) + data.r * data.m
    return RankCheck(ok=rank == required, rank=rank, required=required)


def build_regression(data: AdpDataset, k_gain, cfg: AdpConfig):
    """Assemble (theta, phi) for one policy-evaluation step at gain K.

    theta = [delta_yy, -2 i_yy (I kron K'R) - 2 i_yu0 (I kron R)],
    phi   = -i_yy vec(Q + K'RK).
    """
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    r, m = data.r, data.m
    if k_gain.shape != (m, r):
        raise ValueError("gain must be m-by-r")
    q_k = cfg.q_weight + k_gain.T @ cfg.r_weight @ k_gain
    eye_r = np.eye(r)
    theta = np.hstack([
        data.delta_yy,
        -2.0 * data.i_yy @ kron(eye_r, k_gain.T @ cfg.r_weight)
        - 2.0 * data.i_yu0 @ kron(eye_r, cfg.r_weight),
    ])
    phi = -data.i_yy @ vec(q_k)
    return theta, phi


@dataclass
class LearnStep:
    """History entry: gain after ``step`` updates and the value matrix
    whose improvement produced it (zeros at step 0)."""

    step: int
    p: np.ndarray
    k_gain: np.ndarray
    residual: float
    dp_norm: float


@dataclass
class LearnResult:
    """Outcome of a data-driven policy-iteration run."""

    p_final: np.ndarray
    k_final: np.ndarray
    history: list[LearnStep]
    iterations: int
    converged: bool
    rank_achieved: int
    rank_required: int
    observer_bound: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "P": self.p_final.tolist(),
            "K": self.k_final.tolist(),
            "iterations": self.iterations,
            "converged": bool(self.converged),
            "history": [
                {
                    "k": st.step,
                    "P": st.p.tolist(),
                    "K": st.k_gain.tolist(),
                    "dP_norm": None if np.isnan(st.dp_norm) else st.dp_norm,
                }
                for st in self.history
            ],
            "rank": {"achieved": self.rank_achieved, "required": self.rank_required},
            "observer_bound": self.observer_bound,
        }


def learn(data: AdpDataset, cfg: AdpConfig,
          divergence_guard: float = 1e8) -> LearnResult:
    """Iterate regression solves until the value matrix settles.

    Stops when ||P_k - P_{k-1}||_F < gamma; a run that exhausts max_iters
    comes back with converged=False rather than raising, while iterates
    past the divergence guard raise :class:`LearnDivergence`.
    """
    r, m = data.r, data.m
    if data.n_windows < r * r + m * r:
        raise LearnDivergence(
            "dataset has %d windows but the regression needs at least %d"
            % (data.n_windows, r * r + m * r))
    rank = check_rank(data, cfg.rank_tolerance)
    k = np.zeros((m, r)) if cfg.k0 is None else cfg.k0.copy()
    if k.shape != (m, r):
        raise ValueError("k0 must be m-by-r")

    history = [LearnStep(0, np.zeros((r, r)), k.copy(), np.nan, np.nan)]
    p_prev = None
    converged = False
    for step in range(1, cfg.max_iters + 1):
        theta, phi = build_regression(data, k, cfg)
        sol = solve_least_squares(theta, phi)
        if not np.all(np.isfinite(sol.solution)):
            raise LearnDivergence("regression produced non-finite iterates")
        p = symmetrize(devec(sol.solution[: r * r], r, r))
        k = devec(sol.solution[r * r:], m, r)
        dp = np.nan if p_prev is None else float(np.linalg.norm(p - p_prev, "fro"))
        history.append(LearnStep(step, p, k.copy(), sol.residual_norm, dp))
        if float(np.linalg.norm(p, "fro")) > divergence_guard:
            raise LearnDivergence("value-matrix norm exceeded the divergence guard")
        if p_prev is not None and dp < cfg.gamma:
            converged = True
            break
        p_prev = p

    return LearnResult(
        p_final=history[-1].p,
        k_final=history[-1].k_gain,
        history=history,
        iterations=len(history) - 1,
        converged=converged,
        rank_achieved=rank.rank,
        rank_required=rank.required,
    )


def learn_output_feedback(data_hat: AdpDataset, cfg: AdpConfig,
                          observer_bound: float | None = None) -> LearnResult:
    """Same iteration on observer-estimate data; records the error bound.

    With a perfect estimate stream this is bit-identical to :func:`learn`
    on the true-state data, by construction (single shared code path).
    """
    result = learn(data_hat, cfg)
    return replace(result, observer_bound=observer_bound)


def learn_decentralized(datasets: list[AdpDataset],
                        cfgs: list[AdpConfig] | AdpConfig) -> list[LearnResult]:
    """Independent per-cluster runs; clusters share no data or state."""
    if isinstance(cfgs, AdpConfig):
        cfgs = [cfgs] * len(datasets)
    if len(cfgs) != len(datasets):
        raise ValueError("need one config per dataset")
    results = []
    for i, (data, cfg) in enumerate(zip(datasets, cfgs)):
        try:
            results.append(learn(data, cfg))
        except LearnDivergence as exc:
            raise LearnDivergence(f"cluster {i}: {exc}") from exc
    return results


def composite_gain(results: list[LearnResult]) -> np.ndarray:
    """Block-diagonal gain from per-cluster results; all must have converged."""
    bad = [i for i, res in enumerate(results) if not res.converged]
    if bad:
        raise ValueError(f"clusters {bad} did not converge; composite gain unusable")
    return scipy.linalg.block_diag(*[res.k_final for res in results])

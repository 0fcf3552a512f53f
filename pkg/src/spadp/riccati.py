"""Model-based LQR baseline: policy iteration on the Riccati equation.

This is the ground-truth side of every data-driven check in the package.
It alternates Lyapunov policy evaluation with gain improvement
K = R^-1 B' P, which converges quadratically to the stabilizing Riccati
solution from any stabilizing initial gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import check_matrix, is_hurwitz, lyapunov_solve, symmetrize


@dataclass
class KleinmanStep:
    """One policy-evaluation step: gain in force and the value matrix found."""

    step: int
    p: np.ndarray
    k_gain: np.ndarray
    dp_norm: float


@dataclass
class AreSolution:
    """Stabilizing Riccati solution with the iteration trace."""

    p: np.ndarray
    k: np.ndarray
    residual: float
    iterations: int
    history: list[KleinmanStep]


def stabilizing_gain(a, b, shift: float | None = None) -> np.ndarray:
    """Initial stabilizing gain via the shifted-Lyapunov construction.

    With beta exceeding the spectral abscissa of -a, the solution X of
    (a + beta I) X + X (a + beta I)' = 2 b b' gives K = b' X^-1 such that
    a - b K is Hurwitz (controllable pairs).  Returns zeros when a is
    already Hurwitz.
    """
    a = check_matrix(a, "a")
    b = check_matrix(b, "b")
    if is_hurwitz(a):
        return np.zeros((b.shape[1], a.shape[0]))
    beta = float(np.linalg.norm(a, "fro")) + 0.5 if shift is None else float(shift)
    for _ in range(4):
        x = scipy.linalg.solve_continuous_lyapunov(a + beta * np.eye(a.shape[0]),
                                                   2.0 * b @ b.T)
        k = b.T @ np.linalg.pinv(symmetrize(x))
        if is_hurwitz(a - b @ k):
            return k
        beta *= 2.0
    raise ValueError("failed to construct a stabilizing initial gain")


def care_solve(a, b, q, r_w, k0=None, tol: float = 1e-10,
               max_iters: int = 60) -> AreSolution:
    """Stabilizing solution of a'P + Pa + q - P b r^-1 b' P = 0.

    Runs gain-improvement iterations from ``k0`` (auto-constructed when
    omitted).  The history records each (P, gain) pair so data-driven
    iterations can be compared step by step.
    """
    a = check_matrix(a, "a")
    b = check_matrix(b, "b")
    q = check_matrix(q, "q")
    r_w = check_matrix(r_w, "r_w")
    n, m = a.shape[0], b.shape[1]
    scipy.linalg.cholesky(r_w)  # raises unless the input weight is SPD
    if k0 is None:
        k = stabilizing_gain(a, b)
    else:
        k = check_matrix(k0, "k0")
        if k.shape != (m, n):
            raise ValueError("k0 must be m-by-n")
    if not is_hurwitz(a - b @ k):
        raise ValueError("initial gain is not stabilizing")

    history = [KleinmanStep(0, np.zeros((n, n)), k.copy(), np.nan)]
    p_prev = None
    converged = False
    for step in range(1, max_iters + 1):
        p = lyapunov_solve(a - b @ k, q + k.T @ r_w @ k)
        k = scipy.linalg.solve(r_w, b.T @ p)
        dp = np.nan if p_prev is None else float(np.linalg.norm(p - p_prev, "fro"))
        history.append(KleinmanStep(step, p, k.copy(), dp))
        if p_prev is not None and dp < tol:
            converged = True
            break
        p_prev = p
    if not converged:
        raise RuntimeError(f"policy iteration did not converge in {max_iters} steps")

    p = history[-1].p
    residual = float(np.linalg.norm(
        a.T @ p + p @ a + q - p @ b @ scipy.linalg.solve(r_w, b.T @ p), "fro"))
    if residual > 1e-8 * (1.0 + float(np.linalg.norm(p, "fro"))):
        raise ArithmeticError(f"Riccati residual {residual:.3e} is out of tolerance")
    return AreSolution(p=p, k=history[-1].k_gain, residual=residual,
                       iterations=len(history) - 1, history=history)


def closed_loop_cost(a, b, k, q, r_w, x0, y_map=None) -> float:
    """Exact quadratic cost of u = -k x from x0 via one Lyapunov solve.

    The priced output is y = y_map @ x when a map is given, so reduced
    weights can be applied to a full-order closed loop.
    """
    a = check_matrix(a, "a")
    b = check_matrix(b, "b")
    k = check_matrix(k, "k")
    q = check_matrix(q, "q")
    r_w = check_matrix(r_w, "r_w")
    acl = a - b @ k
    if not is_hurwitz(acl):
        raise ValueError("closed loop is unstable; the infinite-horizon cost diverges")
    if y_map is None:
        weight = q + k.T @ r_w @ k
    else:
        y_map = check_matrix(y_map, "y_map")
        weight = y_map.T @ q @ y_map + k.T @ r_w @ k
    p = lyapunov_solve(acl, symmetrize(weight))
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    return float(x0 @ p @ x0)


@dataclass
class PoleReport:
    """Closed-loop spectrum split at a magnitude threshold."""

    slow: np.ndarray
    fast: np.ndarray
    threshold: float

    @property
    def spectral_abscissa(self) -> float:
        all_poles = np.concatenate([self.slow, self.fast])
        return float(all_poles.real.max())


def slow_pole_report(a_full, b_full, k_full, threshold: float) -> PoleReport:
    """Eigenvalues of a_full - b_full k_full, partitioned by magnitude.

    Pass k_full = 0 for the open-loop spectrum.  Poles with |lambda| at or
    below the threshold count as slow; each group is sorted by real part.
    """
    a_full = check_matrix(a_full, "a_full")
    b_full = check_matrix(b_full, "b_full")
    k_full = check_matrix(k_full, "k_full")
    poles = np.linalg.eigvals(a_full - b_full @ k_full)
    order = np.argsort(poles.real)
    poles = poles[order]
    mask = np.abs(poles) <= threshold
    return PoleReport(slow=poles[mask], fast=poles[~mask], threshold=float(threshold))

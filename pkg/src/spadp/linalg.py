"""Dense matrix primitives shared across the package.

Everything here operates on plain float ndarrays and is pure (no module
state), so callers may use these routines concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


def check_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a 2-D float array, rejecting NaN/Inf entries."""
    out = np.atleast_2d(np.asarray(m, dtype=float))
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices (or vectors)."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def vec(m) -> np.ndarray:
    """Column-stacking vectorization: vec([[1, 2], [3, 4]]) -> [1, 3, 2, 4]."""
    return np.asarray(m, dtype=float).reshape(-1, order="F")


def devec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {v.size}")
    return v.reshape((rows, cols), order="F")


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def sym_param_count(dim: int) -> int:
    """Free parameters of a symmetric dim-by-dim matrix: dim*(dim+1)/2."""
    return dim * (dim + 1) // 2


def sym_compress(m) -> np.ndarray:
    """Upper triangle of a symmetric matrix, row-major order."""
    m = check_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    return m[np.triu_indices(m.shape[0])].copy()


def sym_expand(values, dim: int) -> np.ndarray:
    """Rebuild the symmetric matrix whose upper triangle is ``values``."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != sym_param_count(dim):
        raise ValueError(f"expected {sym_param_count(dim)} entries, got {values.size}")
    out = np.zeros((dim, dim))
    iu = np.triu_indices(dim)
    out[iu] = values
    out.T[iu] = values
    return out


@dataclass
class LstsqResult:
    """Minimum-norm least-squares solution plus rank diagnostics."""

    solution: np.ndarray
    residual_norm: float
    rank: int
    rank_deficient: bool
    singular_values: np.ndarray


def solve_least_squares(theta, phi) -> LstsqResult:
    """Solve min ||theta x - phi|| for the minimum-norm x.

    Rank deficiency is reported, never raised: callers that assembled the
    system from measured data decide whether a deficient fit is usable.
    """
    theta = check_matrix(theta, "theta")
    phi = np.asarray(phi, dtype=float)
    if theta.shape[0] < theta.shape[1]:
        raise ValueError("need at least as many equations as unknowns")
    if phi.shape[0] != theta.shape[0]:
        raise ValueError("right-hand side length does not match")
    x, _, rank, sv = np.linalg.lstsq(theta, phi, rcond=None)
    residual = float(np.linalg.norm(theta @ x - phi))
    return LstsqResult(x, residual, int(rank), int(rank) < theta.shape[1], sv)


def spectral_abscissa(a) -> float:
    """Largest real part over the eigenvalues of a square matrix."""
    a = check_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return float(np.max(np.linalg.eigvals(a).real))


def is_hurwitz(a, margin: float = 0.0) -> bool:
    return spectral_abscissa(a) < -margin


def lyapunov_solve(a, q) -> np.ndarray:
    """Solve a'P + Pa + q = 0 for symmetric P; requires a Hurwitz.

    One iterative-refinement pass keeps the residual below 1e-9 * ||q||.
    """
    a = check_matrix(a, "a")
    q = check_matrix(q, "q")
    if a.shape[0] != a.shape[1] or a.shape != q.shape:
        raise ValueError("a and q must be square with matching shape")
    qscale = float(np.abs(q).max()) if q.size else 0.0
    if not np.allclose(q, q.T, atol=1e-12 * max(1.0, qscale)):
        raise ValueError("q must be symmetric")
    if not is_hurwitz(a):
        raise ValueError("a must be Hurwitz for a unique stabilizing solution")
    p = symmetrize(scipy.linalg.solve_continuous_lyapunov(a.T, -q))
    tol = 1e-9 * np.linalg.norm(q)
    res = a.T @ p + p @ a + q
    if np.linalg.norm(res) > tol:
        p = symmetrize(p + scipy.linalg.solve_continuous_lyapunov(a.T, -res))
        res = a.T @ p + p @ a + q
        if np.linalg.norm(res) > tol:
            raise np.linalg.LinAlgError("Lyapunov residual did not reach tolerance")
    return p

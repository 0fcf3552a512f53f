"""Two-time-scale (slow/fast) LTI models and their slow reductions.

A system in block form

    y' = a11 y + a12 z + b1 u
    eps z' = a21 y + a22 z + b2 u

keeps the small parameter eps explicit.  Setting eps = 0 and eliminating
the fast state z through a22 gives the reduced slow model used for
low-dimensional controller design; the full assembled model is what gets
simulated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, spectral_abscissa
from .sim import LtiSystem


@dataclass
class SlowSubsystem:
    """Reduced slow model y' = a_s y + b_s u."""

    a_s: np.ndarray
    b_s: np.ndarray

    def __post_init__(self):
        self.a_s = check_matrix(self.a_s, "a_s")
        self.b_s = check_matrix(self.b_s, "b_s")
        if self.a_s.shape[0] != self.a_s.shape[1]:
            raise ValueError("a_s must be square")
        if self.b_s.shape[0] != self.a_s.shape[0]:
            raise ValueError("b_s row count must match a_s")

    @property
    def r(self) -> int:
        return self.a_s.shape[0]

    @property
    def m(self) -> int:
        return self.b_s.shape[1]


@dataclass
class SpSystem:
    """Block two-time-scale model with explicit eps.

    States are the canonical stacked coordinates [y; z]; t_slow and g_fast
    extract y and z from that stacked vector and default to the identity
    partition.
    """

    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    epsilon: float
    t_slow: np.ndarray | None = None
    g_fast: np.ndarray | None = None

    def __post_init__(self):
        self.a11 = check_matrix(self.a11, "a11")
        self.a12 = check_matrix(self.a12, "a12")
        self.a21 = check_matrix(self.a21, "a21")
        self.a22 = check_matrix(self.a22, "a22")
        self.b1 = check_matrix(self.b1, "b1")
        self.b2 = check_matrix(self.b2, "b2")
        r, nf = self.a11.shape[0], self.a22.shape[0]
        if self.a11.shape != (r, r) or self.a22.shape != (nf, nf):
            raise ValueError("a11 and a22 must be square")
        if self.a12.shape != (r, nf) or self.a21.shape != (nf, r):
            raise ValueError("off-diagonal block shapes are inconsistent")
        if self.b1.shape[0] != r or self.b2.shape[0] != nf:
            raise ValueError("input block row counts are inconsistent")
        if self.b1.shape[1] != self.b2.shape[1]:
            raise ValueError("b1 and b2 must share a column count")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if self.t_slow is None:
            self.t_slow = np.hstack([np.eye(r), np.zeros((r, nf))])
        else:
            self.t_slow = check_matrix(self.t_slow, "t_slow")
        if self.g_fast is None:
            self.g_fast = np.hstack([np.zeros((nf, r)), np.eye(nf)])
        else:
            self.g_fast = check_matrix(self.g_fast, "g_fast")
        stacked = np.vstack([self.t_slow, self.g_fast])
        if stacked.shape != (r + nf, r + nf):
            raise ValueError("stacked [t_slow; g_fast] must be square")
        self.transform_cond = float(np.linalg.cond(stacked))
        if not np.isfinite(self.transform_cond) or self.transform_cond > 1e12:
            raise ValueError("stacked slow/fast transform is numerically singular")

    @property
    def r(self) -> int:
        return self.a11.shape[0]

    @property
    def n_fast(self) -> int:
        return self.a22.shape[0]

    @property
    def n(self) -> int:
        return self.r + self.n_fast

    @property
    def m(self) -> int:
        return self.b1.shape[1]

    def assert_fast_stable(self) -> None:
        """Fast-block stability underpins the slow reduction; check it."""
        alpha = spectral_abscissa(self.a22)
        if alpha >= 0:
            raise ValueError(f"a22 is not Hurwitz (spectral abscissa {alpha:.3e})")


def assemble_full(sp: SpSystem, c=None) -> LtiSystem:
    """Assembled stiff model in [y; z] coordinates (fast rows carry 1/eps)."""
    eps = sp.epsilon
    a = np.block([[sp.a11, sp.a12], [sp.a21 / eps, sp.a22 / eps]])
    b = np.vstack([sp.b1, sp.b2 / eps])
    return LtiSystem(a, b, c)


def reduce_slow(sp: SpSystem) -> SlowSubsystem:
    """Quasi-steady-state reduction: eliminate z through a22 at eps = 0."""
    a22 = sp.a22
    cond = np.linalg.cond(a22)
    if not np.isfinite(cond) or 1.0 / cond < 1e-12:
        raise np.linalg.LinAlgError("a22 is singular; the slow reduction is undefined")
    x21 = np.linalg.solve(a22, sp.a21)
    xb2 = np.linalg.solve(a22, sp.b2)
    return SlowSubsystem(sp.a11 - sp.a12 @ x21, sp.b1 - sp.a12 @ xb2)


def slow_of(sp: SpSystem, x) -> np.ndarray:
    """Slow coordinates of a stacked state (or batch of states)."""
    x = np.asarray(x, dtype=float)
    return x @ sp.t_slow.T if x.ndim == 2 else sp.t_slow @ x


def from_full(sys: LtiSystem, t_slow, g_fast, epsilon: float) -> SpSystem:
    """Ingest a model given in original coordinates.

    The stacked transform [t_slow; g_fast] maps original states onto
    [y; z]; the returned system lives in those canonical coordinates.
    """
    t_slow = check_matrix(t_slow, "t_slow")
    g_fast = check_matrix(g_fast, "g_fast")
    stacked = np.vstack([t_slow, g_fast])
    if stacked.shape[0] != stacked.shape[1] or stacked.shape[1] != sys.n:
        raise ValueError("stacked transform must be square and match the state dim")
    cond = np.linalg.cond(stacked)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError("stacked slow/fast transform is numerically singular")
    inv = np.linalg.solve(stacked, np.eye(sys.n))
    abar = stacked @ sys.a @ inv
    bbar = stacked @ sys.b
    r = t_slow.shape[0]
    return SpSystem(
        a11=abar[:r, :r],
        a12=abar[:r, r:],
        a21=epsilon * abar[r:, :r],
        a22=epsilon * abar[r:, r:],
        b1=bbar[:r],
        b2=epsilon * bbar[r:],
        epsilon=epsilon,
    )

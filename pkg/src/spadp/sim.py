"""Fixed-step LTI simulation, excitation signals, and regression data.

The integrator is classical RK4 on a uniform grid. Policies are callables
``u = policy(t, x)`` evaluated at every stage point, so time-varying
excitation and state feedback both integrate at full fourth order.
Integrals needed by the learner are composite trapezoids over the
trajectory grid, assembled here so every consumer shares one quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .linalg import check_matrix


class SimulationBlowUp(RuntimeError):
    """State norm crossed the divergence guard during integration."""

    def __init__(self, t: float, norm: float):
        super().__init__(f"state norm {norm:.3e} exceeded the blow-up guard at t={t:.4f}")
        self.t = t
        self.norm = norm


@dataclass
class LtiSystem:
    """x' = a x + b u with measurement q = c x (c defaults to identity)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        self.a = check_matrix(self.a, "a")
        self.b = check_matrix(self.b, "b")
        n = self.a.shape[0]
        if self.a.shape[1] != n:
            raise ValueError("a must be square")
        if self.b.shape[0] != n:
            raise ValueError("b row count must match the state dimension")
        if self.c is None:
            self.c = np.eye(n)
        else:
            self.c = check_matrix(self.c, "c")
            if self.c.shape[1] != n:
                raise ValueError("c column count must match the state dimension")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]


@dataclass
class ExplorationSignal:
    """Sum-of-sinusoids excitation, one row of terms per input channel.

    u_j(t) = offset_j + sum_i amplitudes[j, i] * sin(frequencies[j, i] * t
    + phases[j, i]).  Phases come from the seed, so a signal spec is
    reproducible bit for bit.
    """

    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    offset: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))
        self.frequencies = np.atleast_2d(np.asarray(self.frequencies, dtype=float))
        self.phases = np.atleast_2d(np.asarray(self.phases, dtype=float))
        self.offset = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if not (self.amplitudes.shape == self.frequencies.shape == self.phases.shape):
            raise ValueError("amplitudes, frequencies, phases must share a shape")
        if self.offset.shape[0] != self.amplitudes.shape[0]:
            raise ValueError("offset length must match the channel count")

    @classmethod
    def generate(cls, m: int, n_terms: int = 10, freq_range=(0.1, 50.0),
                 amplitude: float = 1.0, offset=0.0, seed: int = 0,
                 random_freqs: bool = False):
        """Log-spaced frequencies, equal amplitudes, seeded random phases.

        offset may be a scalar (shared) or a length-m array (per channel).
        With random_freqs the tones are drawn log-uniform per channel
        instead of shared across channels; multi-input plants need that,
        otherwise every channel excites the same spectral lines and the
        joint state response stays in a thin subspace.
        """
        lo, hi = freq_range
        if not (0 < lo <= hi):
            raise ValueError("frequency range must satisfy 0 < lo <= hi")
        rng = np.random.default_rng(seed)
        if random_freqs:
            freqs = np.exp(rng.uniform(np.log(lo), np.log(hi),
                                       size=(m, n_terms)))
        else:
            freqs = np.tile(np.geomspace(lo, hi, n_terms), (m, 1))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(m, n_terms))
        off = np.broadcast_to(np.atleast_1d(np.asarray(offset, dtype=float)),
                              (m,)).copy()
        return cls(
            amplitudes=np.full((m, n_terms), float(amplitude)),
            frequencies=freqs,
            phases=phases,
            offset=off,
            seed=seed,
        )

    @property
    def m(self) -> int:
        return self.amplitudes.shape[0]

    def bound(self) -> np.ndarray:
        """Per-channel amplitude bound |u_j(t)| <= bound_j for all t."""
        return np.abs(self.amplitudes).sum(axis=1) + np.abs(self.offset)

    def __call__(self, t: float) -> np.ndarray:
        s = np.sin(self.frequencies * t + self.phases)
        return self.offset + (self.amplitudes * s).sum(axis=1)

    def as_policy(self):
        """Adapt to the ``policy(t, x)`` calling convention (ignores x)."""
        return lambda t, x: self(t)


@dataclass
class Trajectory:
    """Uniformly sampled states and the inputs actually applied."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    dt: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.times.ndim != 1 or self.states.ndim != 2 or self.inputs.ndim != 2:
            raise ValueError("times must be 1-D; states and inputs 2-D")
        if not (len(self.times) == len(self.states) == len(self.inputs)):
            raise ValueError("times, states, inputs must have equal length")
        steps = np.diff(self.times)
        if len(steps) and not np.allclose(steps, self.dt, rtol=1e-9, atol=1e-12):
            raise ValueError("times must be uniformly spaced by dt")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    def slow(self, slow_map) -> np.ndarray:
        """Reduced coordinates y_i = slow_map @ x_i for every sample."""
        slow_map = check_matrix(slow_map, "slow_map")
        return self.states @ slow_map.T

    def to_csv(self, path) -> None:
        """Write t, x1..xn, u1..um rows with 17 significant digits."""
        header = ",".join(
            ["t"]
            + [f"x{i + 1}" for i in range(self.n)]
            + [f"u{j + 1}" for j in range(self.m)]
        )
        table = np.column_stack([self.times, self.states, self.inputs])
        np.savetxt(path, table, delimiter=",", fmt="%.17g",
                   header=header, comments="")


def simulate(sys: LtiSystem, policy, x0, dt: float, t_end: float,
             blowup: float = 1e8) -> Trajectory:
    """Integrate x' = a x + b policy(t, x) with fixed-step RK4.

    Raises :class:`SimulationBlowUp` as soon as ||x|| crosses ``blowup``;
    an unstable exploration run should fail loudly, not return garbage.
    """
    a, b = sys.a, sys.b
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    if x.shape[0] != sys.n:
        raise ValueError("x0 length must match the state dimension")
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of dt")

    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, sys.n))
    inputs = np.empty((n_steps + 1, sys.m))
    half = 0.5 * dt

    def f(t, xi):
        return a @ xi + b @ np.asarray(policy(t, xi), dtype=float).reshape(-1)

    for i in range(n_steps):
        t = times[i]
        u = np.asarray(policy(t, x), dtype=float).reshape(-1)
        states[i] = x
        inputs[i] = u
        k1 = a @ x + b @ u
        k2 = f(t + half, x + half * k1)
        k3 = f(t + half, x + half * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = float(np.linalg.norm(x))
        if not np.isfinite(norm) or norm > blowup:
            raise SimulationBlowUp(times[i + 1], norm)
    states[-1] = x
    inputs[-1] = np.asarray(policy(times[-1], x), dtype=float).reshape(-1)
    return Trajectory(times, states, inputs, dt)


@dataclass
class AdpDataset:
    """Window differences and integrals feeding the policy-iteration fit.

    Row i covers [t_i, t_i + window]:
      delta_yy[i] = kron(y, y) at the window end minus the start,
      i_yy[i]     = integral of kron(y, y),
      i_yu0[i]    = integral of kron(y, u0).
    """

    delta_yy: np.ndarray
    i_yy: np.ndarray
    i_yu0: np.ndarray
    window: float
    sample_times: np.ndarray
    r: int
    m: int

    def __post_init__(self):
        self.sample_times = np.asarray(self.sample_times, dtype=float)
        l = len(self.sample_times)
        if self.delta_yy.shape != (l, self.r * self.r):
            raise ValueError("delta_yy shape mismatch")
        if self.i_yy.shape != (l, self.r * self.r):
            raise ValueError("i_yy shape mismatch")
        if self.i_yu0.shape != (l, self.r * self.m):
            raise ValueError("i_yu0 shape mismatch")

    @property
    def n_windows(self) -> int:
        return len(self.sample_times)


def _grid_index(value: float, t0: float, dt: float, what: str) -> int:
    idx = (value - t0) / dt
    rounded = int(round(idx))
    if abs(idx - rounded) > 1e-6:
        raise ValueError(f"{what} {value} does not align with the dt grid")
    return rounded


def collect_adp_data(traj: Trajectory, slow_map, window: float,
                     sample_times) -> AdpDataset:
    """Assemble learner data from a trajectory.

    ``window`` and every sample time must align with the trajectory grid;
    misalignment raises rather than silently interpolating.
    """
    slow_map = check_matrix(slow_map, "slow_map")
    if slow_map.shape[1] != traj.n:
        raise ValueError("slow_map column count must match the state dimension")
    sample_times = np.asarray(sample_times, dtype=float).reshape(-1)
    if sample_times.size == 0:
        raise ValueError("need at least one sample window")
    dt = traj.dt
    t0 = traj.times[0]
    w_steps = _grid_index(t0 + window, t0, dt, "window length")
    if w_steps < 1:
        raise ValueError("window must span at least one step")
    idx = np.array([_grid_index(t, t0, dt, "sample time") for t in sample_times])
    if idx.min() < 0 or idx.max() + w_steps >= len(traj.times):
        raise ValueError("sample windows fall outside the trajectory span")

    y = traj.states @ slow_map.T
    u = traj.inputs
    r, m = slow_map.shape[0], traj.m
    yy = (y[:, :, None] * y[:, None, :]).reshape(len(y), r * r)
    yu = (y[:, :, None] * u[:, None, :]).reshape(len(y), r * m)
    iyy = cumulative_trapezoid(yy, dx=dt, axis=0, initial=0.0)
    iyu = cumulative_trapezoid(yu, dx=dt, axis=0, initial=0.0)

    return AdpDataset(
        delta_yy=yy[idx + w_steps] - yy[idx],
        i_yy=iyy[idx + w_steps] - iyy[idx],
        i_yu0=iyu[idx + w_steps] - iyu[idx],
        window=float(window),
        sample_times=sample_times,
        r=r,
        m=m,
    )


@dataclass
class CostEstimate:
    """Finite-horizon quadratic cost with its truncation context."""

    value: float
    horizon: float
    tail: float  # integrand at the final sample; small tail = safe truncation


def evaluate_cost(traj: Trajectory, slow_map, q, r_w,
                  input_map=None) -> CostEstimate:
    """Trapezoid estimate of the integral of y'Qy + u'Ru along a trajectory.

    y = slow_map @ x; the priced input is ``input_map @ u`` when a map is
    given (clustered runs price the per-cluster reduced input).
    """
    q = check_matrix(q, "q")
    r_w = check_matrix(r_w, "r_w")
    y = traj.slow(slow_map)
    u = traj.inputs if input_map is None else traj.inputs @ check_matrix(input_map).T
    g = np.einsum("ij,jk,ik->i", y, q, y) + np.einsum("ij,jk,ik->i", u, r_w, u)
    value = float(trapezoid(g, dx=traj.dt))
    return CostEstimate(value=value, horizon=float(traj.times[-1] - traj.times[0]),
                        tail=float(g[-1]))


def feedback_policy(k_gain, slow_map=None):
    """u = -K y with y = slow_map @ x (identity map when omitted)."""
    k_gain = check_matrix(k_gain, "k_gain")
    if slow_map is None:
        return lambda t, x: -(k_gain @ x)
    slow_map = check_matrix(slow_map, "slow_map")
    kt = k_gain @ slow_map
    return lambda t, x: -(kt @ x)

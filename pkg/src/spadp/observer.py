"""Neuro-adaptive state observer for plants with unknown dynamics.

The observer runs a nominal Hurwitz model A_hat corrected by output
injection G (q - C x_hat) plus a single-hidden-layer network
W_hat tanh(V_hat [x_hat; u]) that adapts online to absorb the mismatch
between A_hat and the true plant.  Weight adaptation is driven by the
output error through the filter matrix A_c = A_hat - G C, with sigma
damping (the -rho ||q_err|| W terms) keeping the weights bounded, so the
estimation error is uniformly ultimately bounded rather than convergent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, spectral_abscissa
from .sim import LtiSystem, SimulationBlowUp, Trajectory


@dataclass
class ObserverConfig:
    """Observer design: nominal model, output injection, and adaptation.

    a_hat must be Hurwitz and so must a_c = a_hat - g_obs @ c; both are
    checked here because every adaptation signal passes through inv(a_c).
    """

    a_hat: np.ndarray
    g_obs: np.ndarray
    c: np.ndarray
    neurons: int = 20
    eta1: float = 10.0
    eta2: float = 10.0
    rho1: float = 0.1
    rho2: float = 0.1
    init_scale: float = 1.0
    seed: int = 0
    b_hat: np.ndarray | None = None

    def __post_init__(self):
        self.a_hat = check_matrix(self.a_hat, "a_hat")
        self.g_obs = check_matrix(self.g_obs, "g_obs")
        self.c = check_matrix(self.c, "c")
        n = self.a_hat.shape[0]
        if self.a_hat.shape[1] != n:
            raise ValueError("a_hat must be square")
        if self.b_hat is not None:
            self.b_hat = check_matrix(self.b_hat, "b_hat")
            if self.b_hat.shape[0] != n:
                raise ValueError("b_hat row count must match the state dimension")
        if self.c.shape[1] != n:
            raise ValueError("c column count must match the state dimension")
        if self.g_obs.shape != (n, self.c.shape[0]):
            raise ValueError("g_obs must be n-by-p")
        if self.neurons < 1:
            raise ValueError("need at least one hidden neuron")
        for name in ("eta1", "eta2", "rho1", "rho2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        alpha = spectral_abscissa(self.a_hat)
        if alpha >= 0:
            raise ValueError(f"a_hat must be Hurwitz (spectral abscissa {alpha:.3e})")
        self.a_c = self.a_hat - self.g_obs @ self.c
        alpha_c = spectral_abscissa(self.a_c)
        if alpha_c >= 0:
            raise ValueError(f"a_hat - g_obs c must be Hurwitz (abscissa {alpha_c:.3e})")
        # adaptation drive (q_err' C inv(A_c))' = solve(A_c', C') q_err
        self._drive = np.linalg.solve(self.a_c.T, self.c.T)

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]

    @property
    def p(self) -> int:
        return self.c.shape[0]


@dataclass
class ObserverState:
    """Estimate and network weights; advanced jointly by the integrator."""

    x_hat: np.ndarray
    w_hat: np.ndarray
    v_hat: np.ndarray

    def __post_init__(self):
        self.x_hat = np.asarray(self.x_hat, dtype=float).reshape(-1)
        self.w_hat = np.asarray(self.w_hat, dtype=float)
        self.v_hat = np.asarray(self.v_hat, dtype=float)


def init_observer_state(cfg: ObserverConfig, x_hat0, m: int) -> ObserverState:
    """Seeded uniform [-0.1, 0.1] * init_scale weight initialization."""
    rng = np.random.default_rng(cfg.seed)
    n, k = cfg.n, cfg.neurons
    return ObserverState(
        x_hat=np.asarray(x_hat0, dtype=float).reshape(-1).copy(),
        w_hat=cfg.init_scale * rng.uniform(-0.1, 0.1, size=(n, k)),
        v_hat=cfg.init_scale * rng.uniform(-0.1, 0.1, size=(k, n + m)),
    )


def nn_forward(st: ObserverState, x_hat, u) -> np.ndarray:
    """Network output W_hat tanh(V_hat [x_hat; u]) at the given point."""
    x_bar = np.concatenate([np.asarray(x_hat, float).reshape(-1),
                            np.asarray(u, float).reshape(-1)])
    return st.w_hat @ np.tanh(st.v_hat @ x_bar)


def observer_derivatives(st: ObserverState, u, q, cfg: ObserverConfig):
    """Time derivatives (dx_hat, dw_hat, dv_hat) of the observer.

    Output-weight and input-weight updates follow the filtered-error
    gradient rule with sigma damping; sign(0) = 0 by numpy convention.
    A zero output error freezes both weight matrices exactly.

    With b_hat set, the nominal model carries the known input feedthrough
    and the network only has to absorb the drift mismatch; with b_hat
    None, the input acts on the estimate solely through the network.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    x_bar = np.concatenate([st.x_hat, u])
    sig = np.tanh(st.v_hat @ x_bar)
    q_err = q - cfg.c @ st.x_hat
    err_norm = float(np.linalg.norm(q_err))

    dx_hat = cfg.a_hat @ st.x_hat + st.w_hat @ sig + cfg.g_obs @ q_err
    if cfg.b_hat is not None:
        dx_hat = dx_hat + cfg.b_hat @ u

    drive = cfg._drive @ q_err  # (q_err' C inv(A_c))'
    dw_hat = -cfg.eta1 * np.outer(drive, sig) - cfg.rho1 * err_norm * st.w_hat
    back = (1.0 - sig * sig) * (st.w_hat.T @ drive)
    dv_hat = -cfg.eta2 * np.outer(back, np.sign(x_bar)) - cfg.rho2 * err_norm * st.v_hat
    return dx_hat, dw_hat, dv_hat


@dataclass
class CosimResult:
    """Joint plant/observer run: true and estimated trajectories."""

    plant: Trajectory
    estimate: Trajectory
    errors: np.ndarray

    @property
    def error_norms(self) -> np.ndarray:
        return np.linalg.norm(self.errors, axis=1)

    def error_bound_after(self, t_start: float) -> float:
        """Empirical ultimate bound: max ||x - x_hat|| past a warm-up time."""
        mask = self.plant.times >= t_start - 1e-12
        if not mask.any():
            raise ValueError("t_start is past the end of the run")
        return float(self.error_norms[mask].max())

    def errors_to_csv(self, path) -> None:
        header = ",".join(
            ["t"]
            + [f"e{i + 1}" for i in range(self.errors.shape[1])]
            + ["e_norm"]
        )
        table = np.column_stack([self.plant.times, self.errors, self.error_norms])
        np.savetxt(path, table, delimiter=",", fmt="%.17g",
                   header=header, comments="")


def cosimulate(plant: LtiSystem, policy, cfg: ObserverConfig, x0, x_hat0,
               dt: float, t_end: float, blowup: float = 1e8,
               weight_guard: float = 1e6) -> CosimResult:
    """RK4 on the joint plant + observer + weight dynamics.

    The policy sees the estimate, u = policy(t, x_hat), since the true
    state is unavailable by assumption; the plant output q = C x feeds the
    observer at every integrator stage.
    """
    if cfg.c.shape[1] != plant.n:
        raise ValueError("observer output map must match the plant dimension")
    if cfg.n != plant.n:
        raise ValueError("observer model must match the plant dimension")
    n, m, k = plant.n, plant.m, cfg.neurons
    st0 = init_observer_state(cfg, x_hat0, m)

    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    sizes = (n, n, n * k, k * (n + m))
    splits = np.cumsum(sizes)[:-1]

    def pack(x, st):
        return np.concatenate([x, st.x_hat, st.w_hat.ravel(), st.v_hat.ravel()])

    def unpack(z):
        x, xh, w, v = np.split(z, splits)
        return x, ObserverState(xh, w.reshape(n, k), v.reshape(k, n + m))

    def deriv(t, z):
        x, st = unpack(z)
        u = np.asarray(policy(t, st.x_hat), dtype=float).reshape(-1)
        q = cfg.c @ x
        dx = plant.a @ x + plant.b @ u
        dxh, dw, dv = observer_derivatives(st, u, q, cfg)
        return np.concatenate([dx, dxh, dw.ravel(), dv.ravel()])

    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, n))
    estimates = np.empty((n_steps + 1, n))
    inputs = np.empty((n_steps + 1, m))
    z = pack(np.asarray(x0, dtype=float).reshape(-1), st0)
    half = 0.5 * dt
    for i in range(n_steps):
        t = times[i]
        x, st = unpack(z)
        states[i] = x
        estimates[i] = st.x_hat
        inputs[i] = np.asarray(policy(t, st.x_hat), dtype=float).reshape(-1)
        k1 = deriv(t, z)
        k2 = deriv(t + half, z + half * k1)
        k3 = deriv(t + half, z + half * k2)
        k4 = deriv(t + dt, z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x, st = unpack(z)
        xn = float(np.linalg.norm(x))
        if not np.isfinite(xn) or xn > blowup:
            raise SimulationBlowUp(times[i + 1], xn)
        en = float(np.linalg.norm(st.x_hat))
        if not np.isfinite(en) or en > blowup:
            raise SimulationBlowUp(times[i + 1], en)
        wn = max(float(np.abs(st.w_hat).max(initial=0.0)),
                 float(np.abs(st.v_hat).max(initial=0.0)))
        if not np.isfinite(wn) or wn > weight_guard:
            raise SimulationBlowUp(times[i + 1], wn)
    x, st = unpack(z)
    states[-1] = x
    estimates[-1] = st.x_hat
    inputs[-1] = np.asarray(policy(times[-1], st.x_hat), dtype=float).reshape(-1)

    plant_traj = Trajectory(times, states, inputs, dt)
    est_traj = Trajectory(times, estimates, inputs, dt)
    return CosimResult(plant=plant_traj, estimate=est_traj,
                       errors=states - estimates)

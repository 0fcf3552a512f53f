"""Config-driven experiment runner.

A single JSON file describes one experiment end to end: the plant (two-time-
scale blocks or a clustered network), the quadratic weights, the exploration
signal, the sampling grid for the learner, an optional state observer, and
where to write results.  :func:`run` executes the scenario, :func:`sweep_epsilon`
repeats it across a list of time-scale ratios, and :func:`compare_dims` reports
the sample-count arithmetic for reduced versus full-order learning.

Scenario kinds
--------------
``sp_state_feedback``      learn the reduced gain of a two-time-scale plant
                           from full-state data
``sp_output_feedback``     same plant, but learning runs on the estimate of an
                           adaptive observer driven by partial measurements
``cluster_centralized``    one reduced gain for the cluster means of a
                           networked consensus system
``cluster_decentralized``  one scalar gain per cluster, each learned from that
                           cluster's data alone
``cluster_output_feedback``  centralized cluster learning on observer estimates

Every numeric section of the emitted report carries the hash of the resolved
configuration, so a result can always be traced back to the exact settings
that produced it.  Wall-clock timings go to the log only; reports depend on
nothing but the config, which keeps reruns bit-identical.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .clusters import ClusteredNetwork, build_network, decoupled_slow, full_system, transforms
from .learner import (AdpConfig, LearnDivergence, LearnResult, RankCheck, check_rank,
                      composite_gain, learn, learn_decentralized, learn_output_feedback)
from .linalg import check_matrix, spectral_abscissa
from .observer import ObserverConfig, cosimulate
from .riccati import care_solve, closed_loop_cost, slow_pole_report
from .sim import (ExplorationSignal, LtiSystem, Trajectory, collect_adp_data,
                  evaluate_cost, feedback_policy, simulate)
from .spmodel import SpSystem, assemble_full, reduce_slow

log = logging.getLogger(__name__)

SCENARIOS = (
    "sp_state_feedback",
    "sp_output_feedback",
    "cluster_centralized",
    "cluster_decentralized",
    "cluster_output_feedback",
)

SP_SCENARIOS = ("sp_state_feedback", "sp_output_feedback")
CLUSTER_SCENARIOS = ("cluster_centralized", "cluster_decentralized",
                     "cluster_output_feedback")
OUTPUT_FEEDBACK_SCENARIOS = ("sp_output_feedback", "cluster_output_feedback")

# Trailing slack past the last quadrature window; keeps the final window
# clear of the trajectory endpoint.  Fixed so horizons are reproducible.
HORIZON_MARGIN = 0.1

REPORT_SCHEMA = "spadp-report-v1"


class ConfigError(ValueError):
    """Raised when an experiment config is malformed or inconsistent."""


def config_hash(resolved: dict) -> str:
    """sha256 over the canonical JSON form of a resolved config."""
    payload = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _matrix(value, name: str) -> np.ndarray:
    try:
        return check_matrix(value, name)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _vector(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be a finite, non-empty vector")
    return arr


def _weight(value, dim: int, name: str) -> np.ndarray:
    """Scalar weights mean w * identity; matrices are taken as given."""
    if np.isscalar(value):
        w = float(value)
        if w <= 0:
            raise ConfigError(f"{name} must be positive")
        return w * np.eye(dim)
    mat = _matrix(value, name)
    if mat.shape != (dim, dim):
        raise ConfigError(f"{name} must be {dim}x{dim}, got {mat.shape}")
    if not np.allclose(mat, mat.T):
        raise ConfigError(f"{name} must be symmetric")
    return mat


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing '{key}' in {where}")
    return section[key]


def substeps(dt: float, epsilon: float, cap: int = 1000) -> int:
    """Integration substeps per sample interval.

    Sampling stays on the configured grid; the integrator refines each
    interval until its step is no larger than a fifth of the fast time
    constant, so stiff runs stay accurate without changing the data grid.
    """
    if dt <= 0 or epsilon <= 0:
        raise ConfigError("dt and epsilon must be positive")
    sub = max(1, math.ceil(dt / (epsilon / 5.0)))
    if sub > cap:
        raise ConfigError(
            f"epsilon {epsilon:g} needs {sub} substeps per sample at dt {dt:g}; "
            f"lower dt or raise the cap ({cap})")
    return sub


def subsample(traj: Trajectory, sub: int) -> Trajectory:
    """Every sub-th sample of a finely integrated trajectory."""
    if sub < 1:
        raise ValueError("sub must be at least 1")
    if sub == 1:
        return traj
    return Trajectory(traj.times[::sub], traj.states[::sub],
                      traj.inputs[::sub], traj.dt * sub)


@dataclass
class ExperimentConfig:
    """Validated, fully resolved experiment description.

    ``resolved`` is the plain dict after defaults were applied; its hash
    stamps every numeric block of the report.  The output directory is
    deliberately excluded from the hash: where results land must not change
    what they are.
    """

    scenario: str
    epsilon: float
    plant: dict
    weights: dict
    exploration: dict
    sampling: dict
    learner: dict
    evaluation: dict
    x0: np.ndarray
    observer: dict | None
    perfect_observer: bool
    outdir: Path | None
    resolved: dict

    @property
    def hash(self) -> str:
        return config_hash(self.resolved)

    @property
    def is_cluster(self) -> bool:
        return self.scenario in CLUSTER_SCENARIOS

    @property
    def is_output_feedback(self) -> bool:
        return self.scenario in OUTPUT_FEEDBACK_SCENARIOS

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        d = copy.deepcopy(raw)

        scenario = _require(d, "scenario", "config")
        if scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario '{scenario}'; expected one of {', '.join(SCENARIOS)}")

        epsilon = float(_require(d, "epsilon", "config"))
        if epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        d["epsilon"] = epsilon

        plant = _require(d, "plant", "config")
        if scenario in SP_SCENARIOS:
            for key in ("a11", "a12", "a21", "a22", "b1", "b2"):
                _require(plant, key, "plant")
            sp = _build_sp_system(plant, epsilon)  # validates shapes
            n = sp.n
        else:
            sizes = [int(s) for s in _require(plant, "cluster_sizes", "plant")]
            plant.setdefault("intra_weight", 1.0)
            plant.setdefault("inter_edges", [])
            net = _build_network(plant, epsilon)  # validates structure
            n = net.n_agents * net.s

        x0 = _vector(_require(d, "x0", "config"), "x0")
        if x0.size != n:
            raise ConfigError(f"x0 has {x0.size} entries; the plant has {n} states")
        d["x0"] = [float(v) for v in x0]

        weights = _require(d, "weights", "config")
        _require(weights, "q", "weights")
        _require(weights, "r", "weights")

        exploration = _require(d, "exploration", "config")
        exploration.setdefault("n_terms", 10)
        exploration.setdefault("freq_range", [0.1, 50.0])
        exploration.setdefault("amplitude", 1.0)
        exploration.setdefault("offset", 0.0)
        exploration.setdefault("seed", 0)
        exploration.setdefault("random_freqs", False)
        exploration.setdefault("per_cluster", scenario == "cluster_decentralized")
        if exploration["per_cluster"] and scenario != "cluster_decentralized":
            raise ConfigError("per_cluster exploration only applies to "
                              "cluster_decentralized runs")

        sampling = _require(d, "sampling", "config")
        dt = float(_require(sampling, "dt", "sampling"))
        window = float(_require(sampling, "window", "sampling"))
        count = int(_require(sampling, "count", "sampling"))
        sampling.setdefault("spacing", window)
        sampling.setdefault("start", 0.0)
        spacing = float(sampling["spacing"])
        start = float(sampling["start"])
        if dt <= 0 or window <= 0 or spacing <= 0:
            raise ConfigError("sampling dt, window, spacing must be positive")
        if count < 1:
            raise ConfigError("sampling count must be at least 1")
        if start < 0:
            raise ConfigError("sampling start must be nonnegative")
        sampling["dt"], sampling["window"] = dt, window
        sampling["count"], sampling["spacing"], sampling["start"] = count, spacing, start

        learner_cfg = d.setdefault("learner", {})
        learner_cfg.setdefault("k0", None)
        learner_cfg.setdefault("gamma", 1e-6)
        learner_cfg.setdefault("max_iters", 30)
        learner_cfg.setdefault("q_boost_factor", 10.0)
        learner_cfg.setdefault("q_boost_attempts", 3)
        if float(learner_cfg["q_boost_factor"]) <= 1.0:
            raise ConfigError("q_boost_factor must exceed 1")
        if int(learner_cfg["q_boost_attempts"]) < 0:
            raise ConfigError("q_boost_attempts must be nonnegative")

        evaluation = d.setdefault("evaluation", {})
        evaluation.setdefault("horizon", 15.0)
        evaluation.setdefault(
            "pole_threshold", 4.0 if scenario in CLUSTER_SCENARIOS else 10.0)
        if float(evaluation["horizon"]) <= 0:
            raise ConfigError("evaluation horizon must be positive")

        observer = d.get("observer")
        if scenario in OUTPUT_FEEDBACK_SCENARIOS:
            if observer is None:
                raise ConfigError(f"scenario {scenario} requires an observer section")
            _require(observer, "c", "observer")
            _require(observer, "model", "observer")
            _require(observer, "horizon", "observer")
            observer.setdefault("injection_weight", 100.0)
            observer.setdefault("neurons", 20)
            observer.setdefault("eta1", 20.0)
            observer.setdefault("eta2", 1.0)
            observer.setdefault("rho1", 0.005)
            observer.setdefault("rho2", 0.005)
            observer.setdefault("init_scale", 1.0)
            observer.setdefault("seed", 0)
            observer.setdefault("known_input", False)
            observer.setdefault("x_hat0", None)
            observer.setdefault("tube_start", sampling["start"])
            horizon = float(observer["horizon"])
            needed = (start + (count - 1) * spacing + window)
            if horizon < needed:
                raise ConfigError(
                    f"observer horizon {horizon:g} ends before the last sample "
                    f"window at {needed:g}")
        elif observer is not None:
            raise ConfigError(f"scenario {scenario} takes no observer section")

        perfect = bool(d.get("perfect_observer", False))
        d["perfect_observer"] = perfect
        if perfect and scenario not in OUTPUT_FEEDBACK_SCENARIOS:
            raise ConfigError("perfect_observer only applies to output-feedback runs")

        outdir = d.pop("outdir", None)
        resolved = d  # defaults are in; this dict is the hash source

        return cls(
            scenario=scenario,
            epsilon=epsilon,
            plant=plant,
            weights=weights,
            exploration=exploration,
            sampling=sampling,
            learner=learner_cfg,
            evaluation=evaluation,
            x0=x0,
            observer=observer,
            perfect_observer=perfect,
            outdir=Path(outdir) if outdir else None,
            resolved=resolved,
        )

    def with_overrides(self, seed=None, dt=None, outdir=None,
                       epsilon=None, perfect_observer=None) -> "ExperimentConfig":
        """New config with CLI-style overrides applied and re-validated."""
        raw = copy.deepcopy(self.resolved)
        if seed is not None:
            raw["exploration"]["seed"] = int(seed)
        if dt is not None:
            raw["sampling"]["dt"] = float(dt)
        if epsilon is not None:
            raw["epsilon"] = float(epsilon)
        if perfect_observer is not None:
            raw["perfect_observer"] = bool(perfect_observer)
        if outdir is not None:
            raw["outdir"] = str(outdir)
        elif self.outdir is not None:
            raw["outdir"] = str(self.outdir)
        return ExperimentConfig.from_dict(raw)


def _build_sp_system(plant: dict, epsilon: float) -> SpSystem:
    try:
        return SpSystem(
            a11=_matrix(plant["a11"], "a11"),
            a12=_matrix(plant["a12"], "a12"),
            a21=_matrix(plant["a21"], "a21"),
            a22=_matrix(plant["a22"], "a22"),
            b1=_matrix(plant["b1"], "b1"),
            b2=_matrix(plant["b2"], "b2"),
            epsilon=epsilon,
        )
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from exc


def _build_network(plant: dict, epsilon: float) -> ClusteredNetwork:
    f_self = plant.get("f_self")
    try:
        return build_network(
            plant["cluster_sizes"],
            intra_weight=float(plant.get("intra_weight", 1.0)),
            inter_edges=[(int(i), int(j), float(w))
                         for i, j, w in plant.get("inter_edges", [])],
            f_self=None if f_self is None else _matrix(f_self, "f_self"),
            epsilon=epsilon,
        )
    except ValueError as exc:
        raise ConfigError(f"plant: {exc}") from exc


def _sample_times(sampling: dict) -> np.ndarray:
    return sampling["start"] + np.arange(sampling["count"]) * sampling["spacing"]


def _learning_horizon(sampling: dict) -> float:
    dt = sampling["dt"]
    last = (sampling["start"] + (sampling["count"] - 1) * sampling["spacing"]
            + sampling["window"])
    return float(np.ceil((last + HORIZON_MARGIN) / dt) * dt)


def _exploration_signal(cfg: ExperimentConfig, m: int) -> ExplorationSignal:
    e = cfg.exploration
    return ExplorationSignal.generate(
        m,
        n_terms=int(e["n_terms"]),
        freq_range=tuple(float(v) for v in e["freq_range"]),
        amplitude=float(e["amplitude"]),
        offset=e["offset"],
        seed=int(e["seed"]),
        random_freqs=bool(e["random_freqs"]),
    )


def _per_cluster_signals(cfg: ExperimentConfig, r: int) -> list[ExplorationSignal]:
    """Independent single-channel signals, seeded seed + cluster index."""
    e = cfg.exploration
    return [
        ExplorationSignal.generate(
            1,
            n_terms=int(e["n_terms"]),
            freq_range=tuple(float(v) for v in e["freq_range"]),
            amplitude=float(e["amplitude"]),
            offset=e["offset"],
            seed=int(e["seed"]) + a,
            random_freqs=bool(e["random_freqs"]),
        )
        for a in range(r)
    ]


def _adp_config(cfg: ExperimentConfig, q: np.ndarray, r_w: np.ndarray,
                q_scale: float = 1.0) -> AdpConfig:
    lc = cfg.learner
    k0 = lc["k0"]
    return AdpConfig(
        q_weight=q_scale * q,
        r_weight=r_w,
        k0=None if k0 is None else _matrix(k0, "k0"),
        gamma=float(lc["gamma"]),
        max_iters=int(lc["max_iters"]),
    )


@dataclass
class _Outcome:
    """Everything a scenario execution produces, before report assembly."""

    results: list[LearnResult]
    gains: dict
    a_closed: np.ndarray
    rank: RankCheck
    trajectories: dict
    q_boost: dict
    slow_dim: int
    input_dim: int
    sub: int
    cost_args: tuple  # (a, b, k_full, q, r, x0, y_map) for the exact cost
    eval_builder: object  # callable (k) -> Trajectory of the closed loop
    observer_info: dict | None = None


def _learn_with_boost(datasets, make_cfgs, learn_fn, certify, cfg: ExperimentConfig):
    """Learn, then relearn with a stiffer Q until the closed loop certifies.

    A converged gain that fails the stability certificate is retried with
    the state weight scaled up by q_boost_factor, at most q_boost_attempts
    times.  The data never changes; only the weights do.
    """
    factor = float(cfg.learner["q_boost_factor"])
    attempts = int(cfg.learner["q_boost_attempts"])
    boost = {"factor": factor, "attempts_allowed": attempts,
             "attempts_used": 0, "scale_applied": 1.0}
    alpha = None
    results = None
    for attempt in range(attempts + 1):
        scale = factor ** attempt
        boost["attempts_used"] = attempt
        boost["scale_applied"] = scale
        results = learn_fn(datasets, make_cfgs(scale))
        converged = all(res.converged for res in results)
        alpha = certify(results) if converged else None
        if converged and alpha < 0:
            return results, alpha, boost
        if not converged:
            break  # boosting Q cannot fix a non-converged regression
        log.warning("learned gain failed the stability certificate "
                    "(spectral abscissa %.3e); boosting Q by %g", alpha, factor)
    return results, alpha, boost


# ---------------------------------------------------------------------------
# scenario executors


def _exec_sp_state_feedback(cfg: ExperimentConfig) -> _Outcome:
    sp = _build_sp_system(cfg.plant, cfg.epsilon)
    full = assemble_full(sp)
    t_slow = sp.t_slow
    q = _weight(cfg.weights["q"], sp.r, "weights.q")
    r_w = _weight(cfg.weights["r"], sp.m, "weights.r")

    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    horizon = _learning_horizon(cfg.sampling)
    sig = _exploration_signal(cfg, sp.m)

    fine = simulate(full, sig.as_policy(), cfg.x0, dt / sub, horizon)
    coarse = subsample(fine, sub)
    # Quadrature runs on the fine grid; dt only sets the window layout.
    data = collect_adp_data(fine, t_slow, cfg.sampling["window"],
                            _sample_times(cfg.sampling))
    rank = check_rank(data)

    def certify(results):
        k = results[0].k_final
        return spectral_abscissa(full.a - full.b @ (k @ t_slow))

    results, alpha, boost = _learn_with_boost(
        data,
        make_cfgs=lambda s: _adp_config(cfg, q, r_w, s),
        learn_fn=lambda d, c: [learn(d, c)],
        certify=certify,
        cfg=cfg,
    )
    k = results[0].k_final
    k_full = k @ t_slow

    def eval_builder(dt_fine, t_eval):
        return simulate(full, feedback_policy(k, t_slow), cfg.x0, dt_fine, t_eval)

    return _Outcome(
        results=results,
        gains={"K": k},
        a_closed=full.a - full.b @ k_full,
        rank=rank,
        trajectories={"learning": coarse},
        q_boost=boost,
        slow_dim=sp.r,
        input_dim=sp.m,
        sub=sub,
        cost_args=(full.a, full.b, k_full, q, r_w, cfg.x0, t_slow),
        eval_builder=eval_builder,
    )


def _sp_observer_config(cfg: ExperimentConfig, sp: SpSystem,
                        full: LtiSystem) -> ObserverConfig:
    obs = cfg.observer
    c = _matrix(obs["c"], "observer.c")
    model = obs["model"]
    if "a_hat" in model:
        a_hat = _matrix(model["a_hat"], "observer.model.a_hat")
    else:
        # Deliberately wrong internal model: scaled rows plus a slow leak,
        # so the network has a real mismatch to absorb.
        a_hat = full.a.copy()
        a_hat[:sp.r, :] *= float(model.get("slow_scale", 1.0))
        a_hat[sp.r:, :] *= float(model.get("fast_scale", 1.0))
        a_hat[:sp.r, :sp.r] -= float(model.get("leak", 0.0)) * np.eye(sp.r)
    g = _injection_gain(obs, a_hat, c)
    b_hat = full.b if obs["known_input"] else None
    return ObserverConfig(
        a_hat=a_hat, g_obs=g, c=c,
        neurons=int(obs["neurons"]),
        eta1=float(obs["eta1"]), eta2=float(obs["eta2"]),
        rho1=float(obs["rho1"]), rho2=float(obs["rho2"]),
        init_scale=float(obs["init_scale"]), seed=int(obs["seed"]),
        b_hat=b_hat,
    )


def _injection_gain(obs: dict, a_hat: np.ndarray, c: np.ndarray) -> np.ndarray:
    if "g" in obs and obs["g"] is not None:
        return _matrix(obs["g"], "observer.g")
    w = float(obs["injection_weight"])
    if w <= 0:
        raise ConfigError("observer injection_weight must be positive")
    n, p = a_hat.shape[0], c.shape[0]
    # Dual Riccati design: fast, well-damped error dynamics a_hat - G c.
    return care_solve(a_hat.T, c.T, w * np.eye(n), np.eye(p)).k.T


def _exec_sp_output_feedback(cfg: ExperimentConfig) -> _Outcome:
    if cfg.perfect_observer:
        # Zero estimation error collapses the estimate onto the state, so
        # the run is routed through the state-feedback path itself; the two
        # must agree bit for bit by construction.
        out = _exec_sp_state_feedback(cfg)
        out.observer_info = {"perfect_hook": True, "bound": 0.0,
                             "tube_start": float(cfg.observer["tube_start"])}
        return out

    sp = _build_sp_system(cfg.plant, cfg.epsilon)
    full = assemble_full(sp)
    t_slow = sp.t_slow
    q = _weight(cfg.weights["q"], sp.r, "weights.q")
    r_w = _weight(cfg.weights["r"], sp.m, "weights.r")

    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    obs_cfg = _sp_observer_config(cfg, sp, full)
    sig = _exploration_signal(cfg, sp.m)
    x_hat0 = (np.zeros(full.n) if cfg.observer["x_hat0"] is None
              else _vector(cfg.observer["x_hat0"], "observer.x_hat0"))
    horizon = float(cfg.observer["horizon"])

    cosim = cosimulate(full, sig.as_policy(), obs_cfg, cfg.x0, x_hat0,
                       dt / sub, horizon)
    tube_start = float(cfg.observer["tube_start"])
    bound = cosim.error_bound_after(tube_start)

    est_coarse = subsample(cosim.estimate, sub)
    plant_coarse = subsample(cosim.plant, sub)
    data = collect_adp_data(cosim.estimate, t_slow, cfg.sampling["window"],
                            _sample_times(cfg.sampling))
    rank = check_rank(data)

    def certify(results):
        k = results[0].k_final
        return spectral_abscissa(full.a - full.b @ (k @ t_slow))

    results, alpha, boost = _learn_with_boost(
        data,
        make_cfgs=lambda s: _adp_config(cfg, q, r_w, s),
        learn_fn=lambda d, c: [learn_output_feedback(d, c, observer_bound=bound)],
        certify=certify,
        cfg=cfg,
    )
    k = results[0].k_final
    k_full = k @ t_slow

    def eval_builder(dt_fine, t_eval):
        # Honest closed loop: the controller still only sees the estimate.
        res = cosimulate(full, feedback_policy(k, t_slow), obs_cfg,
                         cfg.x0, x_hat0, dt_fine, t_eval)
        return res.plant

    return _Outcome(
        results=results,
        gains={"K": k},
        a_closed=full.a - full.b @ k_full,
        rank=rank,
        trajectories={"learning": plant_coarse, "estimate": est_coarse},
        q_boost=boost,
        slow_dim=sp.r,
        input_dim=sp.m,
        sub=sub,
        cost_args=(full.a, full.b, k_full, q, r_w, cfg.x0, t_slow),
        eval_builder=eval_builder,
        observer_info={
            "bound": bound,
            "tube_start": tube_start,
            "horizon": horizon,
            "a_c_spectral_abscissa": spectral_abscissa(obs_cfg.a_c),
            "errors": cosim,
        },
    )


def _cluster_setup(cfg: ExperimentConfig):
    net = _build_network(cfg.plant, cfg.epsilon)
    tf = transforms(net)
    full = full_system(net)
    t1 = tf.lift(tf.t1)
    m_proj = tf.m_proj
    plant_r = LtiSystem(full.a, full.b @ m_proj)  # reduced, per-cluster input
    return net, tf, full, t1, m_proj, plant_r


def _exec_cluster_centralized(cfg: ExperimentConfig) -> _Outcome:
    net, tf, full, t1, m_proj, plant_r = _cluster_setup(cfg)
    r = len(net.clusters)
    q = _weight(cfg.weights["q"], r, "weights.q")
    r_w = _weight(cfg.weights["r"], r, "weights.r")

    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    horizon = _learning_horizon(cfg.sampling)
    sig = _exploration_signal(cfg, r)

    fine = simulate(plant_r, sig.as_policy(), cfg.x0, dt / sub, horizon)
    coarse = subsample(fine, sub)
    data = collect_adp_data(fine, t1, cfg.sampling["window"],
                            _sample_times(cfg.sampling))
    rank = check_rank(data)

    def certify(results):
        k = results[0].k_final
        return spectral_abscissa(full.a - plant_r.b @ (k @ t1))

    results, alpha, boost = _learn_with_boost(
        data,
        make_cfgs=lambda s: _adp_config(cfg, q, r_w, s),
        learn_fn=lambda d, c: [learn(d, c)],
        certify=certify,
        cfg=cfg,
    )
    k = results[0].k_final

    def eval_builder(dt_fine, t_eval):
        return simulate(plant_r, feedback_policy(k, t1), cfg.x0, dt_fine, t_eval)

    return _Outcome(
        results=results,
        gains={"K": k},
        a_closed=full.a - plant_r.b @ (k @ t1),
        rank=rank,
        trajectories={"learning": coarse},
        q_boost=boost,
        slow_dim=r,
        input_dim=r,
        sub=sub,
        cost_args=(full.a, plant_r.b, k @ t1, q, r_w, cfg.x0, t1),
        eval_builder=eval_builder,
    )


def _exec_cluster_decentralized(cfg: ExperimentConfig) -> _Outcome:
    net, tf, full, t1, m_proj, plant_r = _cluster_setup(cfg)
    r = len(net.clusters)
    # Per-cluster weights: scalars (or 1x1 blocks) for each aggregate state.
    q_diag = cfg.weights["q"]
    r_diag = cfg.weights["r"]
    q_list = q_diag if isinstance(q_diag, (list, tuple)) else [q_diag] * r
    r_list = r_diag if isinstance(r_diag, (list, tuple)) else [r_diag] * r
    if len(q_list) != r or len(r_list) != r:
        raise ConfigError(f"per-cluster weights must have {r} entries")
    qs = [_weight(v, 1, f"weights.q[{a}]") for a, v in enumerate(q_list)]
    rs = [_weight(v, 1, f"weights.r[{a}]") for a, v in enumerate(r_list)]

    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    horizon = _learning_horizon(cfg.sampling)
    if cfg.exploration["per_cluster"]:
        sigs = _per_cluster_signals(cfg, r)

        def behavior(t, x):
            return np.concatenate([s(t) for s in sigs])
    else:
        behavior = _exploration_signal(cfg, r).as_policy()

    fine = simulate(plant_r, behavior, cfg.x0, dt / sub, horizon)
    coarse = subsample(fine, sub)
    samples = _sample_times(cfg.sampling)
    datasets = []
    for a in range(r):
        view = Trajectory(fine.times, fine.states,
                          fine.inputs[:, [a]], fine.dt)
        datasets.append(collect_adp_data(view, t1[a:a + 1],
                                         cfg.sampling["window"], samples))
    ranks = [check_rank(ds) for ds in datasets]
    rank = RankCheck(ok=all(rc.ok for rc in ranks),
                     rank=min(rc.rank for rc in ranks),
                     required=max(rc.required for rc in ranks))

    def make_cfgs(scale):
        lc = cfg.learner
        k0 = lc["k0"]
        return [
            AdpConfig(q_weight=scale * qs[a], r_weight=rs[a],
                      k0=None if k0 is None else _matrix(k0, "k0"),
                      gamma=float(lc["gamma"]), max_iters=int(lc["max_iters"]))
            for a in range(r)
        ]

    def certify(results):
        kc = composite_gain(results)
        return spectral_abscissa(full.a - plant_r.b @ (kc @ t1))

    results, alpha, boost = _learn_with_boost(
        datasets,
        make_cfgs=make_cfgs,
        learn_fn=lambda ds, cs: learn_decentralized(ds, cs),
        certify=certify,
        cfg=cfg,
    )
    kc = composite_gain(results)
    q_comp = np.diag([float(q[0, 0]) for q in qs])
    r_comp = np.diag([float(rv[0, 0]) for rv in rs])

    def eval_builder(dt_fine, t_eval):
        return simulate(plant_r, feedback_policy(kc, t1), cfg.x0, dt_fine, t_eval)

    return _Outcome(
        results=results,
        gains={"K": kc,
               "per_cluster": [float(res.k_final[0, 0]) for res in results]},
        a_closed=full.a - plant_r.b @ (kc @ t1),
        rank=rank,
        trajectories={"learning": coarse},
        q_boost=boost,
        slow_dim=r,
        input_dim=r,
        sub=sub,
        cost_args=(full.a, plant_r.b, kc @ t1, q_comp, r_comp, cfg.x0, t1),
        eval_builder=eval_builder,
    )


def _cluster_observer_config(cfg: ExperimentConfig, net: ClusteredNetwork,
                             tf, plant_r: LtiSystem) -> ObserverConfig:
    obs = cfg.observer
    c_spec = obs["c"]
    if isinstance(c_spec, str):
        if c_spec != "cluster_means":
            raise ConfigError(f"unknown observer output map '{c_spec}'")
        c = tf.lift(tf.t1)
    else:
        c = _matrix(c_spec, "observer.c")
    model = obs["model"]
    if "a_hat" in model:
        a_hat = _matrix(model["a_hat"], "observer.model.a_hat")
    else:
        # Same topology, wrong weights: intra and inter couplings scaled,
        # plus a uniform leak so the internal model is Hurwitz on its own.
        leak = float(model.get("leak", 0.0))
        net_hat = build_network(
            [len(idx) for idx in net.clusters],
            intra_weight=float(model.get("intra_scale", 1.0))
            * float(cfg.plant.get("intra_weight", 1.0)),
            inter_edges=[(int(i), int(j),
                          float(w) * float(model.get("inter_scale", 1.0)))
                         for i, j, w in cfg.plant.get("inter_edges", [])],
            f_self=-leak * np.eye(net.s),
            epsilon=cfg.epsilon,
        )
        a_hat = full_system(net_hat).a
    g = _injection_gain(obs, a_hat, c)
    b_hat = plant_r.b if obs["known_input"] else None
    return ObserverConfig(
        a_hat=a_hat, g_obs=g, c=c,
        neurons=int(obs["neurons"]),
        eta1=float(obs["eta1"]), eta2=float(obs["eta2"]),
        rho1=float(obs["rho1"]), rho2=float(obs["rho2"]),
        init_scale=float(obs["init_scale"]), seed=int(obs["seed"]),
        b_hat=b_hat,
    )


def _exec_cluster_output_feedback(cfg: ExperimentConfig) -> _Outcome:
    if cfg.perfect_observer:
        out = _exec_cluster_centralized(cfg)
        out.observer_info = {"perfect_hook": True, "bound": 0.0,
                             "tube_start": float(cfg.observer["tube_start"])}
        return out

    net, tf, full, t1, m_proj, plant_r = _cluster_setup(cfg)
    r = len(net.clusters)
    q = _weight(cfg.weights["q"], r, "weights.q")
    r_w = _weight(cfg.weights["r"], r, "weights.r")

    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    obs_cfg = _cluster_observer_config(cfg, net, tf, plant_r)
    sig = _exploration_signal(cfg, r)
    x_hat0 = (np.zeros(plant_r.n) if cfg.observer["x_hat0"] is None
              else _vector(cfg.observer["x_hat0"], "observer.x_hat0"))
    horizon = float(cfg.observer["horizon"])

    cosim = cosimulate(plant_r, sig.as_policy(), obs_cfg, cfg.x0, x_hat0,
                       dt / sub, horizon)
    tube_start = float(cfg.observer["tube_start"])
    bound = cosim.error_bound_after(tube_start)

    est_coarse = subsample(cosim.estimate, sub)
    plant_coarse = subsample(cosim.plant, sub)
    data = collect_adp_data(cosim.estimate, t1, cfg.sampling["window"],
                            _sample_times(cfg.sampling))
    rank = check_rank(data)

    def certify(results):
        k = results[0].k_final
        return spectral_abscissa(full.a - plant_r.b @ (k @ t1))

    results, alpha, boost = _learn_with_boost(
        data,
        make_cfgs=lambda s: _adp_config(cfg, q, r_w, s),
        learn_fn=lambda d, c: [learn_output_feedback(d, c, observer_bound=bound)],
        certify=certify,
        cfg=cfg,
    )
    k = results[0].k_final

    def eval_builder(dt_fine, t_eval):
        res = cosimulate(plant_r, feedback_policy(k, t1), obs_cfg,
                         cfg.x0, x_hat0, dt_fine, t_eval)
        return res.plant

    return _Outcome(
        results=results,
        gains={"K": k},
        a_closed=full.a - plant_r.b @ (k @ t1),
        rank=rank,
        trajectories={"learning": plant_coarse, "estimate": est_coarse},
        q_boost=boost,
        slow_dim=r,
        input_dim=r,
        sub=sub,
        cost_args=(full.a, plant_r.b, k @ t1, q, r_w, cfg.x0, t1),
        eval_builder=eval_builder,
        observer_info={
            "bound": bound,
            "tube_start": tube_start,
            "horizon": horizon,
            "a_c_spectral_abscissa": spectral_abscissa(obs_cfg.a_c),
            "errors": cosim,
        },
    )


_EXECUTORS = {
    "sp_state_feedback": _exec_sp_state_feedback,
    "sp_output_feedback": _exec_sp_output_feedback,
    "cluster_centralized": _exec_cluster_centralized,
    "cluster_decentralized": _exec_cluster_decentralized,
    "cluster_output_feedback": _exec_cluster_output_feedback,
}


# ---------------------------------------------------------------------------
# report assembly and output


@dataclass
class RunReport:
    """Machine-readable record of one harness invocation."""

    kind: str  # run | sweep | compare
    scenario: str
    converged: bool
    stable: bool | None
    report: dict
    outdir: Path | None
    files: list[str] = field(default_factory=list)
    learn_results: list[LearnResult] = field(default_factory=list)
    gains: dict = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.converged and self.stable is not False

    def to_json_dict(self) -> dict:
        return self.report


def _json_ready(value):
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return [[float(v.real), float(v.imag)] for v in value.reshape(-1)]
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _pole_block(a_closed: np.ndarray, threshold: float, h: str) -> dict:
    rep = slow_pole_report(a_closed, np.zeros((a_closed.shape[0], 1)),
                           np.zeros((1, a_closed.shape[0])), threshold)
    # Poles serialize as [re, im] pairs regardless of the spectrum's dtype.
    return {
        "config_hash": h,
        "threshold": threshold,
        "slow": _json_ready(rep.slow.astype(complex)),
        "fast": _json_ready(rep.fast.astype(complex)),
        "spectral_abscissa": rep.spectral_abscissa,
    }


def _samples_block(cfg: ExperimentConfig, out: _Outcome, h: str) -> dict:
    s = cfg.sampling
    span = s["start"] + (s["count"] - 1) * s["spacing"] + s["window"]
    return {
        "config_hash": h,
        "count": s["count"],
        "window": s["window"],
        "spacing": s["spacing"],
        "start": s["start"],
        "dt": s["dt"],
        "substeps": out.sub,
        "rank_achieved": out.rank.rank,
        "rank_required": out.rank.required,
        "minimal_count": out.rank.required,
        "minimal_horizon_s": out.rank.required * s["window"],
        "learning_span_s": span,
    }


def _evaluate_closed_loop(cfg: ExperimentConfig, out: _Outcome):
    """Simulated and exact quadratic costs of the learned feedback."""
    a, b, k_full, q, r_w, x0, y_map = out.cost_args
    j_exact = closed_loop_cost(a, b, k_full, q, r_w, x0, y_map=y_map)
    dt = cfg.sampling["dt"]
    t_eval = float(np.ceil(float(cfg.evaluation["horizon"]) / dt) * dt)
    fine = out.eval_builder(dt / out.sub, t_eval)
    coarse = subsample(fine, out.sub)
    est = evaluate_cost(fine, y_map, q, r_w)
    return est, j_exact, coarse


def run(config, outdir=None) -> RunReport:
    """Execute one scenario end to end and (optionally) write its artifacts.

    ``config`` may be an :class:`ExperimentConfig`, a dict, or a path to a
    JSON file.  ``outdir`` overrides the config's output directory; when
    neither is set nothing is written and the report lives only in memory.
    """
    cfg = _coerce_config(config)
    if outdir is not None:
        cfg = cfg.with_overrides(outdir=outdir)
    t0 = time.perf_counter()
    try:
        report = _run_validated(cfg)
    except Exception as exc:
        _flush_failure(cfg, exc)
        raise
    log.info("run %s finished in %.2f s (wall clock, informational)",
             cfg.scenario, time.perf_counter() - t0)
    return report


def _coerce_config(config) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        return config
    if isinstance(config, dict):
        return ExperimentConfig.from_dict(config)
    return ExperimentConfig.from_file(config)


def _run_validated(cfg: ExperimentConfig) -> RunReport:
    h = cfg.hash
    try:
        out = _EXECUTORS[cfg.scenario](cfg)
    except LearnDivergence as exc:
        # Divergence is a non-convergence verdict, not a crash: report it.
        log.error("learning diverged: %s", exc)
        return _write_report(cfg, _nonconverged_report(cfg, h, str(exc)),
                             converged=False, stable=None, results=[], gains={},
                             trajectories={}, observer=None, convergence_rows=[])

    regression_converged = all(res.converged for res in out.results)
    alpha = spectral_abscissa(out.a_closed)
    stable = bool(alpha < 0) if regression_converged else None
    # run-level verdict: a gain that fails the stability certificate is a
    # failed run, so converged=true always comes with a negative abscissa
    converged = regression_converged and bool(stable)

    report = {
        "schema": REPORT_SCHEMA,
        "kind": "run",
        "scenario": cfg.scenario,
        "config_hash": h,
        "converged": converged,
        "stable": stable,
        "gains": {"config_hash": h,
                  **{name: _json_ready(v) for name, v in out.gains.items()}},
        "learning": {
            "config_hash": h,
            "controllers": [res.to_json_dict() for res in out.results],
            "q_boost": out.q_boost,
        },
        "samples": _samples_block(cfg, out, h),
        "poles": _pole_block(out.a_closed,
                             float(cfg.evaluation["pole_threshold"]), h),
    }

    trajectories = dict(out.trajectories)
    if converged:
        est, j_exact, closed = _evaluate_closed_loop(cfg, out)
        trajectories["closed_loop"] = closed
        report["costs"] = {
            "config_hash": h,
            "simulated": est.value,
            "lyapunov": j_exact,
            "horizon": est.horizon,
            "tail": est.tail,
        }
    else:
        report["costs"] = None
        if regression_converged and not stable:
            log.error("gain converged but the closed loop is unstable "
                      "(spectral abscissa %.3e); reporting failure", alpha)

    observer = out.observer_info
    if observer is not None:
        report["observer"] = {
            "config_hash": h,
            **{k: _json_ready(v) for k, v in observer.items() if k != "errors"},
        }
    else:
        report["observer"] = None

    rows = _convergence_rows(out.results)
    return _write_report(cfg, report, converged=converged, stable=stable,
                         results=out.results, gains=out.gains,
                         trajectories=trajectories, observer=observer,
                         convergence_rows=rows)


def _nonconverged_report(cfg: ExperimentConfig, h: str, reason: str) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "kind": "run",
        "scenario": cfg.scenario,
        "config_hash": h,
        "converged": False,
        "stable": None,
        "reason": reason,
        "gains": None,
        "learning": None,
        "samples": None,
        "poles": None,
        "costs": None,
        "observer": None,
    }


def _convergence_rows(results: list[LearnResult]) -> list[tuple]:
    rows = []
    for idx, res in enumerate(results):
        for step in res.history:
            rows.append((idx, step.step, step.dp_norm, step.k_gain.reshape(-1)))
    return rows


def _write_convergence_csv(path: Path, rows, multi: bool) -> None:
    if not rows:
        path.write_text("k,dP_norm\n")
        return
    k_len = len(rows[0][3])
    header = ["k", "dP_norm"] + [f"K_{i + 1}" for i in range(k_len)]
    if multi:
        header = ["controller"] + header
    lines = [",".join(header)]
    for ctrl, k, dp, kvec in rows:
        cells = [f"{k:d}", f"{dp:.17g}"] + [f"{v:.17g}" for v in kvec]
        if multi:
            cells = [f"{ctrl:d}"] + cells
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _write_report(cfg: ExperimentConfig, report: dict, *, converged, stable,
                  results, gains, trajectories, observer,
                  convergence_rows) -> RunReport:
    files: list[str] = []
    outdir = cfg.outdir
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        # a completed run supersedes any crash marker left by an earlier one
        (outdir / "FAILED").unlink(missing_ok=True)
        (outdir / "trajectories").mkdir(exist_ok=True)
        for name, traj in trajectories.items():
            rel = f"trajectories/{name}.csv"
            traj.to_csv(outdir / rel)
            files.append(rel)
        if observer is not None and "errors" in (observer or {}):
            rel = "trajectories/observer_errors.csv"
            observer["errors"].errors_to_csv(outdir / rel)
            files.append(rel)
        _write_convergence_csv(outdir / "convergence.csv", convergence_rows,
                               multi=cfg.scenario == "cluster_decentralized")
        files.append("convergence.csv")
        files.append("report.json")
        report["files"] = sorted(files)
        (outdir / "report.json").write_text(
            json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n")
    else:
        report["files"] = []
    return RunReport(
        kind="run",
        scenario=cfg.scenario,
        converged=converged,
        stable=stable,
        report=report,
        outdir=outdir,
        files=report["files"],
        learn_results=list(results),
        gains=dict(gains),
    )


def _flush_failure(cfg: ExperimentConfig, exc: Exception) -> None:
    """Leave a marker next to whatever partial artifacts exist."""
    if cfg.outdir is None:
        return
    try:
        cfg.outdir.mkdir(parents=True, exist_ok=True)
        (cfg.outdir / "FAILED").write_text(
            f"scenario: {cfg.scenario}\n"
            f"config_hash: {cfg.hash}\n"
            f"error: {type(exc).__name__}: {exc}\n")
    except OSError:
        log.exception("could not write the failure marker")


# ---------------------------------------------------------------------------
# reference gains and sweeps


def reference_gain(config) -> np.ndarray:
    """Model-based gain of the ideal reduced problem, for comparison.

    Two-time-scale plants reduce to their slow subsystem; cluster networks
    to the aggregate dynamics of the cluster means.  The Riccati design on
    that reduced model is what the data-driven gain should approach as the
    time-scale ratio shrinks.
    """
    cfg = _coerce_config(config)
    if cfg.scenario in SP_SCENARIOS:
        sp = _build_sp_system(cfg.plant, cfg.epsilon)
        slow = reduce_slow(sp)
        q = _weight(cfg.weights["q"], sp.r, "weights.q")
        r_w = _weight(cfg.weights["r"], sp.m, "weights.r")
        return care_solve(slow.a_s, slow.b_s, q, r_w).k
    net, tf, full, t1, m_proj, plant_r = _cluster_setup(cfg)
    r = len(net.clusters)
    a_y = tf.t1 @ full.a @ tf.u1
    b_y = tf.t1 @ full.b @ m_proj
    if cfg.scenario == "cluster_decentralized":
        gains = []
        q_diag = cfg.weights["q"]
        r_diag = cfg.weights["r"]
        q_list = q_diag if isinstance(q_diag, (list, tuple)) else [q_diag] * r
        r_list = r_diag if isinstance(r_diag, (list, tuple)) else [r_diag] * r
        for a, slow in enumerate(decoupled_slow(net)):
            qa = _weight(q_list[a], 1, "weights.q")
            ra = _weight(r_list[a], 1, "weights.r")
            gains.append(care_solve(slow.a_s, slow.b_s, qa, ra).k)
        return scipy.linalg.block_diag(*gains)
    q = _weight(cfg.weights["q"], r, "weights.q")
    r_w = _weight(cfg.weights["r"], r, "weights.r")
    return care_solve(a_y, b_y, q, r_w, k0=np.eye(r)).k


def trajectory_gap(config, horizon: float = 2.0) -> float:
    """max ||y(t) - y_s(t)|| between the full and reduced open-loop runs.

    Both systems get the same exploration input; the reduced run starts
    from the slow part of x0.  The gap shrinks with the time-scale ratio.
    """
    cfg = _coerce_config(config)
    if cfg.scenario not in SP_SCENARIOS:
        raise ConfigError("trajectory gaps are defined for two-time-scale runs")
    sp = _build_sp_system(cfg.plant, cfg.epsilon)
    full = assemble_full(sp)
    slow = reduce_slow(sp)
    sig = _exploration_signal(cfg, sp.m)
    dt = cfg.sampling["dt"]
    sub = substeps(dt, cfg.epsilon)
    t_end = float(np.ceil(horizon / dt) * dt)
    traj_f = simulate(full, sig.as_policy(), cfg.x0, dt / sub, t_end)
    y_full = traj_f.slow(sp.t_slow)
    sys_s = LtiSystem(slow.a_s, slow.b_s)
    y0 = sp.t_slow @ cfg.x0
    traj_s = simulate(sys_s, sig.as_policy(), y0, dt / sub, t_end)
    return float(np.linalg.norm(y_full - traj_s.states, axis=1).max())


def sweep_epsilon(config, eps_list, outdir=None) -> RunReport:
    """Run one scenario across several time-scale ratios and compare.

    Reports, per epsilon: the learned gain, its distance to the ideal
    reduced gain, and the full/reduced trajectory gap; plus the ratios of
    those distances between consecutive epsilon values.  A single-entry
    list degenerates to a plain run.
    """
    cfg = _coerce_config(config)
    if outdir is not None:
        cfg = cfg.with_overrides(outdir=outdir)
    eps_values = [float(e) for e in eps_list]
    if not eps_values:
        raise ConfigError("eps list must not be empty")
    if any(e <= 0 for e in eps_values):
        raise ConfigError("every epsilon must be positive")
    if cfg.scenario not in SP_SCENARIOS:
        raise ConfigError("sweep_epsilon needs a scenario with an epsilon "
                          "to vary (two-time-scale plants)")

    k_ref = reference_gain(cfg)
    base_out = cfg.outdir
    entries = []
    runs = []
    all_files = []
    for eps in eps_values:
        tag = "eps_" + np.format_float_positional(eps, trim="-")
        sub_out = None if base_out is None else base_out / tag
        cfg_e = cfg.with_overrides(epsilon=eps,
                                   outdir=None if sub_out is None else sub_out)
        rep = run(cfg_e)
        runs.append(rep)
        k = rep.gains.get("K")
        dk = float(np.linalg.norm(k - k_ref)) if k is not None else None
        gap = trajectory_gap(cfg_e)
        entries.append({
            "config_hash": cfg_e.hash,
            "epsilon": eps,
            "K": _json_ready(k) if k is not None else None,
            "gain_distance": dk,
            "trajectory_gap": gap,
            "converged": rep.converged,
            "stable": rep.stable,
        })
        if sub_out is not None:
            all_files.extend(f"{tag}/{f}" for f in rep.files)

    ratios = []
    for prev, cur in zip(entries, entries[1:]):
        num = prev["gain_distance"]
        den = cur["gain_distance"]
        ratios.append({
            "epsilon_from": prev["epsilon"],
            "epsilon_to": cur["epsilon"],
            "gain_ratio": (num / den) if (num and den) else None,
            "gap_ratio": (prev["trajectory_gap"] / cur["trajectory_gap"]
                          if cur["trajectory_gap"] else None),
        })

    h = cfg.hash
    report = {
        "schema": REPORT_SCHEMA,
        "kind": "sweep",
        "scenario": cfg.scenario,
        "config_hash": h,
        "reference_gain": _json_ready(k_ref),
        "runs": entries,
        "ratios": ratios,
        "converged": all(r.converged for r in runs),
        "stable": all(bool(r.stable) for r in runs),
    }
    files = []
    if base_out is not None:
        base_out.mkdir(parents=True, exist_ok=True)
        files = sorted(all_files) + ["report.json"]
        report["files"] = files
        (base_out / "report.json").write_text(
            json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n")
    else:
        report["files"] = []
    return RunReport(
        kind="sweep",
        scenario=cfg.scenario,
        converged=report["converged"],
        stable=report["stable"],
        report=report,
        outdir=base_out,
        files=report["files"],
        learn_results=[res for r in runs for res in r.learn_results],
        gains={"reference": k_ref,
               **{f"eps_{e['epsilon']:g}": np.asarray(e["K"])
                  for e in entries if e["K"] is not None}},
    )


def compare_dims(config, outdir=None) -> RunReport:
    """Sample-count arithmetic for reduced versus full-order learning.

    Counts follow the 3 d^2 accounting (d states, d inputs): collecting the
    symmetric value matrix and the two gain-related blocks needs d(d+1)/2 +
    2 d^2 windows, quoted as 3 d^2 for short.  The exact regression rank
    bound d(d+1)/2 + d m is reported next to it rather than silently
    substituted.  Minimal horizons price each window at the configured dt.
    Wall-clock numbers go to the log only; they depend on hardware, not on
    the config, and reports must not.
    """
    t0 = time.perf_counter()
    cfg = _coerce_config(config)
    if outdir is not None:
        cfg = cfg.with_overrides(outdir=outdir)
    if not cfg.is_cluster:
        raise ConfigError("compare_dims needs a cluster scenario: the full "
                          "order is the agent count")
    net = _build_network(cfg.plant, cfg.epsilon)
    r = len(net.clusters)
    n = net.n_agents * net.s
    dt = cfg.sampling["dt"]

    def accounting(dim: int) -> dict:
        samples = 3 * dim * dim
        return {
            "dim": dim,
            "samples": samples,
            "horizon_s": samples * dt,
            "rank_bound": dim * (dim + 1) // 2 + dim * dim,
        }

    h = cfg.hash
    report = {
        "schema": REPORT_SCHEMA,
        "kind": "compare",
        "scenario": cfg.scenario,
        "config_hash": h,
        "dt": dt,
        "reduced": {"config_hash": h, **accounting(r)},
        "full": {"config_hash": h, **accounting(n)},
        "reduction_factor": (n * n) / (r * r),
    }
    files = []
    if cfg.outdir is not None:
        cfg.outdir.mkdir(parents=True, exist_ok=True)
        files = ["report.json"]
        report["files"] = files
        (cfg.outdir / "report.json").write_text(
            json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n")
    else:
        report["files"] = []
    log.info("compare_dims finished in %.6f s (wall clock, informational)",
             time.perf_counter() - t0)
    return RunReport(
        kind="compare",
        scenario=cfg.scenario,
        converged=True,
        stable=None,
        report=report,
        outdir=cfg.outdir,
        files=report["files"],
    )

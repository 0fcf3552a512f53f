"""Simulator, exploration signals, window datasets, and cost quadrature."""

import numpy as np
import pytest
import scipy.linalg

from spadp import (ExplorationSignal, LtiSystem, SimulationBlowUp, Trajectory,
                   collect_adp_data, evaluate_cost, feedback_policy, simulate)
from spadp.spmodel import assemble_full

from conftest import make_sp


def test_lti_system_dimension_checks():
    with pytest.raises(ValueError):
        LtiSystem(np.eye(2), np.ones((3, 1)))
    with pytest.raises(ValueError):
        LtiSystem(np.eye(2), np.ones((2, 1)), c=np.ones((1, 3)))
    sys = LtiSystem(np.eye(2), np.ones((2, 1)))
    assert (sys.n, sys.m) == (2, 1)


def test_exploration_signal_bound_and_determinism():
    sig = ExplorationSignal.generate(2, n_terms=12, freq_range=(0.5, 40.0),
                                     amplitude=0.7, offset=0.3, seed=9)
    t = np.linspace(0.0, 5.0, 4001)
    samples = np.array([sig(ti) for ti in t])
    assert np.all(np.abs(samples) <= sig.bound()[None, :] + 1e-12)
    again = ExplorationSignal.generate(2, n_terms=12, freq_range=(0.5, 40.0),
                                       amplitude=0.7, offset=0.3, seed=9)
    assert np.array_equal([sig(1.234), sig(4.0)], [again(1.234), again(4.0)])
    other = ExplorationSignal.generate(2, n_terms=12, freq_range=(0.5, 40.0),
                                       amplitude=0.7, offset=0.3, seed=10)
    assert not np.allclose(sig(1.234), other(1.234))


def test_exploration_random_frequencies_stay_in_band():
    sig = ExplorationSignal.generate(1, n_terms=40, freq_range=(2.0, 30.0),
                                     amplitude=1.0, seed=3, random_freqs=True)
    freqs = np.asarray(sig.frequencies)
    assert freqs.min() >= 2.0 and freqs.max() <= 30.0


def test_rk4_matches_matrix_exponential():
    a = np.array([[0.0, 1.0], [-4.0, -2.0]])
    sys = LtiSystem(a, np.zeros((2, 1)))
    x0 = np.array([1.0, -0.5])
    traj = simulate(sys, lambda t, x: [0.0], x0, dt=0.01, t_end=2.0)
    exact = scipy.linalg.expm(2.0 * a) @ x0
    assert np.abs(traj.states[-1] - exact).max() < 1e-8


def test_rk4_fourth_order_consistency():
    a = np.array([[0.0, 1.0], [-4.0, -2.0]])
    sys = LtiSystem(a, np.zeros((2, 1)))
    x0 = np.array([1.0, -0.5])
    exact = scipy.linalg.expm(1.0 * a) @ x0

    def err(dt):
        traj = simulate(sys, lambda t, x: [0.0], x0, dt=dt, t_end=1.0)
        return np.abs(traj.states[-1] - exact).max()

    e1, e2 = err(0.02), err(0.01)
    assert 12.0 < e1 / e2 < 20.0  # halving dt cuts the error ~16x


def test_simulate_rejects_misaligned_t_end():
    sys = LtiSystem(np.eye(1) * -1.0, np.ones((1, 1)))
    with pytest.raises(ValueError):
        simulate(sys, lambda t, x: [0.0], [1.0], dt=0.03, t_end=0.10)


def test_simulate_blowup_raises():
    sys = LtiSystem(np.array([[5.0]]), np.zeros((1, 1)))
    with pytest.raises(SimulationBlowUp):
        simulate(sys, lambda t, x: [0.0], [1.0], dt=0.01, t_end=20.0)


def test_trajectory_requires_uniform_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.1, 0.3]), np.zeros((3, 1)),
                   np.zeros((3, 1)), 0.1)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.1]), np.zeros((3, 1)), np.zeros((2, 1)), 0.1)


def test_dataset_windows_match_direct_differences():
    sys = LtiSystem(np.array([[-1.0, 2.0], [0.0, -3.0]]), np.array([[0.5], [1.0]]))
    sig = ExplorationSignal.generate(1, n_terms=5, freq_range=(1.0, 8.0),
                                     amplitude=1.0, seed=2)
    traj = simulate(sys, sig.as_policy(), [1.0, -1.0], dt=0.01, t_end=1.0)
    starts = np.array([0.0, 0.25, 0.5])
    data = collect_adp_data(traj, np.eye(2), window=0.2, sample_times=starts)
    # delta_yy rows are exact state differences, no quadrature involved
    yy = np.einsum("ti,tj->tij", traj.states, traj.states).reshape(len(traj.times), 4)
    for i, t0 in enumerate(starts):
        a, b = int(round(t0 / 0.01)), int(round((t0 + 0.2) / 0.01))
        assert np.allclose(data.delta_yy[i], yy[b] - yy[a], atol=1e-14)
    assert data.n_windows == 3
    assert data.r == 2 and data.m == 1


def test_dataset_misaligned_window_raises():
    sys = LtiSystem(np.array([[-1.0]]), np.ones((1, 1)))
    traj = simulate(sys, lambda t, x: [0.1], [1.0], dt=0.01, t_end=1.0)
    with pytest.raises(ValueError):
        collect_adp_data(traj, np.eye(1), window=0.015, sample_times=[0.0])
    with pytest.raises(ValueError):
        collect_adp_data(traj, np.eye(1), window=0.1, sample_times=[0.955])
    with pytest.raises(ValueError):  # window must stay inside the run
        collect_adp_data(traj, np.eye(1), window=0.1, sample_times=[0.95])


def test_dataset_quadrature_converges_on_reference_plant():
    # halving the integration step changes dataset entries O(dt^2);
    # below dt ~ 1e-4 every entry moves by less than 1e-6
    sp = make_sp(0.01)
    full = assemble_full(sp)
    sig = ExplorationSignal.generate(1, n_terms=30, freq_range=(20.0, 150.0),
                                     amplitude=3.0, offset=0.5, seed=6)
    starts = np.arange(6) * 0.05
    x0 = [1.0, 2.0, 1.0, 0.0]

    def dataset(dt):
        traj = simulate(full, sig.as_policy(), x0, dt, 0.32)
        return collect_adp_data(traj, sp.t_slow, 0.01, starts)

    def gap(d1, d2):
        return max(np.abs(d1.delta_yy - d2.delta_yy).max(),
                   np.abs(d1.i_yy - d2.i_yy).max(),
                   np.abs(d1.i_yu0 - d2.i_yu0).max())

    d1, d2, d3 = dataset(1.25e-4), dataset(6.25e-5), dataset(3.125e-5)
    g1, g2 = gap(d1, d2), gap(d2, d3)
    assert g2 < 1e-6
    assert 3.0 < g1 / g2 < 5.0  # second-order quadrature


def test_cost_estimate_matches_lyapunov_value():
    from spadp import closed_loop_cost

    a = np.array([[0.0, 1.0], [-1.0, -1.0]])
    b = np.array([[0.0], [1.0]])
    k = np.array([[1.0, 1.5]])
    q, r_w = np.eye(2), np.eye(1)
    x0 = np.array([1.0, 2.0])
    sys = LtiSystem(a - b @ k, np.zeros((2, 1)))
    traj = simulate(sys, lambda t, x: [0.0], x0, dt=0.002, t_end=30.0)
    # price the actually applied input u = -K x along the trajectory
    traj = Trajectory(traj.times, traj.states, -(traj.states @ k.T), traj.dt)
    est = evaluate_cost(traj, np.eye(2), q, r_w)
    exact = closed_loop_cost(a, b, k, q, r_w, x0)
    assert abs(est.value - exact) <= 0.01 * exact
    assert est.tail < 1e-8


def test_feedback_policy_with_slow_map():
    k = np.array([[2.0, 3.0]])
    t_slow = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    pol = feedback_policy(k, t_slow)
    x = np.array([1.0, -1.0, 5.0])
    assert np.allclose(pol(0.0, x), -(k @ t_slow @ x))


def test_trajectory_csv_round_trip(tmp_path):
    sys = LtiSystem(np.array([[-1.0]]), np.ones((1, 1)))
    traj = simulate(sys, lambda t, x: [0.5], [1.0], dt=0.1, t_end=0.5)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    body = np.loadtxt(path, delimiter=",", skiprows=1)
    assert body.shape == (6, 3)  # t, x1, u1
    assert np.allclose(body[:, 0], traj.times)
    assert np.allclose(body[:, 1], traj.states[:, 0])

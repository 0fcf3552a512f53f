"""Two-time-scale blocks: assembly, reduction, and round trips."""

import numpy as np
import pytest

from spadp import SpSystem, assemble_full, from_full, reduce_slow, slow_of
from spadp.linalg import spectral_abscissa

from conftest import SP_BLOCKS, make_sp


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        make_sp(0.0)
    with pytest.raises(ValueError):
        make_sp(-0.01)


def test_block_shape_validation():
    bad = {k: np.array(v) for k, v in SP_BLOCKS.items()}
    bad["a12"] = np.zeros((2, 3))
    with pytest.raises(ValueError):
        SpSystem(epsilon=0.01, **bad)


def test_fast_block_stability_check(sp71):
    sp71.assert_fast_stable()  # a22 eigs {-0.465, -1}
    marginal = {k: np.array(v) for k, v in SP_BLOCKS.items()}
    marginal["a22"] = np.array([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        SpSystem(epsilon=0.01, **marginal).assert_fast_stable()


def test_assemble_full_block_layout(sp71):
    full = assemble_full(sp71)
    eps = sp71.epsilon
    assert np.allclose(full.a[:2, :2], SP_BLOCKS["a11"])
    assert np.allclose(full.a[:2, 2:], SP_BLOCKS["a12"])
    assert np.allclose(full.a[2:, :2], np.asarray(SP_BLOCKS["a21"]) / eps)
    assert np.allclose(full.a[2:, 2:], np.asarray(SP_BLOCKS["a22"]) / eps)
    assert np.allclose(full.b[:2], SP_BLOCKS["b1"])
    assert np.allclose(full.b[2:], np.asarray(SP_BLOCKS["b2"]) / eps)


def test_full_spectrum_splits_into_two_time_scales(sp71):
    full = assemble_full(sp71)
    eigs = np.linalg.eigvals(full.a)
    fast = sorted(e.real for e in eigs if abs(e) > 10.0)
    slow = [e for e in eigs if abs(e) <= 10.0]
    # fast roots sit near eig(a22)/eps, slow ones near the reduced model's
    assert np.allclose(fast, [-100.0, -46.5], atol=2.0)
    red = reduce_slow(sp71)
    assert np.allclose(sorted(e.real for e in slow),
                       sorted(np.linalg.eigvals(red.a_s).real), atol=0.05)


def test_reduce_slow_formula(sp71):
    red = reduce_slow(sp71)
    a11, a12 = np.array(SP_BLOCKS["a11"]), np.array(SP_BLOCKS["a12"])
    a21, a22 = np.array(SP_BLOCKS["a21"]), np.array(SP_BLOCKS["a22"])
    b1, b2 = np.array(SP_BLOCKS["b1"]), np.array(SP_BLOCKS["b2"])
    corr = a12 @ np.linalg.solve(a22, a21)
    assert np.allclose(red.a_s, a11 - corr, atol=1e-14)
    assert np.allclose(red.b_s, b1 - a12 @ np.linalg.solve(a22, b2), atol=1e-14)
    assert (red.r, red.m) == (2, 1)


def test_reduce_slow_requires_invertible_a22():
    blocks = {k: np.array(v) for k, v in SP_BLOCKS.items()}
    blocks["a22"] = np.array([[0.0, 1.0], [0.0, 0.0]])  # singular
    sp = SpSystem(epsilon=0.01, **blocks)
    with pytest.raises((ValueError, np.linalg.LinAlgError)):
        reduce_slow(sp)


def test_slow_of_extracts_slow_states(sp71):
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(slow_of(sp71, x), [1.0, 2.0])


def test_from_full_round_trip(sp71):
    full = assemble_full(sp71)
    back = from_full(full, sp71.t_slow, sp71.g_fast, sp71.epsilon)
    for name in SP_BLOCKS:
        assert np.allclose(getattr(back, name), getattr(sp71, name), atol=1e-12), name


def test_reduced_design_transfers_to_full_plant(sp71):
    # the slow-model LQR gain applied as u = -K y stabilizes the full
    # plant for small epsilon
    from spadp import care_solve

    red = reduce_slow(sp71)
    sol = care_solve(red.a_s, red.b_s, 10.0 * np.eye(2), np.eye(1))
    full = assemble_full(sp71)
    k_full = sol.k @ sp71.t_slow
    assert spectral_abscissa(full.a - full.b @ k_full) < 0

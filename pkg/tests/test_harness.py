"""Config validation, report assembly, reproducibility, and the CLI."""

import copy
import json
from types import SimpleNamespace

import numpy as np
import pytest

from spadp import (
    ConfigError,
    ExperimentConfig,
    LtiSystem,
    compare_dims,
    config_hash,
    run,
    simulate,
    substeps,
    subsample,
    sweep_epsilon,
    trajectory_gap,
)
from spadp import cli, harness
from conftest import CONFIG_DIR


# ---------------------------------------------------------------------------
# grid refinement and subsampling


def test_substeps_tracks_the_fast_scale():
    assert substeps(0.01, 0.01) == 5
    assert substeps(0.01, 0.001) == 50
    assert substeps(0.01, 0.02) == 3
    assert substeps(1e-9, 1.0) == 1


def test_substeps_cap_rejects_extreme_stiffness():
    with pytest.raises(ConfigError):
        substeps(10.0, 0.001)


def test_subsample_keeps_every_nth_row():
    sys = LtiSystem([[-1.0]], [[1.0]])
    traj = simulate(sys, lambda t, x: [0.0], [1.0], 0.01, 1.0)
    coarse = subsample(traj, 4)
    assert np.array_equal(coarse.times, traj.times[::4])
    assert np.array_equal(coarse.states, traj.states[::4])
    assert coarse.dt == pytest.approx(0.04)


# ---------------------------------------------------------------------------
# config parsing and hashing


def test_missing_sections_are_named(sp_config):
    for key in ("scenario", "epsilon", "plant", "weights", "exploration",
                "sampling", "x0"):
        broken = copy.deepcopy(sp_config)
        del broken[key]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(broken)


def test_unknown_scenario_rejected(sp_config):
    sp_config["scenario"] = "bang_bang"
    with pytest.raises(ConfigError, match="unknown scenario"):
        ExperimentConfig.from_dict(sp_config)


def test_x0_size_checked(sp_config):
    sp_config["x0"] = [1.0, 2.0]
    with pytest.raises(ConfigError, match="x0 has 2 entries"):
        ExperimentConfig.from_dict(sp_config)


def test_observer_section_gating(sp_config, of_config):
    state_fb = copy.deepcopy(sp_config)
    state_fb["observer"] = of_config["observer"]
    with pytest.raises(ConfigError, match="takes no observer"):
        ExperimentConfig.from_dict(state_fb)
    missing = copy.deepcopy(of_config)
    del missing["observer"]
    with pytest.raises(ConfigError, match="requires an observer"):
        ExperimentConfig.from_dict(missing)


def test_observer_horizon_must_cover_sampling(of_config):
    of_config["observer"]["horizon"] = 5.0  # last window ends at 5.81
    with pytest.raises(ConfigError, match="ends before the last sample"):
        ExperimentConfig.from_dict(of_config)


def test_perfect_observer_requires_output_feedback(sp_config):
    sp_config["perfect_observer"] = True
    with pytest.raises(ConfigError, match="perfect_observer"):
        ExperimentConfig.from_dict(sp_config)


def test_per_cluster_exploration_gated(cluster_config):
    cluster_config["exploration"]["per_cluster"] = True
    with pytest.raises(ConfigError, match="per_cluster"):
        ExperimentConfig.from_dict(cluster_config)


def test_bad_numeric_ranges(sp_config):
    bad = copy.deepcopy(sp_config)
    bad["epsilon"] = 0.0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)
    bad = copy.deepcopy(sp_config)
    bad["sampling"]["count"] = 0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)
    bad = copy.deepcopy(sp_config)
    bad["learner"]["q_boost_factor"] = 1.0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_hash_ignores_outdir_and_tracks_content(sp_config, tmp_path):
    plain = ExperimentConfig.from_dict(copy.deepcopy(sp_config))
    routed = copy.deepcopy(sp_config)
    routed["outdir"] = str(tmp_path / "elsewhere")
    assert ExperimentConfig.from_dict(routed).hash == plain.hash
    reseeded = copy.deepcopy(sp_config)
    reseeded["exploration"]["seed"] = 99
    assert ExperimentConfig.from_dict(reseeded).hash != plain.hash
    assert config_hash(plain.resolved) == plain.hash


def test_with_overrides_revalidates(sp_config, tmp_path):
    cfg = ExperimentConfig.from_dict(sp_config)
    out = cfg.with_overrides(seed=5, dt=0.005, outdir=tmp_path)
    assert out.exploration["seed"] == 5
    assert out.sampling["dt"] == 0.005
    assert out.outdir == tmp_path
    assert out.hash != cfg.hash
    kept = out.with_overrides(seed=6)  # outdir survives partial overrides
    assert kept.outdir == tmp_path
    with pytest.raises(ConfigError):
        cfg.with_overrides(dt=-1.0)


# ---------------------------------------------------------------------------
# full runs: report structure and reproducibility


@pytest.fixture(scope="module")
def sp_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("sp_run")
    raw = json.loads((CONFIG_DIR / "sp_7_1.json").read_text())
    rep = run(raw, outdir=outdir)
    return rep, outdir


def test_report_schema_and_hash_stamps(sp_run):
    rep, _ = sp_run
    doc = rep.report
    assert doc["schema"] == "spadp-report-v1"
    assert doc["kind"] == "run"
    assert rep.converged and rep.stable and rep.succeeded
    h = doc["config_hash"]
    for block in ("learning", "samples", "poles", "costs"):
        assert doc[block]["config_hash"] == h
    assert doc["observer"] is None
    assert doc["gains"]["K"] is not None


def test_converged_run_reports_stable_spectrum(sp_run):
    rep, _ = sp_run
    doc = rep.report
    assert doc["converged"] is True
    assert doc["poles"]["spectral_abscissa"] < 0
    for pole in doc["poles"]["slow"] + doc["poles"]["fast"]:
        assert len(pole) == 2  # [re, im] pairs


def test_written_files_match_manifest(sp_run):
    rep, outdir = sp_run
    listed = sorted(rep.report["files"])
    on_disk = sorted(str(p.relative_to(outdir))
                     for p in outdir.rglob("*") if p.is_file())
    assert listed == on_disk
    assert "report.json" in listed
    assert "convergence.csv" in listed
    assert not (outdir / "FAILED").exists()


def test_convergence_csv_layout(sp_run):
    _, outdir = sp_run
    lines = (outdir / "convergence.csv").read_text().splitlines()
    assert lines[0] == "k,dP_norm,K_1,K_2"
    assert len(lines) >= 3


def test_reports_are_bit_identical_across_runs(sp_run, tmp_path):
    _, first = sp_run
    raw = json.loads((CONFIG_DIR / "sp_7_1.json").read_text())
    again = tmp_path / "again"
    run(raw, outdir=again)
    for rel in ("report.json", "convergence.csv"):
        assert (again / rel).read_bytes() == (first / rel).read_bytes()
    for p in sorted((first / "trajectories").glob("*.csv")):
        assert (again / "trajectories" / p.name).read_bytes() == p.read_bytes()


def test_in_memory_run_writes_nothing(sp_config):
    rep = run(sp_config)
    assert rep.outdir is None
    assert rep.report["files"] == []


def test_multi_controller_convergence_header(tmp_path):
    rows = [(0, 1, 0.5, np.array([1.0, 2.0])), (1, 1, 0.25, np.array([3.0, 4.0]))]
    path = tmp_path / "convergence.csv"
    harness._write_convergence_csv(path, rows, multi=True)
    lines = path.read_text().splitlines()
    assert lines[0] == "controller,k,dP_norm,K_1,K_2"
    assert lines[1].startswith("0,1,0.5")
    assert lines[2].startswith("1,1,0.25")


# ---------------------------------------------------------------------------
# failure paths


def test_crash_leaves_marker_and_reraises(sp_config, tmp_path, monkeypatch):
    def explode(cfg):
        raise RuntimeError("synthetic executor crash")

    monkeypatch.setitem(harness._EXECUTORS, "sp_state_feedback", explode)
    with pytest.raises(RuntimeError, match="synthetic"):
        run(sp_config, outdir=tmp_path)
    marker = (tmp_path / "FAILED").read_text()
    assert "scenario: sp_state_feedback" in marker
    assert "config_hash: " in marker
    assert "RuntimeError" in marker


def test_completed_run_clears_stale_marker(sp_config, tmp_path):
    (tmp_path / "FAILED").write_text("left over from an earlier crash\n")
    sp_config["evaluation"]["horizon"] = 2.0  # keep the rerun cheap
    run(sp_config, outdir=tmp_path)
    assert not (tmp_path / "FAILED").exists()


def test_insufficient_data_reports_nonconvergence(sp_config, tmp_path):
    sp_config["sampling"]["count"] = 3  # regression needs 6 windows
    rep = run(sp_config, outdir=tmp_path)
    assert rep.converged is False
    assert not rep.succeeded
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["converged"] is False
    assert "reason" in doc and "windows" in doc["reason"]
    assert doc["gains"] is None


# ---------------------------------------------------------------------------
# q-boost control flow (stubbed learner)


def _boost_cfg(attempts=3):
    return SimpleNamespace(learner={"q_boost_factor": 10.0,
                                    "q_boost_attempts": attempts})


def _stub(converged_flags):
    return [SimpleNamespace(converged=f) for f in converged_flags]


def test_boost_not_used_when_first_gain_certifies():
    calls = []

    def learn_fn(datasets, cfgs):
        calls.append(cfgs)
        return _stub([True])

    results, alpha, boost = harness._learn_with_boost(
        [None], lambda s: s, learn_fn, lambda r: -1.0, _boost_cfg())
    assert alpha == -1.0
    assert boost["attempts_used"] == 0 and boost["scale_applied"] == 1.0
    assert calls == [1.0]


def test_boost_retries_until_stable():
    alphas = iter([0.5, -2.0])

    def learn_fn(datasets, cfgs):
        return _stub([True])

    results, alpha, boost = harness._learn_with_boost(
        [None], lambda s: s, learn_fn, lambda r: next(alphas), _boost_cfg())
    assert alpha == -2.0
    assert boost["attempts_used"] == 1 and boost["scale_applied"] == 10.0


def test_boost_skipped_on_nonconvergence():
    calls = []

    def learn_fn(datasets, cfgs):
        calls.append(cfgs)
        return _stub([False])

    certify_calls = []
    results, alpha, boost = harness._learn_with_boost(
        [None], lambda s: s, learn_fn,
        lambda r: certify_calls.append(r) or 0.0, _boost_cfg())
    assert alpha is None
    assert certify_calls == []  # never certified an unconverged gain
    assert len(calls) == 1  # boosting cannot fix a failed regression
    assert boost["scale_applied"] == 1.0


def test_boost_exhaustion_returns_last_attempt():
    scales = []

    def learn_fn(datasets, cfgs):
        scales.append(cfgs)
        return _stub([True])

    results, alpha, boost = harness._learn_with_boost(
        [None], lambda s: s, learn_fn, lambda r: 0.7, _boost_cfg(attempts=3))
    assert alpha == 0.7
    assert scales == [1.0, 10.0, 100.0, 1000.0]
    assert boost["attempts_used"] == 3 and boost["scale_applied"] == 1000.0


# ---------------------------------------------------------------------------
# sweep, gap, and dimension accounting


def test_trajectory_gap_is_small_and_positive(sp_config):
    gap = trajectory_gap(sp_config)
    assert 0.0 < gap < 1.0


def test_trajectory_gap_needs_two_time_scales(cluster_config):
    with pytest.raises(ConfigError):
        trajectory_gap(cluster_config)


def test_sweep_rejects_bad_eps_lists(sp_config, cluster_config):
    with pytest.raises(ConfigError, match="must not be empty"):
        sweep_epsilon(sp_config, [])
    with pytest.raises(ConfigError, match="positive"):
        sweep_epsilon(sp_config, [0.01, -0.5])
    with pytest.raises(ConfigError, match="epsilon to vary"):
        sweep_epsilon(cluster_config, [0.01])


def test_compare_dims_accounting(cluster_config, tmp_path):
    rep = compare_dims(cluster_config, outdir=tmp_path)
    doc = rep.report
    assert doc["kind"] == "compare"
    assert doc["reduced"] == {
        "config_hash": doc["config_hash"], "dim": 5, "samples": 75,
        "horizon_s": pytest.approx(75 * 0.01), "rank_bound": 40}
    assert doc["full"] == {
        "config_hash": doc["config_hash"], "dim": 25, "samples": 1875,
        "horizon_s": pytest.approx(1875 * 0.01), "rank_bound": 950}
    assert doc["reduction_factor"] == pytest.approx(25.0)
    assert json.loads((tmp_path / "report.json").read_text())["kind"] == "compare"


def test_compare_dims_needs_clusters(sp_config):
    with pytest.raises(ConfigError, match="cluster scenario"):
        compare_dims(sp_config)


# ---------------------------------------------------------------------------
# command line


def test_cli_run_exit_zero(tmp_path, capsys):
    code = cli.main(["run", str(CONFIG_DIR / "sp_7_1.json"),
                     "--outdir", str(tmp_path)])
    assert code == 0
    assert "K =" in capsys.readouterr().out
    assert (tmp_path / "report.json").exists()


def test_cli_nonconvergence_exit_two(sp_config, tmp_path, capsys):
    sp_config["sampling"]["count"] = 3
    path = tmp_path / "starved.json"
    path.write_text(json.dumps(sp_config))
    code = cli.main(["run", str(path), "--outdir", str(tmp_path / "out")])
    assert code == 2
    out = capsys.readouterr().out
    assert "converged" in out.lower()


def test_cli_config_errors_exit_one(sp_config, tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    bad = dict(sp_config)
    bad["scenario"] = "bang_bang"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert cli.main(["run", str(path)]) == 1
    err = capsys.readouterr().err
    assert "Traceback" not in err


def test_cli_sweep_rejects_malformed_eps(sp_config, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(sp_config))
    assert cli.main(["sweep", "--eps", "0.01,zero", str(path)]) == 1

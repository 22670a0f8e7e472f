"""Scenario configs, presets, file outputs, and TOML loading."""

import hashlib
import json

import numpy as np
import pytest

from becstrobe.metrics import log_negativity, purity
from becstrobe.scenarios import (
    ConfigError,
    ScenarioConfig,
    SegmentSpec,
    load_config,
    preset_names,
    presets,
    resolve_frequency,
    run,
    run_timeseries,
)

TWO_PI = 2.0 * np.pi

PRESET_NAMES = [
    "fig1b", "fig1c_i", "fig1c_ii", "fig2", "fig2_noninteracting",
    "fig3", "fig4_nofeedback", "fig4_feedback",
]


def short_config(**kw):
    defaults = dict(
        name="short",
        segments=(
            SegmentSpec(duration=TWO_PI, kappa_sq=100.0,
                        frequencies=("2*w3",), delta_phi_frac=0.05),
        ),
        samples_per_period=4,
    )
    defaults.update(kw)
    return ScenarioConfig(**defaults)


# ------------------------------------------------------------ frequencies ---

def test_resolve_frequency_symbolic():
    omegas = np.array([1.0, 1.8, 2.7])
    assert resolve_frequency("2*w3", omegas) == pytest.approx(5.4)
    assert resolve_frequency("w1+w3", omegas) == pytest.approx(3.7)
    assert resolve_frequency("w2", omegas) == pytest.approx(1.8)
    assert resolve_frequency("1.5*w1+w2", omegas) == pytest.approx(3.3)
    assert resolve_frequency(4.25, omegas) == 4.25


@pytest.mark.parametrize("bad", ["2w3", "w0", "w-1", "omega3", "", "w1-w2"])
def test_resolve_frequency_rejects_malformed(bad):
    with pytest.raises(ValueError):
        resolve_frequency(bad, np.array([1.0, 2.0, 3.0]))


def test_resolve_frequency_rejects_out_of_range():
    with pytest.raises(ValueError, match="only 3 modes"):
        resolve_frequency("w4", np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError, match="positive"):
        resolve_frequency(-1.0, np.array([1.0]))


# ---------------------------------------------------------------- configs ---

def test_validate_accepts_defaults():
    assert short_config().validate() == []


def test_validate_collects_every_problem():
    cfg = ScenarioConfig(
        mu_target=2.0,
        g1d=1.0,
        grid_n_points=4,
        n_modes=0,
        segments=(SegmentSpec(duration=-1.0, kappa_sq=-2.0, rule="nope"),),
        n_trajectories=0,
        metrics=("E:1,2,3",),
    )
    errs = cfg.validate()
    for fragment in [
        "exactly one of mu_target or g1d",
        "n_points",
        "n_modes",
        "duration must be positive",
        "kappa_sq must be non-negative",
        "rule",
        "n_trajectories",
        "exactly two modes",
    ]:
        assert any(fragment in e for e in errs), (fragment, errs)


def test_validate_gating_and_metric_ranges():
    cfg = short_config(
        segments=(
            SegmentSpec(duration=1.0, kappa_sq=1.0, frequencies=("2*w3",),
                        delta_phi_frac=0.0),
            SegmentSpec(duration=1.0, kappa_sq=1.0, delta_phi_frac=0.2),
            SegmentSpec(duration=1.0, kappa_sq=1.0, feedback_mode=11),
        ),
        metrics=("DH:1,3,5", "P:1,99", "DH:1,3,5>4"),
        covariance_times=(99.0,),
    )
    errs = cfg.validate()
    for fragment in [
        "delta_phi_frac must be in (0, 1) when gating",
        "delta_phi_frac set but no frequencies",
        "feedback_mode",
        "DH needs '>m'",
        "outside 1..10",
        "kept mode must be in the subspace",
        "covariance_times",
    ]:
        assert any(fragment in e for e in errs), (fragment, errs)


def test_run_rejects_invalid_config(tmp_path):
    bad = ScenarioConfig(segments=(SegmentSpec(duration=-1.0, kappa_sq=1.0),))
    with pytest.raises(ConfigError):
        run(bad, tmp_path / "x")


# ---------------------------------------------------------------- presets ---

def test_preset_names_complete():
    assert preset_names() == sorted(PRESET_NAMES)


def test_presets_all_valid():
    for name, cfg in presets().items():
        assert cfg.name == name
        assert cfg.validate() == [], name


def test_preset_structures():
    table = presets()
    assert len(table["fig1b"].segments) == 3
    # eraser leg probes continuously
    assert table["fig1b"].segments[2].frequencies == ()
    assert table["fig1c_i"].segments[0].frequencies == ()
    assert table["fig2"].sweep_delta_phi_frac[0] == 0.01
    assert len(table["fig2"].sweep_delta_phi_frac) == 7
    assert table["fig2_noninteracting"].g1d == 0.0
    assert table["fig2_noninteracting"].mu_target is None
    assert table["fig4_nofeedback"].n_trajectories == 1000
    assert table["fig4_feedback"].segments[0].feedback_mode == 3
    assert table["fig4_nofeedback"].segments[0].feedback_mode is None
    assert table["fig4_feedback"].segments[0].delta_phi_frac == 0.15


# ------------------------------------------------------------ file outputs ---

@pytest.fixture(scope="module")
def short_run(tmp_path_factory, system_mu2):
    cfg = short_config(
        metrics=("E:1,3", "P:1,3,5", "DH:1,3,5>3"),
        covariance_times=(np.pi,),
        n_trajectories=3,
        keep_trajectories=2,
    )
    out = tmp_path_factory.mktemp("short_run")
    result = run(cfg, out, system=system_mu2)
    return cfg, result


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# becstrobe ") and "schema v1" in lines[0]
    header = lines[1].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    return header, rows


def test_run_writes_expected_files(short_run):
    _, result = short_run
    names = sorted(p.name for p in result.out_dir.iterdir())
    assert "timeseries.csv" in names
    assert "trajectories.csv" in names
    assert "metadata.json" in names
    assert sum(n.startswith("covariance_t") for n in names) == 2  # pi + end


def test_timeseries_columns_and_metrics(short_run):
    cfg, result = short_run
    header, rows = read_csv(result.out_dir / "timeseries.csv")
    assert header[:4] == ["t", "tau", "probe_on", "segment"]
    for col in ["var_x_com_3", "var_p_lab_10", "mean_x_com_1", "sigma_p_lab_2",
                "E_1_3", "P_1_3_5", "DH_1_3_5_keep3"]:
        assert col in header, col
    ts = result.timeseries
    # metric columns agree with direct evaluation on the stored covariance
    a_end = ts.covariances_comoving[-1]
    assert rows[-1, header.index("E_1_3")] == pytest.approx(
        log_negativity(a_end, (0,), (2,)), abs=1e-12)
    assert rows[-1, header.index("P_1_3_5")] == pytest.approx(
        purity(a_end, (0, 2, 4)), abs=1e-12)
    assert rows[-1, header.index("var_x_com_3")] == pytest.approx(
        a_end[4, 4], abs=1e-12)
    np.testing.assert_allclose(rows[:, 0], ts.t, atol=1e-12)


def test_covariance_snapshot_is_full_matrix(short_run):
    _, result = short_run
    snap = sorted(result.out_dir.glob("covariance_t*.csv"))[0]
    header, rows = read_csv(snap)
    assert header[:4] == ["x1", "p1", "x2", "p2"]
    assert rows.shape == (20, 20)
    # symmetric and matches the sampled stack at that time
    np.testing.assert_allclose(rows, rows.T, atol=1e-12)
    ts = result.timeseries
    k = int(np.argmin(np.abs(ts.t - np.pi)))
    np.testing.assert_allclose(rows, ts.covariances_comoving[k], atol=1e-12)


def test_trajectories_long_format(short_run):
    cfg, result = short_run
    header, rows = read_csv(result.out_dir / "trajectories.csv")
    ts = result.timeseries
    assert header[:2] == ["t", "trajectory"]
    assert rows.shape == (len(ts.t) * cfg.keep_trajectories, 2 + 2 * 10)
    assert set(rows[:, 1]) == {0.0, 1.0}
    k = header.index("x_com_3")
    second = rows[rows[:, 1] == 1.0]
    np.testing.assert_allclose(second[:, k], ts.means_comoving[:, 4, 1], atol=1e-12)


def test_metadata_resolves_every_default(short_run):
    cfg, result = short_run
    meta = json.loads((result.out_dir / "metadata.json").read_text())
    assert meta["schema_version"] == 1
    d = meta["derived"]
    assert len(d["omegas"]) == 10
    assert d["n_pixels"] == 100
    assert d["detector_length"] == 10.0
    assert d["n_modes"] == 10
    assert d["gating_rule"] == ["intersection"]
    assert d["seed"] == 0
    assert len(d["nu_per_segment"][0]) == 10
    assert d["dt_per_segment"][0] > 0
    assert 0 < d["duty_per_segment"][0] < 0.06
    assert d["resolved_frequencies"][0][0] == pytest.approx(
        2 * d["omegas"][2], rel=1e-12)
    assert meta["config"]["segments"][0]["delta_phi_frac"] == 0.05
    assert "1,3" in d["qnd_pair_benchmarks"]
    assert d["qnd_pair_benchmarks"]["1,3"]["log_negativity_asymptote"] > 0.9


def test_rerun_is_byte_identical(tmp_path, system_mu2):
    cfg = short_config(n_trajectories=4, metrics=("P:1,3,5",))
    hashes = []
    for sub in ("a", "b"):
        result = run(cfg, tmp_path / sub, system=system_mu2)
        digest = {}
        for p in sorted(result.out_dir.iterdir()):
            digest[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        hashes.append(digest)
    assert hashes[0] == hashes[1]


def test_zero_segment_protocol_echoes_vacuum(tmp_path, system_mu2):
    cfg = ScenarioConfig(name="idle", segments=())
    result = run(cfg, tmp_path / "idle", system=system_mu2)
    header, rows = read_csv(result.out_dir / "timeseries.csv")
    assert rows.shape[0] == 1
    for j in range(1, 11):
        assert rows[0, header.index(f"var_x_com_{j}")] == 0.5
        assert rows[0, header.index(f"var_p_lab_{j}")] == 0.5
        assert rows[0, header.index(f"mean_x_com_{j}")] == 0.0


def test_run_timeseries_reuses_system(system_mu2):
    cfg = short_config()
    ts1, _ = run_timeseries(cfg, system=system_mu2)
    ts2, _ = run_timeseries(cfg)  # solves its own basis
    np.testing.assert_allclose(
        ts1.covariances_comoving[-1], ts2.covariances_comoving[-1], atol=1e-10)


# ------------------------------------------------------------------ sweeps ---

def test_sweep_outputs(tmp_path, system_mu2):
    cfg = short_config(
        metrics=("DH:1,3,5>3", "P:1,3,5"),
        sweep_delta_phi_frac=(0.05, 0.2),
    )
    result = run(cfg, tmp_path / "sweep", system=system_mu2)
    names = sorted(p.name for p in result.out_dir.iterdir())
    assert names == ["dphi_0.0500", "dphi_0.2000", "metadata.json", "sweep.csv"]
    header, rows = read_csv(result.out_dir / "sweep.csv")
    assert rows.shape[0] == 2
    assert header[0] == "delta_phi_frac"
    np.testing.assert_allclose(rows[:, 0], [0.05, 0.2])
    # endpoint rows match the last row of each subrun's timeseries
    for k, frac in enumerate((0.05, 0.2)):
        sub_header, sub_rows = read_csv(
            result.out_dir / f"dphi_{frac:.4f}" / "timeseries.csv")
        for col in ("var_x_com_3", "DH_1_3_5_keep3", "P_1_3_5"):
            assert rows[k, header.index(col)] == pytest.approx(
                sub_rows[-1, sub_header.index(col)], abs=1e-12)
    # wider gate admits more probe time
    assert rows[1, header.index("tau_total")] > rows[0, header.index("tau_total")]
    meta = json.loads((result.out_dir / "metadata.json").read_text())
    assert meta["sweep"]["parameter"] == "delta_phi_frac"
    assert meta["sweep"]["subdirectories"] == ["dphi_0.0500", "dphi_0.2000"]


# ------------------------------------------------------------------- TOML ---

GOOD_TOML = """
name = "demo"
n_modes = 6

[trap]
mu_target = 2.0
n_atoms = 500.0

[grid]
x_max = 7.0
n_points = 512

[detector]
length = 10.0
pixel_size = 0.5

[ensemble]
n_trajectories = 2
seed = 7

[outputs]
samples_per_period = 4
metrics = ["E:1,3"]

[[protocol.segments]]
duration_periods = 1.5
kappa_sq = 50.0
frequencies = ["2*w3"]
delta_phi_frac = 0.1

[[protocol.segments]]
duration = 3.0
kappa_sq = 0.5
"""


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "demo.toml"
    path.write_text(GOOD_TOML)
    cfg = load_config(path)
    assert cfg.name == "demo"
    assert cfg.n_modes == 6
    assert cfg.n_atoms == 500.0
    assert cfg.seed == 7
    assert cfg.segments[0].duration == pytest.approx(1.5 * TWO_PI)
    assert cfg.segments[0].frequencies == ("2*w3",)
    assert cfg.segments[1].kappa_sq == 0.5
    assert cfg.segments[1].frequencies == ()
    assert cfg.validate() == []


def test_load_config_reports_all_errors(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("""
[trap]
mu_target = 0.2
bogus = 1
[[protocol.segments]]
duration = 1.0
duration_periods = 1.0
kappa_sq = 1.0
[[protocol.segments]]
duration = 2.0
kappa_sq = -1.0
frequencies = ["w99"]
delta_phi_frac = 0.1
""")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    msgs = exc.value.errors
    for fragment in [
        "unknown key trap.bogus",
        "exactly one of duration or duration_periods",
        "mu_target",
        "kappa_sq",
        "mode 99",
    ]:
        assert any(fragment in m for m in msgs), (fragment, msgs)


def test_load_config_rejects_bad_toml_syntax(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("name = [unclosed")
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_noninteracting_trap(tmp_path):
    path = tmp_path / "free.toml"
    path.write_text("""
[trap]
g1d = 0.0
[[protocol.segments]]
duration = 1.0
kappa_sq = 1.0
""")
    cfg = load_config(path)
    assert cfg.g1d == 0.0
    assert cfg.mu_target is None

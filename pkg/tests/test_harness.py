"""Experiment harness and CLI: config loading, runners, manifests, determinism."""

import json
import math

import numpy as np
import pytest

from nfmimo.cli import main
from nfmimo.harness import (
    EXPERIMENT_KINDS,
    Experiment,
    RunManifest,
    load_config,
    run_experiment,
    validate_config,
)
from nfmimo.stats import THREADS_ENV_VAR

SMALL_CFG_JSON = json.dumps(
    {"P_h": 4, "P_v": 4, "Q": 2, "L_clusters": 2, "N_rays": 3}
)

RAYLEIGH_TABLE_M = {
    (2.4e9, 1.0, 0.1): 16,
    (2.4e9, 1.0, 2.0): 80,
    (2.4e9, 2.0, 2.0): 128,
    (5e9, 1.0, 0.1): 34,
    (5e9, 1.0, 2.0): 167,
    (5e9, 2.0, 2.0): 267,
}


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# ---------------------------------------------------------------------------
# Config loading


def test_validate_config_empty_gives_defaults():
    cfg = validate_config("")
    assert cfg.P_h == 64 and cfg.P_v == 64 and cfg.Q == 4
    assert validate_config("  \n ") == cfg
    assert validate_config("null") == cfg
    assert validate_config("{}") == cfg


def test_validate_config_rejections():
    with pytest.raises(ValueError, match="delta_T"):
        validate_config('{"delta_T": 0}')
    with pytest.raises(ValueError, match="not_a_field"):
        validate_config('{"not_a_field": 3}')
    with pytest.raises(ValueError, match="JSON"):
        validate_config("{bad json")
    with pytest.raises(ValueError, match="object"):
        validate_config("[1, 2]")


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"P_h": 8, "P_v": 2, "K": 3.5}')
    cfg = load_config(path)
    assert (cfg.P_h, cfg.P_v, cfg.K) == (8, 2, 3.5)
    assert load_config(None).P_h == 64


def test_experiment_kind_validation(tmp_path):
    with pytest.raises(ValueError, match="unknown experiment kind"):
        Experiment(kind="nope", output=tmp_path)
    for kind in EXPERIMENT_KINDS:
        Experiment(kind=kind, output=tmp_path)


# ---------------------------------------------------------------------------
# Runners


def test_rayleigh_table_reference_boundaries(tmp_path):
    exp = Experiment(kind="rayleigh_table", output=tmp_path)
    manifest = run_experiment(exp, validate_config(""))
    header, rows = read_csv(tmp_path / "rayleigh_table.csv")
    assert header == ["frequency_hz", "width_m", "height_m", "rayleigh_m"]
    # six standard cells, then the configured-array row
    assert len(rows) == 7
    for row in rows[:6]:
        key = (float(row[0]), float(row[1]), float(row[2]))
        assert abs(float(row[3]) - RAYLEIGH_TABLE_M[key]) < 1.0
    assert rows[6][1] == "configured"
    assert "rayleigh_table.csv" in manifest.outputs


def test_error_vs_array_runner(tmp_path):
    exp = Experiment(
        kind="error_vs_array",
        sweep={"sides": [2, 4], "model": "planar"},
        seed=1,
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "error_vs_array__planar.csv")
    assert header[0] == "array_side"
    assert [float(r[0]) for r in rows] == [2.0, 4.0]
    assert all(math.isfinite(float(r[1])) for r in rows)


def test_error_vs_array_rejects_spherical(tmp_path):
    exp = Experiment(
        kind="error_vs_array", sweep={"model": "spherical"}, output=tmp_path
    )
    with pytest.raises(ValueError, match="reference"):
        run_experiment(exp, validate_config(SMALL_CFG_JSON))


def test_error_vs_subarray_runner(tmp_path):
    exp = Experiment(
        kind="error_vs_subarray",
        sweep={"p_max_list": [1, 2, 4]},
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "error_vs_subarray.csv")
    assert header[0] == "p_max"
    # the 1x1 tiling matches the reference exactly: -inf sentinel in-file
    assert rows[0][1] == "-inf"
    assert float(rows[1][1]) < float(rows[2][1])


def test_error_vs_subarray_rejects_oversized(tmp_path):
    exp = Experiment(
        kind="error_vs_subarray", sweep={"p_max_list": [8]}, output=tmp_path
    )
    with pytest.raises(ValueError, match="p_max"):
        run_experiment(exp, validate_config(SMALL_CFG_JSON))


def test_complexity_sweep_runner(tmp_path):
    exp = Experiment(
        kind="complexity_sweep",
        sweep={"p_max_list": [1, 2, 4, 8, 16, 30]},
        output=tmp_path,
    )
    run_experiment(exp, validate_config(""))
    header, rows = read_csv(tmp_path / "complexity_sweep.csv")
    assert header[0] == "p_max"
    totals = [float(r[1]) for r in rows]
    assert totals[0] == 2211840.0
    assert all(b <= a for a, b in zip(totals, totals[1:]))


def test_spatial_ccf_runner(tmp_path):
    exp = Experiment(
        kind="spatial_ccf",
        sweep={"max_offset": 3, "n_realizations": 2},
        seed=0,
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "spatial_ccf__spherical.csv")
    assert header[0] == "spacing_wavelengths"
    assert len(rows) == 4
    assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-12)


def test_temporal_acf_runner(tmp_path):
    exp = Experiment(
        kind="temporal_acf",
        sweep={"dt_max": 0.02, "points": 5, "n_realizations": 2},
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "temporal_acf__spherical.csv")
    assert header[0] == "dt_s"
    assert len(rows) == 5
    assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-12)
    assert all(float(r[3]) <= 1.0 + 1e-9 for r in rows)


def test_frequency_cf_runner(tmp_path):
    exp = Experiment(
        kind="frequency_cf",
        sweep={"df_max": 1e6, "points": 4, "n_realizations": 2, "model": "planar"},
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "frequency_cf__planar.csv")
    assert header[0] == "df_hz"
    assert len(rows) == 4
    assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-12)


def test_capacity_sweep_runner(tmp_path):
    exp = Experiment(
        kind="capacity_sweep",
        sweep={"snr_db_list": [0.0, 10.0], "n_realizations": 2, "phase_draws": 2},
        output=tmp_path,
    )
    run_experiment(exp, validate_config(SMALL_CFG_JSON))
    header, rows = read_csv(tmp_path / "capacity_sweep__spherical.csv")
    assert header[0] == "snr_db"
    caps = [float(r[1]) for r in rows]
    assert caps[1] > caps[0] > 0
    assert all(r[2] == "0.0" for r in rows)


def test_subarray_model_output_name(tmp_path):
    exp = Experiment(
        kind="spatial_ccf",
        sweep={"max_offset": 1, "n_realizations": 1, "model": "subarray:2x2"},
        output=tmp_path,
    )
    manifest = run_experiment(exp, validate_config(SMALL_CFG_JSON))
    assert "spatial_ccf__subarray_2x2.csv" in manifest.outputs


# ---------------------------------------------------------------------------
# Manifest and determinism


def test_manifest_contents(tmp_path):
    exp = Experiment(
        kind="complexity_sweep", sweep={"p_max_list": [1, 2]}, seed=11, output=tmp_path
    )
    manifest = run_experiment(exp, validate_config(SMALL_CFG_JSON))
    assert isinstance(manifest, RunManifest)
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["experiment"] == "complexity_sweep"
    assert data["seed"] == 11
    assert data["config"]["P_h"] == 4
    assert data["sweep"] == {"p_max_list": [1, 2]}
    assert data["wall_clock_s"] >= 0
    assert set(data["outputs"]) == {"complexity_sweep.csv"}
    digest = data["outputs"]["complexity_sweep.csv"]
    assert len(digest) == 64 and all(c in "0123456789abcdef" for c in digest)


def test_runs_are_reproducible(tmp_path):
    kinds = {
        "spatial_ccf": {"max_offset": 2, "n_realizations": 3},
        "temporal_acf": {"dt_max": 0.01, "points": 3, "n_realizations": 3},
        "frequency_cf": {"df_max": 1e6, "points": 3, "n_realizations": 3},
        "capacity_sweep": {"snr_db_list": [10.0], "n_realizations": 3},
    }
    cfg = validate_config(SMALL_CFG_JSON)
    for kind, sweep in kinds.items():
        out_a = tmp_path / f"{kind}_a"
        out_b = tmp_path / f"{kind}_b"
        m_a = run_experiment(Experiment(kind=kind, sweep=sweep, seed=3, output=out_a), cfg)
        m_b = run_experiment(Experiment(kind=kind, sweep=sweep, seed=3, output=out_b), cfg)
        assert m_a.outputs == m_b.outputs, kind
        for name in m_a.outputs:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_thread_count_does_not_change_results(tmp_path, monkeypatch):
    cfg = validate_config(SMALL_CFG_JSON)
    sweep = {"dt_max": 0.01, "points": 4, "n_realizations": 6}

    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    m1 = run_experiment(
        Experiment(kind="temporal_acf", sweep=sweep, seed=2, output=tmp_path / "serial"),
        cfg,
    )
    monkeypatch.setenv(THREADS_ENV_VAR, "4")
    m4 = run_experiment(
        Experiment(kind="temporal_acf", sweep=sweep, seed=2, output=tmp_path / "threaded"),
        cfg,
    )
    assert m1.outputs == m4.outputs
    name = next(iter(m1.outputs))
    assert (tmp_path / "serial" / name).read_bytes() == (
        tmp_path / "threaded" / name
    ).read_bytes()


def test_bad_thread_env_rejected(monkeypatch):
    from nfmimo.stats import worker_count

    monkeypatch.setenv(THREADS_ENV_VAR, "zero")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.setenv(THREADS_ENV_VAR, "0")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    assert worker_count() == 3


# ---------------------------------------------------------------------------
# CLI


def test_cli_complexity_sweep(tmp_path, capsys):
    rc = main(
        [
            "complexity-sweep",
            "--p-max-list",
            "1,2,4",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "complexity_sweep.csv" in out and "manifest.json" in out
    assert (tmp_path / "complexity_sweep.csv").exists()


def test_cli_capacity_sweep_with_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(SMALL_CFG_JSON)
    rc = main(
        [
            "capacity-sweep",
            "--config",
            str(cfg_path),
            "--snr-db",
            "0,10",
            "--realizations",
            "2",
            "--phase-draws",
            "2",
            "--out",
            str(tmp_path / "run"),
        ]
    )
    assert rc == 0
    assert (tmp_path / "run" / "capacity_sweep__spherical.csv").exists()


def test_cli_rayleigh_table(tmp_path):
    rc = main(["rayleigh-table", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "rayleigh_table.csv").exists()


def test_cli_error_paths(tmp_path, capsys):
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text('{"delta_T": 0}')
    rc = main(
        ["temporal-acf", "--config", str(bad_cfg), "--out", str(tmp_path)]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err

    missing = tmp_path / "missing.json"
    rc = main(["temporal-acf", "--config", str(missing), "--out", str(tmp_path)])
    assert rc == 2

    with pytest.raises(SystemExit):
        main(["not-a-command"])


def test_cli_seeded_runs_identical(tmp_path):
    for sub in ("a", "b"):
        rc = main(
            [
                "spatial-ccf",
                "--config",
                "/dev/null",
                "--max-offset",
                "2",
                "--realizations",
                "2",
                "--seed",
                "7",
                "--out",
                str(tmp_path / sub),
            ]
        )
        assert rc == 0
    name = "spatial_ccf__spherical.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from trifringe.cli import main
from trifringe.io import read_model, read_visibilities

K_TRUE = 0.626
R_HEATER = 100.0


def volt_for_theta(theta):
    return math.sqrt(theta * R_HEATER / K_TRUE)


def write_configs(dirpath, n_voltages=16, scans=True, seed=7):
    spec = {
        "coupling_laws": [{"c0": 0.18, "c1": 1.0 / 3.0}] * 3,
        "k_true": K_TRUE,
        "heater_resistance": R_HEATER,
        "eta_in": [0.5, 0.4, 0.3],
        "eta_out": [0.2, 0.25, 0.3],
        "source_rate": 2e5,
        "pair_rate": 5000.0,
        "coincidence_window_ns": 1.0,
        "rng_seed": seed,
    }
    cfg = {
        "voltages": list(np.linspace(1.0, volt_for_theta(2.2), n_voltages)),
        "fringe_integration_s": 1.0,
    }
    if scans:
        cfg["delays_ps"] = list(np.linspace(-1.5, 1.5, 41))
        cfg["scan_integration_s"] = 60.0
        cfg["scans"] = [
            {"voltage": volt_for_theta(1.2), "input_pair": "1-2", "output_pair": "1-2"},
            {"voltage": volt_for_theta(2.1), "input_pair": "1-2", "output_pair": "1-2"},
        ]
    spec_path = os.path.join(dirpath, "device.json")
    cfg_path = os.path.join(dirpath, "run.json")
    with open(spec_path, "w") as fh:
        json.dump(spec, fh)
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    return spec_path, cfg_path


def run_ok(*args):
    result = CliRunner().invoke(main, list(args))
    assert result.exit_code == 0, result.output
    return result


def test_gen_is_deterministic(tmp_path):
    spec, cfg = write_configs(str(tmp_path), n_voltages=4, scans=False)
    run_ok("gen", "--spec", spec, "--config", cfg, "--out", str(tmp_path / "a"))
    run_ok("gen", "--spec", spec, "--config", cfg, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "fringes.csv").read_bytes()
    b = (tmp_path / "b" / "fringes.csv").read_bytes()
    assert a == b
    run_ok("gen", "--spec", spec, "--config", cfg, "--seed", "99",
           "--out", str(tmp_path / "c"))
    assert (tmp_path / "c" / "fringes.csv").read_bytes() != a


def test_full_chain(tmp_path):
    spec, cfg = write_configs(str(tmp_path))
    data = tmp_path / "data"
    result = run_ok("gen", "--spec", spec, "--config", cfg, "--out", str(data),
                    "--noise-free")
    assert "2 delay scans" in result.output
    assert sorted(os.listdir(data)) == ["fringes.csv", "scan_000.csv",
                                        "scan_001.csv"]

    model_path = str(tmp_path / "model.json")
    report_path = str(tmp_path / "fit_report.csv")
    result = run_ok("calibrate", "--fringes", str(data / "fringes.csv"),
                    "--out", model_path, "--report", report_path,
                    "--pair-rate", "5000")
    assert "k = " in result.output
    assert os.path.exists(report_path)
    assert os.path.exists(str(tmp_path / "fit_report.png"))
    model = read_model(model_path)
    assert model.calibration.k == pytest.approx(K_TRUE, rel=1e-4)
    assert model.input_pair_rate == 5000.0

    vis_path = str(tmp_path / "vis.csv")
    result = run_ok("scan-fit", "--scans", str(data), "--out", vis_path,
                    "--model", model_path)
    assert "fitted 2 scans" in result.output
    assert "(dip)" in result.output and "(peak)" in result.output
    records = read_visibilities(vis_path)
    assert len(records) == 2
    assert all(math.isfinite(r.theta) for r in records)
    assert records[0].visibility > 0.3
    assert records[1].visibility < -0.1
    assert os.path.exists(str(tmp_path / "vis.png"))

    cmp_path = str(tmp_path / "comparison.csv")
    result = run_ok("report", "--model", model_path, "--vis", vis_path,
                    "--out", cmp_path)
    assert "2/2 measured visibilities within 3 sigma" in result.output
    assert os.path.exists(str(tmp_path / "comparison.png"))

    pred_path = str(tmp_path / "pred.csv")
    result = run_ok("predict", "--model", model_path, "--input", "011",
                    "--grid", "80", "--out", pred_path)
    assert "fringe contrast" in result.output
    assert os.path.exists(str(tmp_path / "pred.png"))

    fisher_path = str(tmp_path / "fisher.csv")
    result = run_ok("fisher", "--model", model_path, "--grid", "400",
                    "--out", fisher_path)
    assert "max F = " in result.output
    assert os.path.exists(str(tmp_path / "fisher.png"))
    assert os.path.exists(str(tmp_path / "fisher_summary.json"))


def test_predict_ideal_flags_quantum_advantage(tmp_path):
    out = str(tmp_path / "pred.csv")
    result = run_ok("predict", "--ideal", "--input", "011", "--grid", "200",
                    "--out", out)
    line = next(l for l in result.output.splitlines() if "out 2-3:" in l)
    assert "(quantum exceeds classical)" in line
    quantum = float(line.split("quantum")[1].split(",")[0])
    classical = float(line.split("classical")[1].split()[0])
    assert quantum > classical


def test_fisher_ideal_summary(tmp_path):
    out = str(tmp_path / "fisher.csv")
    result = run_ok("fisher", "--ideal", "--input", "011", "--grid", "2000",
                    "--out", out)
    assert "max F = 2.666" in result.output
    assert "F > 2 on theta in" in result.output
    doc = json.loads((tmp_path / "fisher_summary.json").read_text())
    assert 2.53 <= doc["max_F"] <= 2.68
    assert doc["theta_interval_where_F_exceeds_2"] is not None


def test_device_source_must_be_unambiguous(tmp_path):
    spec, cfg = write_configs(str(tmp_path), n_voltages=4, scans=False)
    result = CliRunner().invoke(main, ["predict", "--out", str(tmp_path / "p.csv")])
    assert result.exit_code == 2
    assert "exactly one of --model or --ideal" in result.output
    result = CliRunner().invoke(main, ["fisher", "--ideal", "--model", spec,
                                       "--out", str(tmp_path / "f.csv")])
    assert result.exit_code == 2


def test_predict_rejects_single_photon_input(tmp_path):
    result = CliRunner().invoke(main, ["predict", "--ideal", "--input", "100",
                                       "--out", str(tmp_path / "p.csv")])
    assert result.exit_code == 2
    assert "two-photon" in result.output


def test_calibrate_exit_3_when_fit_is_ill_posed(tmp_path):
    spec, cfg = write_configs(str(tmp_path), n_voltages=3, scans=False)
    data = tmp_path / "data"
    run_ok("gen", "--spec", spec, "--config", cfg, "--out", str(data),
           "--noise-free")
    result = CliRunner().invoke(main, [
        "calibrate", "--fringes", str(data / "fringes.csv"),
        "--out", str(tmp_path / "m.json"), "--report", str(tmp_path / "r.csv")])
    assert result.exit_code == 3
    assert "fit error:" in result.output


def test_report_requires_thetas_from_scan_fit(tmp_path):
    spec, cfg = write_configs(str(tmp_path), n_voltages=10)
    data = tmp_path / "data"
    run_ok("gen", "--spec", spec, "--config", cfg, "--out", str(data),
           "--noise-free")
    model_path = str(tmp_path / "model.json")
    run_ok("calibrate", "--fringes", str(data / "fringes.csv"),
           "--out", model_path, "--report", str(tmp_path / "r.csv"))
    vis_path = str(tmp_path / "vis.csv")
    run_ok("scan-fit", "--scans", str(data), "--out", vis_path)
    assert all(math.isnan(r.theta) for r in read_visibilities(vis_path))
    result = CliRunner().invoke(main, ["report", "--model", model_path,
                                       "--vis", vis_path,
                                       "--out", str(tmp_path / "c.csv")])
    assert result.exit_code == 2
    assert "rerun scan-fit with --model" in result.output


def test_bad_input_files_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = CliRunner().invoke(main, ["gen", "--spec", str(bad),
                                       "--config", str(bad),
                                       "--out", str(tmp_path / "o")])
    assert result.exit_code == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    result = CliRunner().invoke(main, ["scan-fit", "--scans", str(empty),
                                       "--out", str(tmp_path / "v.csv")])
    assert result.exit_code == 2

import json

import numpy as np
import pytest

from classim import cli, measurements as ms, models
from classim.errors import SolverFailure


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_threshold_scalar(capsys):
    code, out, _ = run(capsys, "threshold", "--d", "2")
    assert code == 0
    assert "0.5" in out


def test_threshold_json(capsys):
    code, out, _ = run(capsys, "threshold", "--d", "7", "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert abs(report["v_star"] - 0.2655) <= 5e-5


def test_threshold_curve_csv_monotone(capsys):
    code, out, _ = run(capsys, "threshold", "--d", "3", "--curve", "0.2:0.9:0.01")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,v,eta"
    eta = [float(ln.split(",")[2]) for ln in lines[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(eta, eta[1:]))


def test_threshold_curve_plot(tmp_path, capsys):
    fig = tmp_path / "curve.png"
    out_csv = tmp_path / "curve.csv"
    code, _, _ = run(
        capsys,
        "threshold", "--d", "3", "--curve", "0.2:0.9:0.05",
        "--plot", str(fig), "--output", str(out_csv),
    )
    assert code == 0
    assert fig.exists() and fig.stat().st_size > 1000
    assert out_csv.read_text().startswith("t,v,eta")


def test_threshold_bad_dimension(capsys):
    code, _, err = run(capsys, "threshold", "--d", "1")
    assert code == 2
    assert "error" in err


def test_search_family_trine_eigenbases_only(capsys, tmp_path):
    model_path = tmp_path / "model.json"
    code, out, _ = run(
        capsys, "search", "--family", "trine", "--model-out", str(model_path)
    )
    assert code == 0
    report = json.loads(out)
    assert report["v_star"] > 0.1
    assert report["residual"] <= 1e-7
    loaded = models.load_model(model_path)
    trine_set = ms.MeasurementSet([ms.trine().outcomes])
    assert models.reconstruction_residual(loaded, trine_set) <= 1e-7


def test_search_requires_seed_for_random(capsys):
    code, _, err = run(capsys, "search", "--family", "mub", "--d", "2", "--count", "2",
                       "--n-lambda", "10")
    assert code == 2
    assert "--seed" in err


def test_search_byte_identical_reports(capsys):
    argv = ("search", "--family", "mub", "--d", "2", "--count", "2",
            "--n-lambda", "25", "--seed", "7")
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert json.loads(out1)["v_star"] >= 0.5 - 1e-6


def test_search_input_file(capsys, tmp_path):
    path = tmp_path / "set.json"
    ms.save_measurement_set(ms.mub_set(2, 2), path)
    code, out, _ = run(capsys, "search", "--input", str(path))
    assert code == 0
    assert abs(json.loads(out)["v_star"] - 0.5) <= 1e-6


def test_search_missing_file_exit_2(capsys):
    code, _, err = run(capsys, "search", "--input", "/nonexistent/set.json")
    assert code == 2


def test_search_malformed_json_exit_2(capsys, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    code, _, _ = run(capsys, "search", "--input", str(path))
    assert code == 2


def test_search_solver_failure_exit_3(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise SolverFailure("synthetic failure")

    monkeypatch.setattr(models, "search_classical_model", boom)
    code, _, err = run(capsys, "search", "--family", "trine")
    assert code == 3
    assert "synthetic" in err


def test_witness_two_mubs(capsys):
    code, out, _ = run(capsys, "witness", "--family", "mub", "--d", "2", "--count", "2")
    assert code == 0
    report = json.loads(out)
    assert abs(report["witness_value"] - 4.0) <= 1e-9
    assert abs(report["classical_bound"] - (2 + np.sqrt(2))) <= 1e-9
    assert abs(report["critical_visibility"] - 0.7071) <= 5e-4
    assert report["verdict"] == "VIOLATED"


def test_witness_not_violated(capsys, tmp_path):
    # fully depolarized set, probed with the witness built for the clean one
    clean = ms.mub_set(2, 2)
    path = tmp_path / "noisy.json"
    ms.save_measurement_set(ms.depolarize(clean, 0.0), path)
    states = [
        ms.matrix_to_json(clean.table[x, a]) for x in range(2) for a in range(2)
    ]
    coeffs = [
        {"a": a, "z": x * 2 + a, "x": x, "value": 1.0}
        for x in range(2)
        for a in range(2)
    ]
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"coefficients": coeffs, "states": states}))
    code, out, _ = run(
        capsys, "witness", "--input", str(path), "--spec", str(spec_path)
    )
    assert code == 0
    report = json.loads(out)
    assert report["verdict"] == "NOT VIOLATED"
    assert report["critical_visibility"] == 1.0


def test_witness_overflow_exit_4(capsys):
    code, _, err = run(capsys, "witness", "--family", "mub", "--d", "5", "--count", "2")
    assert code == 4
    assert "9765625" in err


def test_nondisturb_pair_model(capsys, tmp_path):
    model_path = tmp_path / "pair.json"
    z, x = ms.mub_unitaries(2, 2)
    models.save_model(models.pair_half_noise_model(z, x), model_path)
    path = tmp_path / "set.json"
    ms.save_measurement_set(ms.mub_set(2, 2), path)
    code, out, _ = run(
        capsys, "nondisturb", "--input", str(path), "--model", str(model_path)
    )
    assert code == 0
    report = json.loads(out)
    assert report["classical_model_found"] is True
    assert report["luders_residual"] <= 1e-7
    assert report["jm_marginal_residual"] <= 1e-7
    assert any("non-disturbing" in v for v in report["verdicts"])


def test_nondisturb_builds_model_with_seed(capsys):
    code, out, _ = run(
        capsys, "nondisturb", "--family", "mub", "--d", "2", "--count", "2",
        "--n-lambda", "20", "--seed", "3",
    )
    assert code == 0
    report = json.loads(out)
    assert report["classical_model_found"] is True
    assert 0.5 - 1e-6 <= report["v_star"] <= 0.7072
    assert report["luders_residual"] <= 1e-7


def test_nondisturb_trine_direct_and_extend(capsys):
    code, out, _ = run(
        capsys, "nondisturb", "--family", "trine", "--direct", "--extend"
    )
    assert code == 0
    report = json.loads(out)
    assert report["luders_residual"] > 0.05
    assert any(v.startswith("Lüders-disturbing") for v in report["verdicts"])
    assert report["extended_residual"] <= 1e-12
    assert report["extended_dim"] == 5


def test_mc_check(capsys):
    code, out, _ = run(capsys, "mc-check", "--d", "2", "--samples", "100000",
                       "--seed", "3")
    assert code == 0
    report = json.loads(out)
    assert abs(report["mean"] - 0.75) <= 3 * report["stderr"]
    assert abs(report["z"]) < 3
    assert abs(report["expected"] - 0.75) <= 1e-12


def test_mc_check_d1_exact(capsys):
    code, out, _ = run(capsys, "mc-check", "--d", "1", "--samples", "10", "--seed", "1")
    assert code == 0
    assert json.loads(out)["mean"] == 1.0


def test_mc_check_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["mc-check", "--d", "2"])
    assert exc.value.code == 2


def test_mc_check_byte_identical(capsys):
    argv = ("mc-check", "--d", "3", "--samples", "20000", "--seed", "11")
    _, out1, _ = run(capsys, *argv)
    _, out2, _ = run(capsys, *argv)
    assert out1 == out2


def test_console_script_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "classim.cli", "threshold", "--d", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "0.5" in proc.stdout

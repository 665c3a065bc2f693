"""
Tests de la CLI: codigos de salida, artefactos y comprobacion de hashes
"""

import sys
import os
import json

# Añadir path del backend
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pandas as pd
import pytest

from cli.main import EXIT_ERROR, main
from common.schemas import AssemblyMode, MeasureKind
from mesh.io import load_mesh
from operators.io import load_matrix, save_matrix
from operators.matrices import OperatorMatrix


def _flags(out_dir, *extra):
    return ["--domain", "ball", "--resolution", "8", "--eps", "0.1", "--degree", "2", "--out-dir", str(out_dir), *extra]


def test_resolution_below_minimum_is_a_configuration_error(tmp_path):
    assert main(["mesh", "--resolution", "7", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert not (tmp_path / "mesh.json").exists()


def test_invalid_domain_parameters(tmp_path):
    assert main(["mesh", "--domain", "ellipsoid", "--a", "1,-2", "--resolution", "8", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert main(["mesh", *_flags(tmp_path, "--s-schedule", "0.5")]) == EXIT_ERROR


def test_mesh_command_writes_hashed_mesh(tmp_path):
    assert main(["mesh", *_flags(tmp_path)]) == 0
    mesh, digest = load_mesh(str(tmp_path / "mesh.json"))
    assert mesh.size == 512
    assert len(digest) == 16


def test_verify_rejects_mesh_from_other_config(tmp_path, capsys):
    assert main(["mesh", *_flags(tmp_path, "--seed", "0")]) == 0
    mesh_path = str(tmp_path / "mesh.json")
    code = main(["verify", *_flags(tmp_path, "--seed", "3", "--mesh", mesh_path), "--checks", "leray_levi_mass"])
    assert code == EXIT_ERROR
    err = capsys.readouterr().err
    assert "config hash:" in err and "mesh hash:" in err


def test_unknown_check_name(tmp_path):
    assert main(["verify", *_flags(tmp_path), "--checks", "leray_levi_mass,not_a_check"]) == EXIT_ERROR


def test_verify_then_report(tmp_path, capsys):
    assert main(["verify", *_flags(tmp_path), "--checks", "leray_levi_mass"]) == 0
    assert "PASS  leray_levi_mass" in capsys.readouterr().out

    reports = json.loads((tmp_path / "reports.json").read_text())
    assert [r["check_name"] for r in reports] == ["leray_levi_mass"]
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert summary.loc[0, "config_hash"] == reports[0]["config_hash"]

    assert main(["report", *_flags(tmp_path)]) == 0
    trend = pd.read_csv(tmp_path / "trend.csv")
    assert list(trend["check"]) == ["leray_levi_mass"]


def test_report_rejects_reports_from_other_config(tmp_path):
    assert main(["verify", *_flags(tmp_path), "--checks", "leray_levi_mass"]) == 0
    assert main(["report", *_flags(tmp_path, "--seed", "9")]) == EXIT_ERROR
    assert main(["report", *_flags(tmp_path / "empty")]) == EXIT_ERROR


def test_norms_of_saved_identity(ball_mesh, tmp_path, capsys):
    matrix = OperatorMatrix(
        entries=np.eye(ball_mesh.size, dtype=complex),
        measure=MeasureKind.LAMBDA,
        weights=ball_mesh.lambda_weights,
        lambda_weights=ball_mesh.lambda_weights,
        mesh_ref=ball_mesh.mesh_hash(),
        label="I",
    )
    path = str(tmp_path / "I.mat")
    save_matrix(matrix, path, "0123456789abcdef")
    for p in ("1", "2", "inf"):
        assert main(["norms", "--matrix", path, "--p", p, "--out-dir", str(tmp_path)]) == 0
        result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert result["mode"] == "exact"
        assert result["lower"] == pytest.approx(1.0) and result["upper"] == pytest.approx(1.0)
        assert result["config_hash"] == "0123456789abcdef"
    assert main(["norms", "--matrix", path, "--p", "0.5", "--out-dir", str(tmp_path)]) == EXIT_ERROR


def test_project_writes_operator_files(tmp_path):
    assert main(["project", *_flags(tmp_path)]) == 0
    names = {"C_eps0.1.mat", "Cs_eps0.1.mat"} | {f"P_{m.value}.mat" for m in MeasureKind}
    assert names <= set(os.listdir(tmp_path))
    projection, digest = load_matrix(str(tmp_path / "P_lambda.mat"))
    assert projection.size == 512
    assert len(digest) == 16
    assert main(["norms", "--matrix", str(tmp_path / "P_lambda.mat"), "--p", "2", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "norms_P_lambda_p2.0.json") as handle:
        assert json.load(handle)["upper"] == pytest.approx(1.0, abs=1e-6)


def test_project_out_writes_configured_projection(tmp_path):
    target = tmp_path / "P_custom.mat"
    assert main(["project", *_flags(tmp_path, "--out", str(target))]) == 0
    projection, _ = load_matrix(str(target))
    default, _ = load_matrix(str(tmp_path / "P_lambda.mat"))
    assert projection.measure == MeasureKind.LAMBDA
    assert np.allclose(projection.entries, default.entries)
    cauchy, _ = load_matrix(str(tmp_path / "C_eps0.1.mat"))
    assert cauchy.mode == AssemblyMode.EXTRAPOLATED


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

"""Command-line paths, their JSON payloads, output files and exit codes."""
import argparse
import json
import math
from pathlib import Path

import pytest

from src.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, main, radians

DESIGN_DIR = Path(__file__).resolve().parents[1] / "data" / "designs"
ICOSAHEDRON = str(DESIGN_DIR / "icosahedron.txt")
OCTAHEDRON = str(DESIGN_DIR / "octahedron.txt")


def run_json(capsys, *argv):
    code = main(list(argv) + ["--json"])
    captured = capsys.readouterr()
    assert code == EXIT_OK, captured.err
    return json.loads(captured.out)


def test_radians_parser():
    assert radians("1.25") == 1.25
    assert radians("pi") == pytest.approx(math.pi)
    assert radians("pi/3") == pytest.approx(math.pi / 3)
    assert radians("2pi/3") == pytest.approx(2 * math.pi / 3)
    for text in ("60deg", "60 degrees", "60°", "1.0d", "4", "-0.1", "abc"):
        with pytest.raises(argparse.ArgumentTypeError):
            radians(text)


def test_space_info(capsys):
    payload = run_json(capsys, "space", "info", "--space", "sphere2", "--r", "pi/3")
    assert (payload["d"], payload["d0"], payload["a"], payload["b"]) == (2, 2, 0.0, 0.0)
    assert payload["eigen_dimensions"][:3] == [3.0, 5.0, 7.0]
    assert payload["ball_volume"] == pytest.approx(0.25)
    octonion = run_json(capsys, "space", "info", "--space", "octonion")
    assert octonion["eigen_dimensions"][0] == 26.0
    assert octonion["vector_model"] is False
    abstract = run_json(capsys, "space", "info", "--d", "6", "--d0", "2")
    assert abstract["a"] == 2.0


def test_degree_radii_are_usage_errors(capsys):
    assert main(["discrepancy", "spectral", "--in", OCTAHEDRON, "--r", "60deg"]) == EXIT_USAGE
    assert main(["coeffs", "--space", "sphere2", "--r", "4"]) == EXIT_USAGE
    assert main(["space", "info"]) == EXIT_DOMAIN
    assert main(["--help"]) == EXIT_OK
    assert main([]) == EXIT_USAGE
    capsys.readouterr()


def test_special_function_commands(capsys):
    values = run_json(capsys, "jacobi", "eval", "--a", "0", "--b", "0", "--m", "2", "--x", "1", "0")
    assert values["values"] == pytest.approx([1.0, -0.5])
    zeros = run_json(capsys, "jacobi", "zeros", "--space", "sphere2", "--m", "6")
    assert len(zeros["zeros"]) == 5
    assert all(row["residual"] < 1e-10 for row in zeros["zeros"])
    picked = run_json(capsys, "jacobi", "zeros", "--a", "1", "--b", "0", "--m", "10", "--ell", "1", "9")
    assert [row["ell"] for row in picked["zeros"]] == [1, 9]
    bessel = run_json(capsys, "bessel", "zeros", "--nu", "0.5", "--count", "3")
    assert [row["j"] for row in bessel["zeros"]] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi])
    j_values = run_json(capsys, "bessel", "eval", "--nu", "0.5", "--x", "0", "3.14159")
    assert j_values["values"][0] == 0.0


def test_coefficients_human_output(capsys):
    assert main(["coeffs", "--space", "sphere2", "--r", "1", "--max-degree", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[coefficients]" in out
    assert "parseval_total: " in out


def test_spectral_discrepancy_and_two_radius_sum(capsys):
    single = run_json(capsys, "discrepancy", "spectral", "--in", OCTAHEDRON, "--r", "pi/3", "--tol", "1e-4")
    assert single["converged"] is True
    assert single["N"] == 6
    assert single["tail_bound"] <= 1e-4
    pair = run_json(capsys, "discrepancy", "spectral", "--in", OCTAHEDRON, "--r", "0.8", "--r2", "1.6", "--tol", "1e-4")
    assert len(pair["radii"]) == 2
    assert pair["value"] == pytest.approx(sum(entry["value"] for entry in pair["radii"]))


def test_strict_truncation_is_a_domain_error(capsys):
    code = main(["discrepancy", "spectral", "--in", OCTAHEDRON, "--r", "0.5", "--tol", "1e-14", "--max-degree", "50", "--strict"])
    assert code == EXIT_DOMAIN
    assert "error:" in capsys.readouterr().err


def test_cubature_check_reports_design_strength(capsys):
    payload = run_json(capsys, "cubature", "check", "--in", ICOSAHEDRON)
    assert payload["strength"] == 5
    assert payload["A"] == pytest.approx(1.0)
    assert payload["min_separation"] == pytest.approx(math.atan(2.0))


def test_montecarlo_and_unsupported_spaces(capsys, tmp_path):
    payload = run_json(capsys, "discrepancy", "mc", "--in", OCTAHEDRON, "--r", "1", "--samples", "5000", "--seed", "3")
    assert payload["estimate"] > 0 and payload["stderr"] > 0

    matrix = tmp_path / "op2.txt"
    matrix.write_text("0 1\n1 0\n", encoding="utf-8")
    code = main(["discrepancy", "mc", "--in", str(matrix), "--format", "matrix", "--space", "octonion", "--r", "1"])
    assert code == EXIT_DOMAIN
    assert "error:" in capsys.readouterr().err
    gram = run_json(capsys, "gram", "--in", str(matrix), "--format", "matrix", "--space", "octonion", "--max-degree", "3")
    assert gram["M"] == 3


def test_pointset_generation_and_conversion(capsys, tmp_path):
    target = tmp_path / "cp2.json"
    generated = run_json(
        capsys, "pointset", "gen", "--space", "projcomplex2", "--kind", "uniform", "--N", "40", "--seed", "5", "--to", str(target)
    )
    assert generated["N"] == 40
    assert target.exists()
    spectral = run_json(capsys, "discrepancy", "spectral", "--in", str(target), "--r", "1", "--tol", "1e-4")
    assert spectral["space"]["family"] == "projcomplex"

    padded = tmp_path / "padded.json"
    converted = run_json(capsys, "pointset", "convert", "--in", OCTAHEDRON, "--to", str(padded), "--pad", "9")
    assert converted["N"] == 9
    check = run_json(capsys, "cubature", "check", "--in", str(padded))
    assert check["strength"] == 3


def test_out_directory_gets_payload_tables_and_run_record(capsys, tmp_path):
    out = tmp_path / "gram_run"
    assert main(["gram", "--in", ICOSAHEDRON, "--max-degree", "8", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert (out / "gram.csv").exists()
    payload = json.loads((out / "gram.json").read_text(encoding="utf-8"))
    assert payload["N"] == 12
    record = json.loads((out / "gram.json.run.json").read_text(encoding="utf-8"))
    assert record["argv"][0] == "gram"
    assert ICOSAHEDRON in record["input_digests"]
    assert len(record["config_hash"]) == 64
    assert str(out / "gram.csv") in record["outputs"]


def write_study(tmp_path, n_grid, name="cli-study"):
    config = tmp_path / f"{name}.json"
    config.write_text(
        json.dumps(
            {
                "family": "sphere",
                "n": 2,
                "generator": "uniform",
                "n_grid": n_grid,
                "radii": [1.0],
                "seeds": 2,
                "max_degree": 128,
                "name": name,
            }
        ),
        encoding="utf-8",
    )
    return config


def test_scaling_experiment_with_resume(capsys, tmp_path):
    config = write_study(tmp_path, [16, 32, 64])
    out = tmp_path / "study"
    first = run_json(capsys, "experiment", "scaling", "--config", str(config), "--out", str(out), "--resume", "--bootstrap", "20")
    assert first["resume"] == {"hits": 0, "misses": 6}
    assert "bootstrap_slope_std" in first
    assert (out / "scaling_results.csv").exists()
    assert (out / "brief.md").read_text(encoding="utf-8").startswith("# Scaling study: cli-study")

    second = run_json(capsys, "experiment", "scaling", "--config", str(config), "--out", str(out), "--resume")
    assert second["resume"] == {"hits": 6, "misses": 0}
    assert second["slope"] == first["slope"]

    assert main(["experiment", "scaling", "--config", str(config), "--resume"]) == EXIT_DOMAIN
    capsys.readouterr()


def test_plain_run_leaves_cells_for_a_later_resume(capsys, tmp_path):
    config = write_study(tmp_path, [16, 32, 64], name="fresh")
    out = tmp_path / "fresh"
    plain = run_json(capsys, "experiment", "scaling", "--config", str(config), "--out", str(out))
    assert plain["resume"] == {"hits": 0, "misses": 6}
    assert len(list((out / "cells").glob("*/N*_seed*.json"))) == 6

    resumed = run_json(capsys, "experiment", "scaling", "--config", str(config), "--out", str(out), "--resume")
    assert resumed["resume"] == {"hits": 6, "misses": 0}
    assert resumed["slope"] == plain["slope"]

    again = run_json(capsys, "experiment", "scaling", "--config", str(config), "--out", str(out))
    assert again["resume"] == {"hits": 0, "misses": 6}


def test_sweep_and_bad_radius_experiments(capsys):
    sweep = run_json(
        capsys, "experiment", "sweep", "--in", OCTAHEDRON, ICOSAHEDRON, "--points", "5", "--r-min", "0.2", "--r-max", "2.5"
    )
    assert [row["label"] for row in sweep["summary"]] == ["octahedron", "icosahedron"]
    assert len(sweep["r_grid"]) == 5
    assert isinstance(sweep["bounded"], bool)

    scan = run_json(
        capsys, "experiment", "badradius", "--space", "sphere2", "--points", "7", "--max-degree", "30", "--threshold", "1e-2"
    )
    assert len(scan["scores"]) == 7
    assert set(scan["flagged"]) <= {row["r"] for row in scan["scores"]}

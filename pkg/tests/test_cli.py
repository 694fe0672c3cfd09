import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from lassosir.cli import EXIT_NUMERICAL, EXIT_USAGE, main
from lassosir.data import load_csv
from lassosir.estimators import lasso_sir
from lassosir.linalg import projection_distance


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    data, truth = root / "data.csv", root / "truth.csv"
    code = main(["simulate", "--setting", "I", "--p", "30", "--n", "400", "--seed", "3",
                 "--output", str(data), "--truth-output", str(truth)])
    assert code == 0
    return root, data, truth


def test_fit_round_trip_matches_library(simulated, capsys):
    root, data, _ = simulated
    out = root / "fit.json"
    assert main(["fit", "--input", str(data), "--response", "y", "--seed", "11",
                 "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["d_hat"] == 1
    loaded = load_csv(data, "y")
    est = lasso_sir(loaded.X, loaded.y, seed=11)
    assert_array_equal(np.array(payload["B_hat"]), est.B_hat)
    assert payload["config"]["seed"] == 11
    assert len(payload["variables"]) == 30


def test_distance_to_self_is_zero(simulated, capsys):
    _, _, truth = simulated
    assert main(["distance", str(truth), str(truth)]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_fit_csv_outputs_and_distance(simulated, capsys):
    root, data, truth = simulated
    out = root / "fit.csv"
    assert main(["fit", "--input", str(data), "--response", "y", "--seed", "1",
                 "--format", "csv", "--output", str(out)]) == 0
    assert out.exists() and (root / "fit.B_hat.csv").exists()
    assert (root / "fit.directions.csv").read_text().startswith("direction,")
    capsys.readouterr()
    assert main(["distance", str(out), str(truth)]) == 0
    assert float(capsys.readouterr().out) < 0.5
    assert main(["distance", str(root / "fit.json"), str(out)]) == 0


@pytest.mark.parametrize("method", ["dt-sir", "matrix-lasso"])
def test_fit_other_methods(simulated, method, capsys):
    _, data, _ = simulated
    assert main(["fit", "--input", str(data), "--response", "y", "--seed", "2",
                 "--method", method, "--directions", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["method"] == method and payload["d_hat"] is None


def test_estimate_d_command(simulated, capsys):
    _, data, _ = simulated
    assert main(["estimate-d", "--input", str(data), "--response", "y", "--seed", "2"]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_seed_materialized_and_config_reproduces(simulated, caplog):
    root, data, _ = simulated
    cfg = root / "run.cfg"
    first, second = root / "a.json", root / "b.json"
    assert main(["fit", "--input", str(data), "--response", "y", "--quantile-normalize",
                 "--output", str(first), "--dump-config", str(cfg)]) == 0
    assert "resolved config" in caplog.text and '"seed":' in caplog.text
    assert "seed = " in cfg.read_text()
    assert main(["fit", "--config", str(cfg), "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_benchmark_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    args = ["benchmark", "--setting", "I", "--p", "25", "--reps", "2", "--n", "200",
            "--slices", "10", "--folds", "5", "--seed", "7", "--output", str(out)]
    assert main(args) == 0
    text = out.read_text()
    assert main(args + ["--jobs", "2"]) == 0
    assert out.read_text() == text
    assert "lasso-sir" in capsys.readouterr().out


def test_usage_errors(tmp_path, simulated, capsys):
    _, data, _ = simulated
    assert main(["fit"]) == EXIT_USAGE
    assert main(["fit", "--input", str(tmp_path / "none.csv"), "--response", "y"]) == EXIT_USAGE
    assert main(["fit", "--input", str(data), "--response", "nope"]) == EXIT_USAGE
    assert main(["fit", "--input", str(data), "--response", "y", "--slices", "0"]) == EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    assert main(["fit", "--config", str(bad)]) == EXIT_USAGE


def test_numerical_error_exit(tmp_path, capsys):
    path = tmp_path / "two.csv"
    rng = np.random.default_rng(0)
    rows = ["a,b,c,y"] + [f"{a},{b},{c},{int(i % 2)}" for i, (a, b, c) in
                          enumerate(rng.standard_normal((40, 3)))]
    path.write_text("\n".join(rows) + "\n")
    code = main(["fit", "--input", str(path), "--response", "y", "--discrete",
                 "--directions", "2", "--seed", "0"])
    assert code == EXIT_NUMERICAL
    assert "numerical" in capsys.readouterr().err


def test_distance_dimension_mismatch(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("variable,dir1\nx1,1\nx2,0\n")
    b.write_text("variable,dir1\nx1,1\nx2,0\nx3,0\n")
    assert main(["distance", str(a), str(b)]) == EXIT_USAGE


def test_distance_values(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("variable,dir1\nx1,1\nx2,0\n")
    b.write_text("variable,dir1\nx1,0\nx2,3\n")
    assert main(["distance", str(a), str(b)]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(np.sqrt(2))
    assert projection_distance(np.eye(2)[:, :1], np.eye(2)[:, 1:]) == pytest.approx(np.sqrt(2))

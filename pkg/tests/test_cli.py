import json

import numpy as np
import pytest

from hect import io as hio
from hect.cli import main, read_config
from hect.core import Ensemble, Role
from hect.errors import ParseError


@pytest.fixture
def data(tmp_path):
    assert main(["simulate", "--seed", "1", "--out", str(tmp_path / "sim"), "--d", "4",
                 "--m", "40", "--n", "10", "--shift", "mean", "--delta", "4"]) == 0
    return tmp_path / "sim"


def test_simulate_writes_pair(data):
    t = hio.read_csv(data / "trusted.csv")
    s = hio.read_csv(data / "test.csv")
    assert t.X.shape == (40, 4) and s.X.shape == (10, 4)
    assert json.loads((data / "simulate.json").read_text())["schema_version"] == 1


@pytest.mark.parametrize("cmd, extra", [
    ("test2s", ["--B", "19"]),
    ("gof", ["--E", "19", "--classifier", "gbstumps"]),
    ("diagnose", ["--E", "19", "--n-shuffles", "1"]),
])
def test_shifted_data_fails_with_exit_1(data, tmp_path, cmd, extra):
    out = tmp_path / "r.json"
    code = main([cmd, "--seed", "7", "--trusted", str(data / "trusted.csv"),
                 "--test", str(data / "test.csv"), "--out", str(out), *extra])
    rep = json.loads(out.read_text())
    assert code == 1
    assert rep["report"]["decision"] == "Fail"
    assert rep["seed"] == 7 and rep["config"]["seed"] == 7
    assert "jobs" not in rep["config"]


def test_baseline_command(data, tmp_path):
    out = tmp_path / "b.json"
    code = main(["baseline", "--trusted", str(data / "trusted.csv"),
                 "--test", str(data / "test.csv"), "--out", str(out), "--n-pc", "4"])
    assert code == 1
    assert json.loads(out.read_text())["report"]["method"] == "PcaBaseline"


def test_seed_required(data, capsys):
    code = main(["gof", "--trusted", str(data / "trusted.csv"),
                 "--test", str(data / "test.csv")])
    assert code == 2
    assert "--seed" in capsys.readouterr().err


def test_malformed_csv_exit_2_with_line(tmp_path, data, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,x1,x2,x3\n1,2,3,4\n1,2,oops,4\n")
    code = main(["gof", "--seed", "1", "--trusted", str(bad), "--test", str(data / "test.csv")])
    assert code == 2
    assert "line 3" in capsys.readouterr().err


def test_schema_mismatch_exit_3(tmp_path, data):
    other = tmp_path / "other.csv"
    other.write_text("a,b,c,d\n" + "\n".join("1,2,3,4" for _ in range(5)) + "\n")
    code = main(["test2s", "--seed", "1", "--trusted", str(data / "trusted.csv"),
                 "--test", str(other)])
    assert code == 3


def test_other_errors_exit_4(tmp_path, data):
    code = main(["gof", "--seed", "1", "--trusted", str(data / "trusted.csv"),
                 "--test", str(data / "test.csv"), "--m-e", "100", "--E", "19"])
    assert code == 4


def test_config_file_and_flag_override(tmp_path, data):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nE = 29\nalpha=0.1\nclassifier = constant\n")
    out = tmp_path / "r.json"
    main(["gof", "--config", str(cfg), "--seed", "2", "--E", "19",
          "--trusted", str(data / "trusted.csv"), "--test", str(data / "test.csv"),
          "--out", str(out)])
    conf = json.loads(out.read_text())["config"]
    assert conf["E"] == 19 and conf["alpha"] == 0.1 and conf["classifier"] == "constant"


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("E = 29\nnonsense = 1\n")
    with pytest.raises(ParseError) as exc:
        read_config(cfg, ["E"])
    assert exc.value.line == 2


def test_preprocess_drops_constant_column(tmp_path):
    rng = np.random.default_rng(0)
    X = np.c_[rng.standard_normal((12, 2)), np.full(12, 3.0)]
    hio.write_csv(Ensemble.from_matrix(X, ["a", "b", "c"], Role.TRUSTED), tmp_path / "t.csv")
    hio.write_csv(Ensemble.from_matrix(X[:4] + 1, ["a", "b", "c"], Role.TEST),
                  tmp_path / "s.csv")
    out = tmp_path / "pp"
    assert main(["preprocess", "--trusted", str(tmp_path / "t.csv"),
                 "--test", str(tmp_path / "s.csv"), "--out", str(out)]) == 0
    assert hio.read_csv(out / "trusted.csv").variable_names == ("a", "b")
    assert hio.read_csv(out / "test.csv").variable_names == ("a", "b")
    mask = json.loads((out / "mask.json").read_text())["mask"]
    assert mask["dropped"]["ZeroVariance"] == ["c"]


def test_preprocess_4d_input(tmp_path):
    # 2 variables x 3 times x 1 level x 2 cells per row
    rng = np.random.default_rng(1)
    X = rng.standard_normal((10, 12))
    hio.write_csv(Ensemble.from_matrix(X, [f"c{j}" for j in range(12)], Role.TRUSTED),
                  tmp_path / "raw.csv")
    out = tmp_path / "pp"
    assert main(["preprocess", "--trusted", str(tmp_path / "raw.csv"), "--out", str(out),
                 "--raw-dims", "2,3,1,2", "--var-names", "T,Q", "--all-times", "true",
                 "--corr-threshold", "0.999"]) == 0
    t = hio.read_csv(out / "trusted.csv")
    assert t.variable_names == ("T@0", "T@1", "T@2", "Q@0", "Q@1", "Q@2")


def test_raw_dims_mismatch_exit_3(tmp_path):
    hio.write_csv(Ensemble.from_matrix(np.ones((3, 5)), role=Role.TRUSTED), tmp_path / "r.csv")
    assert main(["preprocess", "--trusted", str(tmp_path / "r.csv"),
                 "--out", str(tmp_path / "o"), "--raw-dims", "2,1,1,2"]) == 3


def test_study_writes_csv_and_sidecar(tmp_path):
    out = tmp_path / "study.csv"
    assert main(["study", "--seed", "3", "--type", "power", "--method", "test2s",
                 "--classifiers", "constant,logistic", "--deltas", "0,3", "--trials", "3",
                 "--B", "19", "--d", "4", "--m", "30", "--n", "10", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("shift,classifier,method")
    assert len(lines) == 5
    assert json.loads(out.with_suffix(".json").read_text())["command"] == "study"

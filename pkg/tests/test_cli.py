import csv
import io
import json
import pathlib
import subprocess
import sys

import pytest

from narain_os import cli
from narain_os.errors import InternalAssertion

MODELS = pathlib.Path(__file__).parent.parent / "models"
R13 = str(MODELS / "ii11_R1.3.model")


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(capsys):
    code, out, _ = run(["model", "validate", R13], capsys)
    assert code == 0
    assert json.loads(out)["positive"] is True


def test_validate_not_even(tmp_path, capsys):
    f = tmp_path / "bad.model"
    f.write_text("gram = 1 0; 0 1\nboost_R = 1\n")
    code, _, err = run(["model", "validate", str(f)], capsys)
    assert code == 2 and "NotEven" in err


def test_corr_vacuum(capsys):
    code, out, _ = run(["corr", "--model", R13, "--insertions", "1", "--points", "0.5"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert (rows[0]["re"], rows[0]["im"]) == ("1.0", "0.0")


def test_corr_closed_vs_truncated(capsys):
    args = ["corr", "--model", R13, "--insertions", "e:1,0;e:-1,0", "--points", "3;1", "--points", "4;1+1j"]
    code, out, _ = run(args + ["--cutoff", "12"], capsys)
    trunc = list(csv.DictReader(io.StringIO(out)))
    code2, out2, _ = run(args + ["--closed-form"], capsys)
    closed = list(csv.DictReader(io.StringIO(out2)))
    assert code == code2 == 0 and len(trunc) == len(closed) == 2
    for t, c in zip(trunc, closed):
        assert abs(float(t["re"]) - float(c["re"])) <= 10 * float(t["error"]) + 1e-12
        assert float(c["error"]) == 0.0


def test_corr_insertion_syntax(capsys):
    args = ["corr", "--model", R13, "--insertions", "jl:0;herm:1,0;jr:0;herm:1,0:1", "--points",
            "1;0.5j;-0.7;0.2+0.9j", "--closed-form"]
    code, out, _ = run(args, capsys)
    assert code == 0
    code, _, err = run(["corr", "--model", R13, "--insertions", "x:1", "--points", "1", "--closed-form"], capsys)
    assert code == 2 and "bad insertion" in err


def test_check_single_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["check", "symmetry", "--model", R13, "--seed", "4", "--out", str(out1)], capsys)[0] == 0
    assert run(["check", "symmetry", "--model", R13, "--seed", "4", "--out", str(out2)], capsys)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = json.loads(out1.read_text())
    assert data["schema"] == 1 and data["all_pass"]
    rep = data["reports"][0]
    assert set(rep) >= {"check", "params", "metrics", "tolerance", "verdict"}
    assert (tmp_path / "a.csv").exists() and (tmp_path / "a.meta.json").exists()
    assert "timestamp" in json.loads((tmp_path / "a.meta.json").read_text())


def test_check_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, stdout, _ = run(["check", "unitarity", "--model", str(MODELS / "ii11_indefinite.model"),
                           "--cutoff", "2", "--out", str(out)], capsys)
    assert code == 1 and "FAIL" in stdout
    assert not json.loads(out.read_text())["all_pass"]


def test_tolerance_override(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["check", "inversion_identity", "--model", R13, "--out", str(out),
                      "--tol", "inversion=-1"], capsys)
    assert code == 1
    assert json.loads(out.read_text())["run"]["tolerances"]["inversion"] == -1
    code, _, err = run(["check", "inversion_identity", "--model", R13, "--out", str(out),
                        "--tol", "nonsense=1"], capsys)
    assert code == 2 and "bad --tol" in err


def test_unknown_check(tmp_path, capsys):
    code, _, err = run(["check", "nope", "--model", R13, "--out", str(tmp_path / "r.json")], capsys)
    assert code == 2


def test_bad_model_in_check(tmp_path, capsys):
    f = tmp_path / "bad.model"
    f.write_text("gram = 0 1; 1 0\n")
    code, _, _ = run(["check", "symmetry", "--model", str(f), "--out", str(tmp_path / "r.json")], capsys)
    assert code == 2


def test_internal_assertion_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise InternalAssertion("forced")

    monkeypatch.setattr(cli, "run_check", boom)
    code, _, err = run(["check", "symmetry", "--model", R13, "--out", str(tmp_path / "r.json")], capsys)
    assert code == 3 and "forced" in err


def test_report_and_basis(tmp_path, capsys):
    out = tmp_path / "r.json"
    run(["check", "spectral_density", "--model", R13, "--out", str(out)], capsys)
    code, text, _ = run(["report", str(out)], capsys)
    assert code == 0 and "PASS" in text
    code, text, _ = run(["basis", "dump", "--model", R13, "--cutoff", "1"], capsys)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and rows[0]["charge"] == "0 0" and rows[0]["dim"] == "1"


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "narain_os.cli", "corr", "--model", R13, "--insertions", "1",
                          "--points", "0.5", "--closed-form"], capture_output=True, text=True)
    assert res.returncode == 0 and "1.0,0.0" in res.stdout


@pytest.mark.slow
def test_check_all_bundled_model(tmp_path, capsys):
    out = tmp_path / "all.json"
    code, stdout, _ = run(["check", "all", "--model", R13, "--out", str(out), "--jobs", "2"], capsys)
    data = json.loads(out.read_text())
    assert code == 0
    assert sum(r["verdict"] for r in data["reports"]) >= 7
    assert [r["check"] for r in data["reports"]] == sorted(r["check"] for r in data["reports"])

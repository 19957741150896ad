import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from loopblocks.cli import Report, RunConfig, emit_report, main, parse_angle, run
from loopblocks.correlator import Angle


def call(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_angle_exact_forms():
    assert parse_angle("pi") == Angle.pi(1)
    assert parse_angle("-pi") == Angle.pi(-1)
    assert parse_angle("pi/2") == Angle.pi(Fraction(1, 2))
    assert parse_angle("2pi/3") == Angle.pi(Fraction(2, 3))
    assert parse_angle("2*pi/3") == Angle.pi(Fraction(2, 3))
    assert parse_angle("0") == Angle.pi(0)
    assert parse_angle("0.7").pi_multiple is None


def test_dims_example(capsys):
    code, out, _ = call(["dims", "--lambda", "1/2", "--beta1", "pi", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert rows[0]["value"] == "1" and rows[0]["label"].startswith("c ")
    assert Fraction(rows[1]["value"]) == Fraction(1, 10)


def test_decompose_t_csv_example(capsys):
    code, out, _ = call(["decompose", "--channel", "t", "--lambda", "1/2", "--beta1", "pi", "--beta2", "-pi",
                         "--kmax", "7", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == "k,dimension,value,residual,label"
    assert [r["k"] for r in rows] == [str(k) for k in range(8)]
    assert Fraction(rows[4]["value"]) == Fraction(1, 20625)
    assert [r["label"] for r in rows][:5] == ["identity", "absent", "Y", "e(3)", "e(4)"]


def test_verify_vanishing_exit_zero(capsys):
    code, out, _ = call(["verify", "--suite", "vanishing", "--lambda-grid", "1/10,3/10,1/2", "--kmax", "7"], capsys)
    assert code == 0 and "FAIL" not in out


def test_verify_failure_exit_one(capsys, monkeypatch):
    import loopblocks.decomposer as dec
    monkeypatch.setattr(dec, "VANISHING_K", (1, 2, 3, 4, 5, 7))
    code, out, _ = call(["verify", "--suite", "vanishing", "--lambda", "1/10"], capsys)
    assert code == 1 and "D_k vanishing" in out


@pytest.mark.parametrize("suite", ["ope", "oracle", "mu"])
def test_verify_suites(capsys, suite):
    code, out, _ = call(["verify", "--suite", suite, "--lambda", "1/2", "--format", "csv"], capsys)
    assert code == 0, out


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as err:
        main(["verify", "--suite", "nope"])
    assert err.value.code == 2
    code, _, errtext = call(["dims", "--lambda", "abc"], capsys)
    assert code == 2 and "usage error" in errtext
    code, _, _ = call(["dims", "--lambda", "1/2", "--precision", "10"], capsys)
    assert code == 2
    code, _, _ = call(["expand", "--beta1", "pi"], capsys)
    assert code == 2


def test_json_schema_and_determinism(capsys):
    args = ["decompose", "--channel", "s", "--lambda", "3/10", "--beta1", "1", "--beta2", "0.7",
            "--kmax", "4", "--format", "json"]
    _, a, _ = call(args, capsys)
    _, b, _ = call(args, capsys)
    assert a == b
    doc = json.loads(a)
    assert set(doc["meta"]) == {"version", "precision", "order", "params"}
    assert set(doc["entries"][0]) == {"k", "dimension", "value", "residual", "label"}


def test_parallel_output_identical(capsys):
    base = ["verify", "--suite", "vanishing", "--lambda-grid", "1/10,3/10", "--format", "csv"]
    _, a, _ = call(base, capsys)
    _, b, _ = call(base + ["--jobs", "2"], capsys)
    assert a == b


def test_empty_report_json():
    doc = json.loads(emit_report(Report({"version": "x"}), "json", 20))
    assert doc["entries"] == []


def test_config_roundtrip_and_override(tmp_path, capsys):
    cfg = RunConfig("decompose", lam="1/2", beta1="pi", beta2="-pi", kmax=4, format="csv")
    assert RunConfig.from_json(cfg.to_json()) == cfg
    path = tmp_path / "run.json"
    path.write_text(cfg.to_json())
    code, out, _ = call(["decompose", "--config", str(path), "--kmax", "5"], capsys)
    assert code == 0
    assert out.splitlines()[-1].startswith("5,")


def test_precision_env(monkeypatch, capsys):
    monkeypatch.setenv("LOOPBLOCKS_PRECISION", "40")
    _, out, _ = call(["expand", "--lambda", "1/2", "--beta1", "pi", "--beta2", "-pi", "--channel", "s",
                      "--order", "1", "--format", "json"], capsys)
    assert json.loads(out)["meta"]["precision"] == 40


def test_output_file(tmp_path):
    out = tmp_path / "r.csv"
    code = run(RunConfig("rational-fit", kmax=4, beta1="pi", beta2="-pi", format="csv", output=str(out)))
    assert code == 0
    assert "18*lambda**2/(6875*(5*lambda + 11))" in out.read_text()


def test_bubble_command(capsys):
    code, out, _ = call(["bubble", "--point", "0.5,1", "--x", "-1", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and abs(float(rows[1]["value"]) - 0.08) < 1e-8


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "loopblocks.cli", "dims", "--lambda", "1/2", "--beta1", "pi"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "Delta_beta1" in res.stdout

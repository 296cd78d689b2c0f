import csv
import io
import json
import subprocess
import sys

import pytest

from smoothent import bounds, cli
from smoothent.dist import product_joint
from smoothent.smoothing import brute_force_smooth
from smoothent.tightness import family


@pytest.fixture
def family3(tmp_path):
    path = tmp_path / "family3.json"
    path.write_text(json.dumps(family(3).distribution.to_json()))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_entropy_example(capsys, family3):
    code, out, _ = run(capsys, "entropy", "--dist", family3, "--n", "4", "--epsilon", "0.01")
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "entropy"
    (row,) = doc["results"]
    hmin, hmax = brute_force_smooth(product_joint([family(3).distribution] * 4), 0.01)
    assert row["hmin"] == pytest.approx(hmin.value, abs=1e-9)
    assert row["hmax"] == pytest.approx(hmax.value, abs=1e-12)
    assert row["hmax_witness"]["support"] == hmax.witness["support"]
    assert row["entropy"] == pytest.approx(6.0)
    assert row["hmax_method"] == "exact"


def test_conditional_entropy_uses_brute_force(capsys, tmp_path):
    path = tmp_path / "bsc.json"
    path.write_text(json.dumps({"x_size": 2, "y_size": 2, "p": [[0.4, 0.1], [0.1, 0.4]]}))
    code, out, _ = run(capsys, "entropy", "--dist", str(path), "--n", "1,2", "--epsilon", "0,0.2")
    assert code == 0
    rows = json.loads(out)["results"]
    assert len(rows) == 4 and {r["hmax_method"] for r in rows} == {"exact"}


def test_tightness_example(capsys):
    code, out, _ = run(capsys, "tightness", "--alphabet", "3", "--n", "1200", "--delta", "0.00208")
    assert code == 0
    rows = json.loads(out)["results"]
    checks = {r["check"]: r for r in rows}
    assert set(checks) == {"tail_upper", "tail_lower", "hmax_rate", "hmin_rate"}
    assert all(r["holds"] for r in rows)
    assert checks["hmax_rate"]["epsilon"] == pytest.approx(2.0 ** (-48 * 1200 * 0.00208**2 / 1) / 880)


def test_bounds_example(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "1000", "--delta", "0.1", "--alphabet", "2")
    assert code == 0
    (row,) = json.loads(out)["results"]
    assert row["epsilon"] == pytest.approx(bounds.epsilon_of_delta(1000, 0.1, 2), rel=1e-15)
    assert row["epsilon"] == pytest.approx(0.525801, abs=1e-6)


def test_bounds_with_distribution(capsys, family3):
    code, out, _ = run(capsys, "bounds", "--dist", family3, "--n", "10,40", "--delta", "0.05:0.5:3")
    assert code == 0
    rows = json.loads(out)["results"]
    assert len(rows) == 6
    for r in rows:
        assert r["exact_tail_upper"] <= r["chernoff_upper"] + 1e-12 <= r["epsilon"] + 2e-12


def test_tail_exact_and_mc(capsys, family3):
    code, out, _ = run(capsys, "tail", "--dist", family3, "--n", "64", "--delta", "0.1")
    exact = {r["side"]: r["exact"] for r in json.loads(out)["results"]}
    code, out, _ = run(capsys, "tail", "--dist", family3, "--n", "64", "--delta", "0.1",
                       "--trials", "20000", "--master-seed", "4")
    assert code == 0
    for r in json.loads(out)["results"]:
        assert r["ci_lo"] <= exact[r["side"]] <= r["ci_hi"]


def test_codec_and_extract(capsys):
    code, out, _ = run(capsys, "codec", "--alphabet", "3", "--epsilon", "0.5", "--epsilon-prime", "0.3")
    assert code == 0
    (row,) = json.loads(out)["results"]
    assert row["codec_length"] == 1 and row["codec_error"] == 0.25 and row["compression_holds"]
    code, out, _ = run(capsys, "extract", "--alphabet", "3", "--epsilon", "0.5", "--epsilon-prime", "0.3")
    assert code == 0
    assert json.loads(out)["results"][0]["extract_status"] in ("found", "skipped", "inconclusive")


def test_appendix_summary(capsys):
    code, out, _ = run(capsys, "appendix")
    assert code == 0
    rows = {r["check"]: r for r in json.loads(out)["results"]}
    assert rows["kl_quadratic"]["failures"] > 0 and rows["kl_quadratic"]["known_failure"]
    assert all(r["failures"] == 0 for name, r in rows.items() if name not in cli.KNOWN_FAILURES)


def test_violation_exits_two(capsys, monkeypatch):
    row = bounds.CheckRow("rt_monotone", "t=0.5;z=2", 1.0, 0.0, False)
    monkeypatch.setattr(bounds, "check_rt_monotone", lambda: [row])
    code, out, err = run(capsys, "appendix")
    assert code == 2
    assert "violation" in err and "rt_monotone" in err
    assert json.loads(out)["results"][0]["failures"] == 1


def test_tightness_violation_exits_two(capsys, monkeypatch):
    monkeypatch.setattr(cli.tightness, "tail_lower_bound", lambda *a: 1.0)
    code, _, err = run(capsys, "tightness", "--alphabet", "3", "--n", "100", "--delta", "0.05")
    assert code == 2 and "tail_upper" in err


@pytest.mark.parametrize("argv", [
    ["entropy"],
    ["entropy", "--dist", "/nonexistent.json"],
    ["tightness", "--alphabet", "2", "--n", "100", "--delta", "0.01"],
    ["tightness", "--alphabet", "3", "--n", "5", "--delta", "0.01"],
    ["entropy", "--alphabet", "3", "--epsilon", "1.5"],
    ["codec", "--alphabet", "3", "--epsilon", "0.1", "--epsilon-prime", "0.2"],
])
def test_input_errors_exit_one(capsys, argv):
    assert cli.main(argv) == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["nosuch"],
    ["bounds", "--n", "abc", "--alphabet", "2"],
    ["bounds", "--n", "1:5", "--alphabet", "2"],
])
def test_parser_errors_exit_one(argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 1


def test_bad_json_exits_one(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["entropy", "--dist", str(path)]) == 1
    path.write_text(json.dumps({"x_size": 2, "y_size": 1, "p": [[0.7], [0.7]]}))
    assert cli.main(["entropy", "--dist", str(path)]) == 1


def test_parse_grid():
    assert cli.parse_grid("0.1, 0.2") == [0.1, 0.2]
    assert cli.parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("1/12") == [1 / 12]
    assert cli.parse_grid("12,50,12", int) == [12, 50]
    assert cli.parse_grid("1:4:4", int) == [1, 2, 3, 4]
    for bad in ("", "a", "1:2", "0:1:0"):
        with pytest.raises(cli.InputError):
            cli.parse_grid(bad)
    with pytest.raises(cli.InputError):
        cli.parse_grid("1.5", int)


def test_sweep_csv_columns(capsys):
    code, out, _ = run(capsys, "sweep", "--alphabet", "3,5", "--n", "12,100", "--delta", "0:0.08:3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0])[:7] == ["alphabet", "n", "delta", "epsilon", "exact", "bound", "holds"]
    assert len(rows) == 2 * 2 * 3 * 2


def test_sweep_mc_columns(capsys, family3):
    code, out, _ = run(capsys, "sweep", "--what", "mc", "--dist", family3, "--n", "16",
                       "--delta", "0.1", "--trials", "500")
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header == ["n", "delta", "side", "trials", "hits", "estimate", "ci_lo", "ci_hi"]


def test_appendix_detail_csv(capsys):
    code, out, _ = run(capsys, "appendix", "--detail", "--format", "csv")
    assert code == 0
    reader = csv.DictReader(io.StringIO(out))
    assert reader.fieldnames == ["check", "params", "lhs", "rhs", "holds"]
    hit = [r for r in reader if r["check"] == "kl_quadratic" and r["params"] == "p=0.5;eps=0.25"]
    assert hit and hit[0]["holds"] == "False"


def test_out_file_and_byte_stability(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["extract", "--alphabet", "5", "--epsilon", "0.5", "--epsilon-prime", "0.0", "--master-seed", "9"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point(tmp_path):
    argv = [sys.executable, "-m", "smoothent.cli", "tail", "--alphabet", "3", "--n", "30",
            "--delta", "0.1", "--trials", "3000", "--master-seed", "1", "--format", "csv"]
    env_one = {"SMOOTHENT_THREADS": "1", "PATH": ""}
    one = subprocess.run(argv, capture_output=True, env=env_one, check=True).stdout
    many = subprocess.run(argv, capture_output=True, env={"SMOOTHENT_THREADS": "8", "PATH": ""}, check=True).stdout
    assert one == many and one.startswith(b"n,delta,side,")

import json

import pytest

from symstri.cli import EXIT_DOMAIN, EXIT_PRECISION, main
from symstri.tables import csv_body


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_space_list(capsys):
    code, out, _ = run(["space", "list"], capsys)
    assert code == 0 and "S3×S3" in out


def test_unknown_space(capsys):
    code, _, err = run(["space", "info", "--space", "Q9"], capsys)
    assert code == EXIT_DOMAIN and "Q9" in err


def test_metadata_line_and_columns(capsys):
    code, out, _ = run(["farey", "dissect", "--order", "3"], capsys)
    lines = out.splitlines()
    assert code == 0
    assert lines[0].startswith("# schema=1 ")
    meta = json.loads(lines[0].split(" ", 2)[2])
    assert meta["order"] == 3
    assert lines[1] == "a,q,left_num,left_den,right_num,right_den"
    assert lines[3] == "1,3,1,4,2,5"
    assert len(lines) == 7


def test_spherical_eval_reference(capsys):
    code, out, _ = run(["spherical", "eval", "--space", "SU2", "--lam", "4", "--grid", "9"], capsys)
    rows = out.splitlines()[2:]
    assert code == 0 and len(rows) == 9
    assert max(float(r.split(",")[-1]) for r in rows) < 1e-12


def test_support_check(capsys):
    code, out, _ = run(["support", "check", "--space", "S2", "--lam", "3", "--mu", "2"], capsys)
    assert code == 0
    assert out.splitlines()[1] == "lambda_coords,mu_coords,nu,norm,detected,predicted"


def test_precision_refusal(capsys):
    code, _, err = run(["kernel", "scan", "--space", "T1", "--N", "8", "--t-samples", "4"], capsys)
    assert code == EXIT_PRECISION
    assert "required t_samples: 512" in err


def test_kernel_scan_header(tmp_path, capsys):
    out = tmp_path / "k.csv"
    summ = tmp_path / "k.json"
    code, _, _ = run(["kernel", "scan", "--space", "T1", "--N", "8", "--out", str(out), "--summary", str(summ)], capsys)
    assert code == 0
    assert out.read_text().splitlines()[1] == "t,a,q,L,sup_mod,rhs,ratio"
    assert json.loads(summ.read_text())["C_of_N"] > 0


def test_farey_spectrum(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, stdout, _ = run(["farey", "spectrum", "--N", "8", "--Q", "1", "--L", "8", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "n,coeff_mod,bound"
    assert len(lines) == 2 + 64 * 64 + 1
    # a single inner cell of length 2/(NL): sup = mass, normalized value 2
    assert json.loads(stdout)["normalized"] == pytest.approx(2.0)


def test_count_commands(tmp_path, capsys):
    code, out, _ = run(["count", "reps", "--form", "I2", "--max-n", "5"], capsys)
    assert code == 0 and out.splitlines()[2:] == ["0,1", "1,4", "2,4", "3,0", "4,4", "5,8"]
    form = tmp_path / "form.json"
    form.write_text(json.dumps({"matrix": [[2, 1], [1, 2]]}))
    code, out, _ = run(["count", "reps", "--form", str(form), "--max-n", "2"], capsys)
    assert code == 0 and out.splitlines()[-1] == "2,6"
    code, out, _ = run(["count", "fit", "--form", "I4", "--max-n", "256"], capsys)
    assert code == 0 and json.loads(out)["slope"] > 0
    code, out, _ = run(["count", "pairs", "--space", "T2", "--center", "6,6", "--side", "4", "--N2", "4", "--n", "41"], capsys)
    assert code == 0 and "count" in json.loads(out)


def test_bad_form(tmp_path, capsys):
    form = tmp_path / "form.json"
    form.write_text(json.dumps({"matrix": [[1, 2], [2, 1]]}))
    code, _, _ = run(["count", "reps", "--form", str(form), "--max-n", "2"], capsys)
    assert code == EXIT_DOMAIN


def test_scan_determinism(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["stri", "scan", "--space", "S2", "--p", "10", "--N-list", "2,4", "--trials", "2", "--out", str(p)]) == 0
    capsys.readouterr()
    a, b = (csv_body(p.read_text()) for p in paths)
    assert a == b and a.count("\n") == 1 + 6


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("SYMSTRI_THREADS", "2")
    code, out, _ = run(["count", "reps", "--form", "I3", "--max-n", "3"], capsys)
    assert code == 0 and out.splitlines()[-1] == "3,8"

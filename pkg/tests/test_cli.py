import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from fgmx.cli import main


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def as_json(out):
    return json.loads(out)


def test_validate_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, "ok.json", {"family": "fgm", "params": {"theta": 0.5}})
    code, out = run(capsys, "validate", ok)
    assert code == 0 and as_json(out)["verdict"] is True
    bad = write(tmp_path, "bad.json", {"family": "fgm", "params": {"theta": 1.2}})
    code, out = run(capsys, "validate", bad, "--grid", "256")
    rep = as_json(out)
    assert code == 1 and rep["cond_c"]["pass"] is False and rep["cond_c"]["witness"]
    broken = write(tmp_path, "broken.json", '{"family": "fgm",')
    code, out = run(capsys, "validate", broken)
    assert code == 2 and "JSON" in as_json(out)["error"]


def test_schema_errors(tmp_path, capsys):
    for doc in ({"family": "clayton"}, {"theta": {"kind": "expr"}, "phi": {"kind": "expr", "expr": "t"}},
                {"family": "fgm", "extra": 1}):
        code, out = run(capsys, "measures", write(tmp_path, "s.json", doc))
        assert code == 2 and "schema" in as_json(out)["error"]


def test_measures(tmp_path, capsys):
    code, out = run(capsys, "measures", write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.5}}))
    m = as_json(out)
    assert code == 0 and m["rho"] == pytest.approx(3 / 7, abs=1e-8) and m["lambda_upper"] == 0.5
    code, out = run(capsys, "measures", write(tmp_path, "b.json", {"family": "b11", "params": {"sigma": 0.3}}))
    m = as_json(out)
    for key in ("rho", "lambda_upper", "beta", "diagonal_mass"):
        assert m[key] == pytest.approx(0.3, abs=1e-9)
    inv_t = {"label": "inv-t", "theta": {"kind": "expr", "expr": "1/t"},
              "phi": {"kind": "named", "name": "parabola"}}
    code, out = run(capsys, "measures", write(tmp_path, "r.json", inv_t))
    assert code == 0 and as_json(out)["rho"] == pytest.approx(0.6, abs=1e-8)


def test_measures_on_invalid_custom_spec(tmp_path, capsys):
    doc = {"theta": {"kind": "expr", "expr": "1.1/t"}, "phi": {"kind": "expr", "expr": "t*(1-t)"}}
    code, out = run(capsys, "measures", write(tmp_path, "x.json", doc))
    assert code == 1 and as_json(out)["report"]["verdict"] is False


def test_measures_respects_env_tolerance(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FGMX_QUAD_TOL", "1e-6")
    code, out = run(capsys, "measures", write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.5}}))
    assert code == 0 and as_json(out)["rho"] == pytest.approx(3 / 7, abs=1e-5)


def test_depcheck(tmp_path, capsys):
    code, out = run(capsys, "depcheck", write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.5}}))
    rep = as_json(out)
    assert code == 0 and all(rep[k]["verdict"] == "pass" for k in ("pqd", "ltd", "rti", "lcsd", "rcsi"))
    code, out = run(capsys, "depcheck", write(tmp_path, "f.json", {"family": "fgm", "params": {"theta": -0.5}}))
    assert code == 0 and as_json(out)["pqd"]["verdict"] == "fail"


def test_sample_determinism(tmp_path, capsys):
    spec = write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.5}})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sample", spec, "--n", "1000", "--seed", "7", "--out", str(a))[0] == 0
    assert run(capsys, "sample", spec, "--n", "1000", "--seed", "7", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "u,v" and len(rows) == 1001


def test_sample_atom_rate(tmp_path, capsys):
    spec = write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.5}})
    out_csv = tmp_path / "big.csv"
    run(capsys, "sample", spec, "--n", "200000", "--seed", "1", "--out", str(out_csv))
    data = np.loadtxt(out_csv, delimiter=",", skiprows=1)
    assert abs(np.mean(data[:, 0] == data[:, 1]) - 1 / 3) < 0.01


def test_sample_margins(tmp_path, capsys):
    spec = write(tmp_path, "b.json", {"family": "b11", "params": {"sigma": 0.5}})
    code, out = run(capsys, "sample", spec, "--n", "20", "--margin-x", "-ln(1-t)", "--margin-y", "t^2")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["u", "v", "x", "y"]
    u, x = float(rows[1][0]), float(rows[1][2])
    assert x == pytest.approx(-np.log1p(-u))
    code, out = run(capsys, "sample", spec, "--n", "20", "--margin-x", "t^^2")
    err = as_json(out)
    assert code == 2 and err["offset"] == 2
    code, out = run(capsys, "sample", spec, "--n", "20", "--margin-x", "1-t")
    assert code == 2 and "monotone" in as_json(out)["error"]


def test_family_commands(capsys):
    code, out = run(capsys, "family", "list")
    assert code == 0 and len(as_json(out)["families"]) == 8
    code, out = run(capsys, "family", "show", "gpd")
    assert code == 0 and as_json(out)["family"] == "gpd"
    code, out = run(capsys, "family", "from-rho-lambda", "0.3", "0.3")
    res = as_json(out)
    assert code == 0 and res["family"] == "gpd"
    assert res["alpha"] == pytest.approx(1.0) and res["sigma"] == pytest.approx(0.3)
    code, out = run(capsys, "family", "from-rho-lambda", "0.3", "0.5")
    assert code == 1 and "4*rho/3" in as_json(out)["error"]
    assert run(capsys, "family", "from-rho-lambda", "x", "0.5")[0] == 2
    assert run(capsys, "family", "show")[0] == 2


def test_fit(tmp_path, capsys):
    spec = write(tmp_path, "b.json", {"family": "b11", "params": {"sigma": 0.5}})
    data = tmp_path / "d.csv"
    run(capsys, "sample", spec, "--n", "5000", "--seed", "17", "--out", str(data))
    code, out = run(capsys, "fit", str(data), "--family", "b11")
    res = as_json(out)
    assert code == 0 and 0.45 <= res["sigma"] <= 0.55 and res["n"] == 5000
    strong = write(tmp_path, "ca.json", {"family": "ca", "params": {"alpha": 0.9}})
    data2 = tmp_path / "e.csv"
    run(capsys, "sample", strong, "--n", "2000", "--seed", "3", "--out", str(data2))
    code, out = run(capsys, "fit", str(data2), "--family", "fgm")
    assert code == 1 and "attainable range" in as_json(out)["error"]
    tiny = tmp_path / "t.csv"
    tiny.write_text("x,y\n0.1,0.2\n0.3,0.4\n")
    assert run(capsys, "fit", str(tiny), "--family", "ca")[0] == 2


def test_table(capsys):
    code, out = run(capsys, "table", "--family", "ca", "--param-range", "0.1:0.9:9")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9
    for r in rows:
        a = float(r["alpha"])
        assert float(r["rho"]) == pytest.approx(3 * a / (4 - a), abs=1e-8)
        assert float(r["lambda"]) == pytest.approx(a, abs=1e-12)
    code, out = run(capsys, "table", "--family", "b11", "--param-range", "0.7:0.7:1")
    row = next(csv.DictReader(io.StringIO(out)))
    assert all(float(v) == pytest.approx(0.7, abs=1e-9) for v in row.values())
    code, out = run(capsys, "table", "--family", "gpd", "--param-range", "0.2:1:3",
                    "--fixed", "sigma=1", "--columns", "rho")
    assert code == 0 and out.splitlines()[0] == "alpha,rho"
    assert run(capsys, "table", "--family", "ca", "--param-range", "0.1:0.9:0")[0] == 2
    assert run(capsys, "table", "--family", "ca", "--param-range", "0.1:0.9")[0] == 2
    assert run(capsys, "table", "--family", "ca", "--param-range", "0.1:0.9:3",
               "--columns", "tau")[0] == 2


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["nonsense"]) == 2
    capsys.readouterr()


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fgmx.cli", "family", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "durante-f" in proc.stdout

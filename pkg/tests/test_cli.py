import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tdtunnel.cli import CSV_COLUMNS, fmt, main, parse_values


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    rows = list(csv.reader(body))
    return header, rows[0], rows[1:]


def test_evolve_barrier_exit(tmp_path):
    out = tmp_path / "exit.csv"
    assert main(["evolve", "--x0", "5", "--tmin", "0.05", "--tmax", "60", "--nt", "1200",
                 "--out", str(out), "--deterministic"]) == 0
    header, cols, rows = read_csv(out)
    assert tuple(cols) == CSV_COLUMNS
    assert len(rows) == 1200
    assert any(h.startswith("# V0 = 0.3") for h in header)
    assert "# normalize = True" in header
    data = np.array([[float(v) for v in r] for r in rows])
    assert data[np.argmax(data[:, 1]), 0] == pytest.approx(5.4, abs=0.2)
    assert np.allclose(data[:, 1], data[:, 2] + data[:, 3] + data[:, 4], atol=1e-12)


def test_evolve_deterministic_bytes(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    args = ["evolve", "--x0", "50", "--tmax", "100", "--nt", "50", "--deterministic"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(args[:-1] + ["--out", str(c)]) == 0
    assert any(l.startswith("# generated") for l in c.read_text().splitlines())


def test_number_format_round_trips():
    for x in (0.1, 1 / 3, 5.4e-300, -2.0653381389747048, 123456789.123456789):
        assert float(fmt(x)) == x
    assert fmt(True) == "1" and fmt(np.int64(3)) == "3"


def test_raw_flag_and_json(tmp_path, capsys):
    out = tmp_path / "raw.json"
    assert main(["evolve", "--x0", "50", "--tmax", "60", "--nt", "5", "--raw", "--format",
                 "json", "--out", str(out), "--deterministic"]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["config"]["normalize"] is False
    assert len(doc["rows"]) == 5 and set(doc["rows"][0]) == set(CSV_COLUMNS)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nL = 3.0\nV0 = 0.2\nnt = 7\n")
    out = tmp_path / "o.csv"
    assert main(["evolve", "--config", str(cfg), "--V0", "0.25", "--tmax", "30",
                 "--out", str(out), "--deterministic"]) == 0
    header, _, rows = read_csv(out)
    assert "# L = 3.0" in header and "# V0 = 0.25" in header and len(rows) == 7
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["evolve", "--config", str(bad)]) != 0


def test_invalid_input_exit_code(capsys):
    assert main(["evolve", "--L", "-1"]) != 0
    assert "error" in capsys.readouterr().err
    assert main(["evolve", "--x0", "1.0"]) != 0  # inside the barrier
    assert main(["evolve", "--tmin", "5", "--tmax", "1"]) != 0


def test_poles_json(tmp_path):
    out = tmp_path / "poles.json"
    assert main(["poles", "--npoles", "30", "--out", str(out), "--deterministic"]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1
    recs = doc["poles"]
    assert len(recs) == 30
    assert set(recs[0]) == {"n", "re_k", "im_k", "eps_eV", "gamma_eV", "re_u0", "im_u0", "re_uL", "im_uL"}
    re_k = [r["re_k"] for r in recs]
    assert re_k == sorted(re_k) and all(r["im_k"] < 0 for r in recs)
    assert recs[0]["eps_eV"] > 0.3


def test_delay(tmp_path):
    out = tmp_path / "d.json"
    assert main(["delay", "--out", str(out), "--deterministic"]) == 0
    doc = json.loads(out.read_text())
    assert doc["t_phi"] < 0 and doc["alpha"] == pytest.approx(3.63, abs=0.01) and doc["above_critical"]
    assert main(["delay", "--L", "0.5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["t_phi"] > 0
    assert main(["delay", "--alpha", "2.0653381389747048", "--u", "1e12", "--out", str(out)]) == 0
    assert abs(json.loads(out.read_text())["t_phi_over_t0"]) < 1e-5
    assert main(["delay", "--alpha", "2.0"]) != 0


def test_critical_opacity(capsys):
    assert main(["critical-opacity", "-v"]) == 0
    text = capsys.readouterr().out
    alpha = float(text.split("alpha_c = ")[1].split()[0])
    resid = float(text.split("residual = ")[1].split()[0])
    assert alpha == pytest.approx(2.0653, abs=5e-4) and abs(resid) < 1e-12
    assert "bracket" in text


def test_scan_csv_and_status(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["scan", "--axis", "L", "--values", "15:25:5", "--observable", "tau_H",
                 "--out", str(out), "--deterministic"]) == 0
    header, cols, rows = read_csv(out)
    assert cols[:3] == ["index", "L", "status"] and "tau_H" in cols
    assert [r[1] for r in rows] == ["15", "20", "25"]
    assert main(["scan", "--axis", "L", "--values", "5,-1", "--observable", "t_phi",
                 "--out", str(out)]) == 1
    _, cols, rows = read_csv(out)
    assert rows[1][2] == "error" and "ParameterError" in rows[1][-1]


def test_parse_values():
    assert np.allclose(parse_values("0.5:2:0.5"), [0.5, 1.0, 1.5, 2.0])
    assert np.allclose(parse_values("1,2,3"), [1, 2, 3])


def test_point_commands(tmp_path):
    out = tmp_path / "p.json"
    assert main(["tp", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["t_peak"] == pytest.approx(5.4, abs=0.2)
    assert main(["forerunner", "--L", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["classification"] == "absent"


def test_selftest_and_module_entry():
    proc = subprocess.run([sys.executable, "-m", "tdtunnel", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 4

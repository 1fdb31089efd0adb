import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from uniqcert.cli import exit_status, main
from uniqcert.report import dumps, make_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(tmp_path, name="cfg.json", nodes=7, **changes):
    raw = json.loads((CONFIGS / "example_paper.json").read_text())
    raw["domain"]["nodes"] = [nodes] * 3
    for key, value in changes.items():
        raw[key] = value
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


def run_cli(*args):
    return main([str(a) for a in args])


def read(path):
    text = Path(path).read_text()
    return text, json.loads(text)


def test_certify_example(tmp_path):
    out = tmp_path / "r.json"
    assert run_cli("certify", "--config", small_config(tmp_path), "--out", out) == 0
    text, rep = read(out)
    assert rep["certificate"]["overall"] in ("PASS", "PASS-SAMPLED")
    assert set(rep) == {"schema", "command", "config_digest", "certificate"}
    assert dumps(json.loads(text)) == text


def test_certify_c40_fails(tmp_path):
    out = tmp_path / "r.json"
    raw = json.loads((CONFIGS / "example_paper_c40.json").read_text())
    raw["domain"]["nodes"] = [7, 7, 7]
    cfg = tmp_path / "c40.json"
    cfg.write_text(json.dumps(raw))
    assert run_cli("certify", "--config", cfg, "--out", out) == 2
    assert read(out)[1]["certificate"]["verdicts"]["N2ii"] == "FAIL"
    # solve is refused without --unsafe and runs with it
    assert run_cli("solve", "--config", cfg, "--out", out) == 2
    assert "solve" not in read(out)[1]
    run_cli("solve", "--config", cfg, "--out", out, "--unsafe")
    assert "solve" in read(out)[1]


def test_solve_manufactured_1d(tmp_path):
    raw = {
        "schema": 1,
        "domain": {"dimension": 1, "lower": [0], "upper": [1], "nodes": [127]},
        "nonlinearity": {"f": "0", "u_range": [-1, 1]},
        "rhs": "sin(3.14159265*x)",
    }
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps(raw))
    out, fields = tmp_path / "r.json", tmp_path / "fields"
    assert run_cli("solve", "--config", cfg, "--out", out, "--fields", fields) == 0
    assert read(out)[1]["solve"]["verdict"] == "converged"
    with open(fields / "u.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["i", "x", "value"]
    assert len(rows) == 127 and [int(r["i"]) for r in rows] == list(range(127))
    h = 1 / 128
    for r in rows:
        x, v = float(r["x"]), float(r["value"])
        assert abs(v - math.sin(math.pi * x) / math.pi**2) <= h**2 / 12 + 1e-8


def test_probe_example(tmp_path):
    out = tmp_path / "r.json"
    assert run_cli("probe", "--config", small_config(tmp_path), "--out", out) == 0
    rep = read(out)[1]
    assert rep["probe"]["verdict"] == "unique-within-tol"
    assert rep["probe"]["starts"] == 10 and rep["probe"]["seed"] == 42
    assert rep["probe"]["certificate_verdict"] == "PASS"


def test_probe_is_byte_reproducible_and_seed_override(tmp_path):
    cfg = small_config(tmp_path, nodes=5)
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    run_cli("probe", "--config", cfg, "--out", a)
    run_cli("probe", "--config", cfg, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    run_cli("probe", "--config", cfg, "--out", c, "--seed", 7)
    ra, rc = read(a)[1], read(c)[1]
    assert rc["probe"]["seed"] == 7 and rc["config_digest"] != ra["config_digest"]


def test_study_command():
    assert run_cli("study", "--config", CONFIGS / "manufactured_1d.json", "--out", "/dev/null") == 0


def test_timings_opt_in(tmp_path):
    out = tmp_path / "r.json"
    run_cli("certify", "--config", small_config(tmp_path, nodes=3), "--out", out, "--timings")
    assert set(read(out)[1]["timings_ms"]) == {"certify"}


def test_stdout_when_no_out(tmp_path, capsys):
    assert run_cli("certify", "--config", small_config(tmp_path, nodes=3)) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["command"] == "certify"


def test_invalid_config_exit_1(tmp_path, capsys):
    cfg = small_config(tmp_path, domain={"dimension": 2, "lower": [1, 1, 1], "upper": [2, 2], "nodes": [5, 5]})
    assert run_cli("certify", "--config", cfg) == 1
    err = capsys.readouterr().err
    assert "config error" in err and "dimension is 2" in err


def test_missing_config_and_unwritable_output(tmp_path):
    assert run_cli("certify", "--config", tmp_path / "nope.json") == 1
    cfg = small_config(tmp_path, nodes=3)
    assert run_cli("certify", "--config", cfg, "--out", tmp_path / "no" / "dir" / "r.json") == 1


@pytest.mark.parametrize(
    "report, status",
    [
        ({"command": "certify", "certificate": {"overall": "PASS"}}, 0),
        ({"command": "certify", "certificate": {"overall": "PASS-SAMPLED"}}, 0),
        ({"command": "certify", "certificate": {"overall": "FAIL"}}, 2),
        ({"command": "solve", "certificate": {"overall": "FAIL"}}, 2),
        ({"command": "solve", "solve": {"verdict": "converged"}}, 0),
        ({"command": "solve", "solve": {"verdict": "monitor-violation"}}, 2),
        ({"command": "solve", "solve": {"verdict": "stalled"}}, 2),
        ({"command": "probe", "probe": {"verdict": "unique-within-tol"}}, 0),
        ({"command": "probe", "probe": {"verdict": "distinct-solutions-found"}}, 2),
        ({"command": "probe", "probe": {"verdict": "inconclusive"}}, 2),
        ({"command": "study", "study": {"verdict": "converged"}}, 0),
    ],
)
def test_exit_status_from_verdicts(report, status):
    assert exit_status(report) == status


def test_report_canonical_form():
    rep = make_report("solve", "ab", solve={"x": 0.1, "z": [1e-300, 2.5], "skip": None}, probe=None)
    text = dumps(rep)
    assert "probe" not in rep and "skip" not in text
    assert text == dumps(json.loads(text))
    assert text.index('"command"') < text.index('"config_digest"') < text.index('"schema"')
    assert "0.1," in text or "0.1\n" in text
    with pytest.raises(ValueError):
        make_report("solve", "ab", solve={"x": float("nan")})


def test_console_entry_point(tmp_path):
    cfg = small_config(tmp_path, nodes=3)
    proc = subprocess.run(
        [sys.executable, "-m", "uniqcert.cli", "certify", "--config", str(cfg)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["certificate"]["overall"] == "PASS"

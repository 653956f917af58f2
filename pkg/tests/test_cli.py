import json
import subprocess
import sys

import pytest

from coflowsim.cli import main

TRACE = "6 3\n1 0 2 0 1 2 2:3 3:1.5\n2 5 1 1 1 3:4\n3 9 1 4 2 2:0.7 5:2\n"


@pytest.fixture
def trace(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text(TRACE)
    return p


def test_validate(trace, capsys):
    assert main(["validate", "--trace", str(trace)]) == 0
    assert "3 coflows, 6 ports" in capsys.readouterr().out


def test_validate_reports_every_bad_line(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("6 3\n1 0 1 9 1 2:1\n2 0 1 1 1 3:1\n3 0 1 1 1 3:-1\n")
    assert main(["validate", "--trace", str(p)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "line 4" in err


def test_run_writes_outputs(trace, tmp_path):
    out = tmp_path / "o"
    audit = tmp_path / "logs" / "audit.tsv"
    assert main(["run", "--trace", str(trace), "--policy", "aalo", "--out", str(out),
                 "--audit-log", str(audit)]) == 0
    rows = (out / "aalo.tsv").read_text().splitlines()
    assert len(rows) == 4
    doc = json.loads((out / "aalo.summary.json").read_text())
    assert doc["policy"] == "aalo" and doc["coflows"] == 3
    assert audit.read_text().strip()
    assert not list(out.glob("*.tmp")) and not list(out.glob("tmp*"))


def test_compare(trace, tmp_path, capsys):
    assert main(["compare", "--trace", str(trace), "--policies", "saath,aalo,uc-tcp",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "speedup-saath-over-aalo.tsv").exists()
    assert (tmp_path / "speedup-saath-over-uc-tcp.tsv").exists()
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert "median" in capsys.readouterr().out
    assert doc


def test_sweep(trace, tmp_path):
    assert main(["sweep", "--trace", str(trace), "--param", "delta", "--values", "4,8",
                 "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "sweep-delta.tsv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2


def test_synth_round_trips_through_validate(tmp_path, capsys):
    p = tmp_path / "s.txt"
    assert main(["synth", "--preset", "contended", "--coflows", "12", "--ports", "20",
                 "--out", str(p)]) == 0
    assert main(["validate", "--trace", str(p)]) == 0
    assert "12 coflows, 20 ports" in capsys.readouterr().out


def test_errors_exit_2(trace, tmp_path, capsys):
    assert main(["run", "--trace", str(trace), "--policy", "nope", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.txt"
    bad.write_text("6 1\n1 0 1 0 1 9:1\n")
    assert main(["run", "--trace", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    dyn = tmp_path / "dyn.txt"
    dyn.write_text("5 FLOW_RESTART 99\n")
    assert main(["run", "--trace", str(trace), "--dynamics", str(dyn), "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["run", "--trace", str(trace), "--K", "x"])


def test_module_entry_point(trace):
    r = subprocess.run([sys.executable, "-m", "coflowsim", "validate", "--trace", str(trace)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "3 coflows" in r.stdout

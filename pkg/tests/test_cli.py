import json
import subprocess
import sys

import pytest

from tictoc.cli import main

SPEC = "pattern = Mix\nfootprint_lines = 4096\naccess_count = 5000\nwrite_fraction = 0.3\nlocality_span = 16\nseed = 1\n"
CONFIG = ("organization = TicToc\ndcd_enabled = true\npdm_enabled = true\nbypass = Bypass90\n"
          "cache_lines = 4096\nmemory_lines = 65536\nl3_lines = 256\nl3_ways = 8\n")


@pytest.fixture
def files(tmp_path):
    (tmp_path / "t.spec").write_text(SPEC)
    (tmp_path / "c.cfg").write_text(CONFIG)
    assert main(["generate", "--spec", str(tmp_path / "t.spec"), "--out", str(tmp_path / "t.trace")]) == 0
    return tmp_path


def test_run_csv(files, capsys):
    assert main(["run", "--config", str(files / "c.cfg"), "--trace", str(files / "t.trace")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("run_id,organization,flags")
    assert out[1].endswith(",PASS")


def test_run_json_to_file(files):
    report = files / "r.json"
    assert main(["run", "--config", str(files / "c.cfg"), "--trace", str(files / "t.trace"),
                 "--report", str(report), "--format", "json"]) == 0
    assert json.loads(report.read_text())[0]["flags"] == "DCD+PDM+Bypass90"


def test_sweep(files, capsys):
    assert main(["sweep", "--config", str(files / "c.cfg"), "--trace", str(files / "t.trace"),
                 "--sizes", "4,8"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_bad_paths(files, capsys):
    assert main(["run", "--config", str(files / "missing.cfg"), "--trace", str(files / "t.trace")]) == 2
    assert main(["generate", "--spec", str(files / "nope"), "--out", str(files / "x")]) == 2
    (files / "bad.cfg").write_text("organization = Nope\n")
    assert main(["run", "--config", str(files / "bad.cfg"), "--trace", str(files / "t.trace")]) == 2
    assert "Nope" in capsys.readouterr().err


def test_bad_arguments():
    with pytest.raises(SystemExit) as e:
        main(["sweep", "--config", "c", "--trace", "t", "--sizes", "x"])
    assert e.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "tictoc", "selftest"], capture_output=True, text=True)
    assert r.returncode == 0

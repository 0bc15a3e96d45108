import shutil
import subprocess
import sys

import pytest

from rgvi.harness.cli import main

CONFIG = """\
[instance]
name = matching_pennies

[method]
scheme = primal
max_iter = 50

[output]
path = mp
"""


def test_list_problems(capsys):
    assert main(["list-problems"]) == 0
    out = capsys.readouterr().out
    assert "bilinear_game" in out and "chained_cubic" in out


def test_run_and_fit(tmp_path, capsys):
    cfg = tmp_path / "mp.cfg"
    cfg.write_text(CONFIG)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "out")]) == 0
    csv = tmp_path / "out" / "mp.csv"
    assert csv.exists()
    assert main(["fit", str(csv), "--column", "certificate", "--window", "5:50"]) == 0
    assert "slope=" in capsys.readouterr().out
    assert main(["fit", str(csv), "--column", "nope", "--window", "5:50"]) == 1


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG.replace("max_iter = 50", "max_iter = lots"))
    assert main(["run", str(bad)]) == 2
    assert "line 6" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    assert main(["fit", "x.csv", "--column", "merit", "--window", "oops"]) == 2
    assert main(["accept", "--only", "99"]) == 2
    assert main([]) == 2


def test_accept_subset(tmp_path):
    report = tmp_path / "r.json"
    assert main(["accept", "--only", "11", "--json", str(report)]) == 0
    assert '"passed": true' in report.read_text()


def test_console_script():
    exe = shutil.which("rgvi")
    cmd = [exe] if exe else [sys.executable, "-m", "rgvi.harness.cli"]
    out = subprocess.run(cmd + ["list-problems"], capture_output=True, text=True, check=True)
    assert "skew_rotation" in out.stdout

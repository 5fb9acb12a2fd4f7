import csv
import hashlib
import json
import subprocess
import sys

import pytest

from agdolinar import cli
from agdolinar.cli import SweepSpec, UsageError, main

FAST = {
    "fig2": ["--n", "1,4,16", "--alpha", "0.25,0.625"],
    "fig3": ["--n", "1,16", "--alpha", "0.5"],
    "fig4": ["--n", "5", "--alpha", "0.3,0.8", "--estimator", "photon"],
    "fig5": ["--n", "4", "--alpha", "0.5,1.0"],
    "fig6": ["--n", "4", "--xc", "0.3,0.9"],
    "mc": ["--alpha", "0.5", "--n", "4", "--trials", "20000", "--slices", "2000"],
    "verify": ["--trials", "20000"],
}


def _read(path):
    lines = path.read_text().splitlines()
    header, body = lines[0], lines[1:]
    cols = header[2:].split(" | ")[0].split(",")
    return cols, list(csv.reader(body))


@pytest.mark.parametrize("command", sorted(FAST))
def test_every_command_writes_data_and_manifest(command, tmp_path):
    assert main([command, "--out", str(tmp_path), *FAST[command]]) == 0
    data = tmp_path / f"{command}.csv"
    manifest = json.loads((tmp_path / f"{command}.manifest.json").read_text())
    cols, rows = _read(data)
    assert rows and all(len(r) == len(cols) for r in rows)
    entry = manifest["outputs"][data.name]
    assert entry["sha256"] == hashlib.sha256(data.read_bytes()).hexdigest()
    assert entry["rows"] == len(rows)
    assert manifest["command"] == command
    assert manifest["tolerances"]["mc_max_slice_probability"] == 0.05
    assert manifest["command_line"][1:] == [command, "--out", str(tmp_path), *FAST[command]]


@pytest.mark.parametrize("command", ["fig2", "mc"])
def test_reruns_are_byte_identical(command, tmp_path):
    for sub in ("a", "b"):
        assert main([command, "--out", str(tmp_path / sub), *FAST[command]]) == 0
    assert (tmp_path / "a" / f"{command}.csv").read_bytes() == (tmp_path / "b" / f"{command}.csv").read_bytes()


def test_fig2_columns_and_ordering(tmp_path):
    main(["fig2", "--out", str(tmp_path), *FAST["fig2"]])
    cols, rows = _read(tmp_path / "fig2.csv")
    assert cols == ["alpha", "n", "Pe_agnostic", "Pe_opt_bound", "Pe_helstrom"]
    for r in rows:
        agn, bound, hel = map(float, r[2:])
        assert agn >= bound >= hel


def test_fig5_labels_the_split_source(tmp_path):
    main(["fig5", "--out", str(tmp_path), "--n", "4,16", "--alpha", "0.5"])
    manifest = json.loads((tmp_path / "fig5.manifest.json").read_text())
    assert "reported" in json.dumps(manifest["derived"]) and "extrapolated" in json.dumps(manifest["derived"])


def test_usage_errors_exit_with_two(tmp_path, capsys):
    assert main(["fig2", "--out", str(tmp_path), "--n", "0"]) == 2
    assert main(["fig3", "--out", str(tmp_path), "--alpha", "x:y:z"]) == 2
    assert main(["mc", "--out", str(tmp_path), "--trials", "0"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fig2", "--bogus"])
    assert exc.value.code == 2
    assert not (tmp_path / "fig2.csv").exists()


def test_failed_verification_exits_with_one(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "verification_checks", lambda trials, seed: [("forced", 1.0, 0.5, False)])
    assert main(["verify", "--out", str(tmp_path)]) == 1
    manifest = json.loads((tmp_path / "verify.manifest.json").read_text())
    assert manifest["checks"] == {"all_passed": False}


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "agdolinar.cli", "fig3", "--out", str(tmp_path), "--n", "4", "--alpha", "0.5"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "fig3.manifest.json").exists()


def test_sweep_parsing():
    assert SweepSpec.parse("alpha", "0.1,0.2").values == (0.1, 0.2)
    assert SweepSpec.parse("alpha", "0:1:3").values == (0.0, 0.5, 1.0)
    assert SweepSpec.parse("n", "1:100:3").values == (1, 10, 100)
    assert SweepSpec.parse("n", "1:4:20").values == (1, 2, 3, 4)
    for var, text in [("alpha", ""), ("alpha", "1:0:3"), ("alpha", "0:1:1"), ("n", "0:10:3"), ("n", "2.5"), ("alpha", "nan")]:
        with pytest.raises(UsageError):
            SweepSpec.parse(var, text)

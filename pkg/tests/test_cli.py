"""Command-line entry point."""
import json
import shutil
import subprocess
import sys

import pytest

from martenscale.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_normals_hex(capsys):
    rc, out, _ = run(capsys, "normals", "--wells", "hex_rhombic")
    doc = json.loads(out)
    assert rc == 0 and doc["count"] == 6 and len(doc["directions"]) == 6
    assert doc["angles_deg"] == pytest.approx([15, 45, 75, 105, 135, 165], abs=1e-10)


def test_normals_oblique(capsys):
    rc, out, _ = run(capsys, "normals", "--wells", "oblique:n=4,a=1.1")
    assert rc == 0 and json.loads(out)["count"] <= 8


def test_dcheck_unit_square(capsys):
    rc, out, _ = run(capsys, "dcheck", "--scenario", "unit_square.json")
    doc = json.loads(out)
    assert rc == 0
    bottom = next(e for e in doc["edges"] if e["edge"] == 0)
    # min_j |e_11^(j)| over the hex-rhombic wells
    assert bottom["d"] == pytest.approx(0.5, abs=1e-12)


def test_sweep_triangle_linear(capsys):
    rc, out, err = run(capsys, "sweep", "--scenario", "compatible_triangle.json")
    assert rc == 0
    assert "verdict: linear" in out
    assert out.splitlines()[0].startswith("eps,elastic_construction")


def test_sweep_writes_files(capsys, tmp_path):
    for fmt in ("csv", "json", "svg"):
        p = tmp_path / f"r.{fmt}"
        rc, _, _ = run(capsys, "sweep", "--scenario", "compatible_triangle", "--eps-count", "6",
                       "--format", fmt, "--out", str(p))
        assert rc == 0 and p.stat().st_size > 0
    assert json.loads((tmp_path / "r.json").read_text())["verdict"] == "linear"
    rc, out, _ = run(capsys, "fit", "--input", str(tmp_path / "r.csv"))
    assert rc == 0 and json.loads(out)["verdict"] == "linear"


def test_seed_is_printed(capsys):
    rc, out, _ = run(capsys, "wells", "--wells", "hex_rhombic", "--seed", "7")
    assert rc == 0 and json.loads(out)["seed"] == 7


def test_flatten(capsys):
    rc, out, _ = run(capsys, "flatten", "--radius", "0.2", "--radius", "0.1")
    rows = json.loads(out)["rows"]
    assert rc == 0 and len(rows) == 2


def test_deterministic(capsys):
    a = run(capsys, "construct", "--scenario", "compatible_triangle", "--eps-count", "5")[1]
    b = run(capsys, "construct", "--scenario", "compatible_triangle", "--eps-count", "5")[1]
    assert a == b


def test_unknown_flag_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["normals", "--bogus"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_exit_two(capsys):
    assert main([]) == 2


def test_scenario_parse_error_exit_three(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "domain": {"preset": "unit_square"},\n  "wells": hex\n}\n')
    rc, _, err = run(capsys, "dcheck", "--scenario", str(p))
    assert rc == 3 and "line 3" in err and "column" in err


def test_bad_scenario_content_exit_three(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"domain": {"preset": "unit_square"}, "wells": "cubic"}))
    rc, _, _ = run(capsys, "dcheck", "--scenario", str(p))
    assert rc == 3


def test_fit_without_input_is_usage_error(capsys):
    rc, _, _ = run(capsys, "fit")
    assert rc == 2


def test_selftest(capsys):
    rc, out, _ = run(capsys, "selftest")
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) > 10 and all(" pass " in line for line in lines[1:])


@pytest.mark.skipif(shutil.which("martenscale") is None, reason="console script not installed")
def test_console_script_and_module():
    r = subprocess.run(["martenscale", "normals"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["count"] == 6
    r = subprocess.run([sys.executable, "-m", "martenscale", "normals"], capture_output=True, text=True)
    assert r.returncode == 0

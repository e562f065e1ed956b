import csv
import io
import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from parabren.cli import EXIT_CAP, EXIT_USAGE, JobConfig, main


@pytest.fixture
def runner():
    return CliRunner()


def _run(*args):
    return subprocess.run([sys.executable, "-c", "from parabren.cli import run; run()", *args],
                          capture_output=True, text=True)


def test_glean_descendants(runner):
    res = runner.invoke(main, ["glean", "descendants", "4"])
    assert res.exit_code == 0
    assert len(res.output.splitlines()) == 7
    res = runner.invoke(main, ["glean", "descendants", "4", "--up-to-perm"])
    assert len(res.output.splitlines()) == 6


def test_glean_check(runner):
    res = runner.invoke(main, ["glean", "check", "--source", "10,7", "--target", "4,8,4"])
    assert (res.exit_code, res.output) == (0, "NO\n")
    res = runner.invoke(main, ["glean", "check", "--source", "3,4", "--target", "1,3,2,1"])
    assert res.exit_code == 0 and res.output.startswith("YES beta=")


def test_glean_gleanings_and_diagram(runner):
    res = runner.invoke(main, ["glean", "gleanings", "2,2", "--up-to-perm"])
    assert res.exit_code == 0 and "(2,2)" in res.output.split()
    res = runner.invoke(main, ["glean", "diagram", "5"])
    assert res.exit_code == 0 and res.output.startswith("digraph")


def test_exit_codes():
    assert _run("glean", "descendants", "9", "--cap", "3").returncode == EXIT_CAP
    assert _run("glean", "check").returncode == EXIT_USAGE
    assert _run("no-such-command").returncode == EXIT_USAGE
    assert _run("glean", "descendants", "4").returncode == 0


def test_config_round_trip():
    cfg = JobConfig(kind="slice", window="[-1.0,1.0]x[-2.0,2.0]", size="20x10", pq="2/5",
                    log_coords=True, eps=1e-10, nmax=500, png=True)
    text = cfg.dumps()
    back = JobConfig.loads(text)
    assert back == cfg
    assert back.dumps() == text
    assert JobConfig.loads(text, size="30x30").size == "30x30"
    with pytest.raises(ValueError):
        JobConfig.loads(text, sign="x")


def test_probe_csv(runner):
    res = runner.invoke(main, ["probe", "phi", "--", "-1", "-0.5+0.1j"])
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert len(rows) == 2 and all(r["error"] == "" for r in rows)
    res = runner.invoke(main, ["probe", "sigma0", "3,6", "4,8"])
    rows = list(csv.DictReader(io.StringIO(res.output)))
    a, b = (complex(float(r["sigma0_re"]), float(r["sigma0_im"])) for r in rows)
    assert abs(a - b) < 1e-8


def test_render_basin_outputs(runner, tmp_path):
    out = str(tmp_path / "b")
    res = runner.invoke(main, ["render", "basin", "--size", "40x30", "-o", out, "--png",
                               "--seed", "7"])
    assert res.exit_code == 0, res.output
    side = json.loads((tmp_path / "b.json").read_text())
    assert side["width"] == 40 and side["seed"] == 7
    assert JobConfig.loads(side["config"]).size == "40x30"
    assert (tmp_path / "b.png").exists()
    first = (tmp_path / "b.ppm").read_bytes()
    runner.invoke(main, ["render", "basin", "--size", "40x30", "-o", out])
    assert (tmp_path / "b.ppm").read_bytes() == first


def test_cache_commands(runner, tmp_path):
    d = str(tmp_path / "cache")
    res = runner.invoke(main, ["probe", "phi", "--", "-1"], env={"PARABREN_CACHE": d})
    assert res.exit_code == 0
    res = runner.invoke(main, ["cache", "list", "--cache-dir", d])
    keys = [line.split("\t")[0] for line in res.output.splitlines()]
    assert keys
    res = runner.invoke(main, ["cache", "inspect", keys[0], "--cache-dir", d])
    assert res.exit_code == 0 and json.loads(res.output)
    res = runner.invoke(main, ["cache", "evict", "--all", "--cache-dir", d])
    assert res.output == f"evicted {len(keys)}\n"
    res = runner.invoke(main, ["cache", "list", "--cache-dir", d])
    assert res.output == ""


def test_verify_unknown_group(runner):
    res = runner.invoke(main, ["verify", "bogus"])
    assert res.exit_code == EXIT_USAGE

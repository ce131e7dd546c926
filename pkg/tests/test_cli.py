import shutil
import subprocess

import numpy as np
import pytest

from kleindim.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, RunConfig, main
from kleindim.limitset import read_cloud_csv


def run(tmp_path, *args):
    return main([args[0], "--out", str(tmp_path), *args[1:]])


def test_generate_one_over_n(tmp_path):
    assert run(tmp_path, "generate", "family=one-over-n", "n_max=500") == EXIT_OK
    cloud = read_cloud_csv(tmp_path / "one-over-n.csv")
    expect = np.concatenate([[0.0], 1.0 / np.arange(2, 501)])
    assert np.array_equal(np.sort(cloud.points[:, 0]), np.sort(expect))
    assert np.all(cloud.points[:, 1] == 0)
    assert (tmp_path / "one-over-n.svg").read_text().count("<svg") == 1


def test_generate_loxodromic_is_elementary(tmp_path):
    assert run(tmp_path, "generate", "family=cyclic-loxodromic", "budget=1000") == EXIT_OK
    cloud = read_cloud_csv(tmp_path / "cyclic-loxodromic.csv")
    assert cloud.elementary and len(cloud) == 2


def test_generate_snowflake_vertex_count(tmp_path):
    assert run(tmp_path, "generate", "family=snowflake", "beta=0.3", "depth=8") == EXIT_OK
    assert len(read_cloud_csv(tmp_path / "snowflake.csv")) == 4 ** 8 + 1


def test_outputs_are_deterministic_with_provenance(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["generate", "--out", str(d), "--seed", "7", "family=schottky4",
                     "budget=5000"]) == EXIT_OK
        assert main(["estimate", "--out", str(d), "--seed", "7", "family=cantor", "depth=10",
                     "estimators=mdim,kappa,perfectness", "--threads", "2"]) == EXIT_OK
    for name in ("schottky4.csv", "estimates.csv", "schottky4.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    head = (a / "estimates.csv").read_text().splitlines()[:2]
    assert head[0].startswith("# kleindim estimate version=") and "config=" in head[0]
    assert "numpy=" in head[1] and "scipy=" in head[1]
    assert (a / "schottky4.svg").read_text().startswith("<!-- kleindim generate")


def test_config_hash_tracks_values():
    a, b = RunConfig({"family": "cantor"}), RunConfig({"family": "cantor", "depth": "9"})
    assert a.digest() != b.digest()
    assert a.digest() == RunConfig({"family": "cantor"}).digest()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cantor run\nfamily = cantor\ndepth = 6  # shallow\n")
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path), "depth=5"]) == 0
    assert len(read_cloud_csv(tmp_path / "cantor.csv")) == 2 ** 6


def test_estimate_values(tmp_path):
    assert run(tmp_path, "estimate", "family=one-over-n", "estimators=mdim",
               "mdim_window=1.52587890625e-05,0.015625") == EXIT_OK
    rows = (tmp_path / "estimates.csv").read_text().splitlines()
    row = [r for r in rows if r.startswith("mdim,")][0]
    assert abs(float(row.split(",")[1]) - 0.5) <= 0.05


@pytest.mark.parametrize("args", [
    ["generate", "family=nope"],
    ["generate", "family=cantor", "depth=1.5"],
    ["generate", "family=snowflake", "beta=0.7"],
    ["generate", "badtoken"],
    ["estimate", "family=cantor", "estimators=nonsense"],
    ["generate", "--config", "/nonexistent.cfg"],
    ["generate", "family=cantor", "--threads", "0"],
    ["render", "family=cantor", "overlay=sparkles"],
    ["verify", "checks=x"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(tmp_path, args):
    assert main(args[:1] + ["--out", str(tmp_path)] + args[1:] if args and args[0] !=
                "frobnicate" else args) == EXIT_USAGE


def test_render_overlays(tmp_path):
    assert run(tmp_path, "render", "family=snowflake", "depth=4", "overlay=beta",
               "level=2") == EXIT_OK
    assert "<line" in (tmp_path / "render.svg").read_text()
    assert (tmp_path / "render_beta.csv").read_text().splitlines()[2] == "level,ix,iy,beta"
    assert run(tmp_path, "render", "overlay=packing", "name=pk") == EXIT_OK
    assert "<circle" in (tmp_path / "pk.svg").read_text()


def test_verify_subset_passes(tmp_path):
    assert run(tmp_path, "verify", "checks=1,2,4,9") == EXIT_OK
    lines = [l for l in (tmp_path / "verify.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert lines[0] == "id,name,status,measured,tolerance,claim"
    assert [l.split(",")[2] for l in lines[1:]] == ["pass"] * 4


def test_verify_corrupt_hook_fails(tmp_path):
    assert run(tmp_path, "verify", "checks=2", "corrupt=2") == EXIT_CHECK_FAILED


def test_verify_budget_scale_skips(tmp_path):
    assert run(tmp_path, "verify", "checks=3", "corrupt=3", "budget_scale=0.1") == EXIT_OK
    assert ",skip," in (tmp_path / "verify.csv").read_text()


def test_verify_report_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["verify", "--out", str(tmp_path / d), "checks=1,4,5"]) == EXIT_OK
    assert (tmp_path / "a" / "verify.csv").read_bytes() == \
        (tmp_path / "b" / "verify.csv").read_bytes()


@pytest.mark.skipif(shutil.which("kleindim") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["kleindim", "generate", "--out", str(tmp_path), "family=cantor",
                          "depth=4"], capture_output=True, text=True)
    assert out.returncode == 0
    bad = subprocess.run(["kleindim", "generate", "family=nope"], capture_output=True,
                         text=True, cwd=tmp_path)
    assert bad.returncode == 2 and "family" in bad.stderr

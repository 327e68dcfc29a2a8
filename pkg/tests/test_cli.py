import json

import pytest

from confgraph import cli
from confgraph.gc import save_mc, z0
from confgraph.pdalgebra import builtin


def call(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_betti_sphere_two_points(capsys, tmp_path):
    code, out, _ = call(capsys, "--task", "betti", "--manifold", "S^2", "--n", "2",
                        "--deg-min", "0", "--deg-max", "4", "--cache-dir", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "ok"
    assert rep["result"]["betti"]["betti"] == [1, 0, 1, 0, 0]
    assert rep["result"]["betti"]["stabilized"] == [True] * 5
    assert len(rep["config_hash"]) == 64


def test_warm_cache_is_byte_identical(capsys, tmp_path):
    argv = ["--task", "betti", "--manifold", "T^2", "--n", "1", "--deg-min", "0",
            "--deg-max", "2", "--cache-dir", str(tmp_path)]
    _, cold, _ = call(capsys, *argv)
    _, warm, _ = call(capsys, *argv)
    assert cold == warm
    _, nocache, _ = call(capsys, *argv[:-2], "--no-cache")
    assert nocache == cold


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, text, _ = call(capsys, "--task", "sbg", "--manifold", "S^2", "--n", "2",
                         "--out", str(out), "--no-cache")
    assert code == 0 and text == ""
    rep = json.loads(out.read_text())
    assert rep["result"]["sbg"]["coefficients"] == [1, 1, 2, 1, 1]
    assert rep["result"]["sbg"]["dominates"]


def test_unstable_exits_one(capsys):
    argv = ["--task", "betti", "--manifold", "T^2", "--n", "1", "--deg-min", "0",
            "--deg-max", "2", "--kmax", "0", "--no-cache"]
    code, out, _ = call(capsys, *argv)
    assert code == 1 and json.loads(out)["status"] == "unstabilized"
    code, out, _ = call(capsys, *argv, "--allow-unstable")
    assert code == 0


def test_failed_check_exits_one(capsys, tmp_path):
    A = builtin("S^2")
    p = tmp_path / "mc.json"
    save_mc(z0(A).scaled(2), "S^2", str(p))
    code, out, _ = call(capsys, "--task", "check-mc", "--manifold", "S^2", "--mc", str(p))
    rep = json.loads(out)
    assert code == 1 and rep["status"] == "check-failed"
    assert rep["checks"] == [{"name": "maurer-cartan", "passed": False}]


def test_mc_file_z0_passes(capsys, tmp_path):
    p = tmp_path / "mc.json"
    save_mc(z0(builtin("T^2")), "T^2", str(p))
    code, out, _ = call(capsys, "--task", "check-mc", "--manifold", "T^2", "--mc", str(p))
    assert code == 0 and json.loads(out)["config"]["mc_sha256"]


@pytest.mark.parametrize("argv", [
    ["--task", "betti", "--manifold", "S^2"],                              # no --n
    ["--task", "betti", "--manifold", "Klein", "--n", "1", "--deg-min", "0", "--deg-max", "1"],
    ["--task", "betti", "--manifold", "S^2", "--n", "1", "--deg-min", "3", "--deg-max", "1"],
    ["--task", "bv-betti", "--manifold", "S^3", "--n", "1", "--deg-min", "0", "--deg-max", "1"],
    ["--task", "check-les", "--manifold", "T^2", "--n", "1", "--deg-min", "0", "--deg-max", "1"],
    ["--task", "betti", "--manifold", "S^2", "--n", "1", "--deg-min", "0", "--deg-max", "1",
     "--kmax", "2", "--kprobe", "2"],
    ["--task", "check-mc", "--manifold", "S^2", "--mc", "/nonexistent/mc.json"],
    ["--task", "nonsense"],
    ["--bogus-flag"],
])
def test_config_errors_exit_two(capsys, argv, tmp_path):
    code, out, _ = call(capsys, *argv, "--cache-dir", str(tmp_path))
    assert code == 2 and out == ""


def test_cache_gc_task(capsys, tmp_path):
    code, out, _ = call(capsys, "--task", "cache-gc", "--cache-dir", str(tmp_path))
    assert code == 0
    assert json.loads(out)["result"]["cache_gc"] == {"entries": 0, "valid": 0, "evicted": []}
    code, _, _ = call(capsys, "--task", "cache-gc", "--cache-dir", str(tmp_path / "missing"))
    assert code == 2


def test_internal_error_exits_three(capsys, monkeypatch):
    def boom(args, ctx):
        raise RuntimeError("kaboom")
    monkeypatch.setitem(cli.RUNNERS, "sbg", boom)
    code, out, err = call(capsys, "--task", "sbg", "--manifold", "S^2", "--n", "1", "--no-cache")
    assert code == 3 and out == "" and "kaboom" in err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0


def test_config_hash_ignores_runtime_flags():
    p = cli.build_parser()
    a = p.parse_args(["--task", "sbg", "--manifold", "S^2", "--n", "2"])
    b = p.parse_args(["--task", "sbg", "--manifold", "S^2", "--n", "2", "--workers", "4",
                      "--no-cache", "-v"])
    assert cli.config_hash(cli.config_dict(a)) == cli.config_hash(cli.config_dict(b))


def test_small_tasks_run(capsys, tmp_path):
    jobs = [
        ["--task", "ls-betti", "--manifold", "T^2", "--n", "2"],
        ["--task", "bv-betti", "--manifold", "T^2", "--n", "1", "--deg-min", "0", "--deg-max", "1"],
        ["--task", "check-d2", "--manifold", "S^2", "--n", "2", "--deg-min", "0", "--deg-max", "1"],
        ["--task", "check-coassoc", "--dim", "3", "--n", "3"],
        ["--task", "check-comodule", "--manifold", "T^2", "--n", "2"],
        ["--task", "check-les", "--manifold", "T^2", "--n", "0", "--k", "1", "--deg-min", "0",
         "--deg-max", "1"],
        ["--task", "compare", "--manifold", "S^2", "--n", "2"],
        ["--task", "betti", "--flavor", "GraphsD", "--dim", "2", "--n", "2", "--deg-min", "0",
         "--deg-max", "1"],
    ]
    for argv in jobs:
        code, out, err = call(capsys, *argv, "--cache-dir", str(tmp_path))
        assert code == 0, (argv, err, out)
        assert json.loads(out)["status"] == "ok"

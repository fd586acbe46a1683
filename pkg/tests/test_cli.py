import json
from pathlib import Path

import pytest

from foldcont.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, command, config, *extra, name="out"):
    out = tmp_path / name
    code = main([command, "--config", str(config), "--out", str(out), *extra])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_census_k10(tmp_path):
    code, out = run(tmp_path, "census", CONFIGS / "table1.k10.yaml")
    assert code == 0
    m = manifest(out)
    assert m["counters"]["N"] == {"10": 100}
    for f in m["files"]:
        assert (out / f).exists()
    assert "| 10 |" in (out / "table1.md").read_text()
    assert len(m["config_hash"]) == 64
    assert {"numpy", "scipy", "foldcont"} <= set(m["versions"])


def test_census_k15(tmp_path):
    code, out = run(tmp_path, "census", CONFIGS / "table1.k15.yaml")
    assert code == 0
    assert manifest(out)["counters"]["N"] == {"15": 2058}


def test_census_thread_count_does_not_change_results(tmp_path):
    cfg = write(tmp_path, "command: census\ncensus: {n: 12, ks: [6, 9]}\n")
    _, a = run(tmp_path, "census", cfg, "--threads", "1", name="a")
    _, b = run(tmp_path, "census", cfg, "--threads", "4", name="b")
    for f in ("census_6.csv", "census_9.csv", "table1.md"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_bifurcate_k4(tmp_path):
    code, out = run(tmp_path, "bifurcate", CONFIGS / "bifurcate.k4.yaml")
    assert code == 0
    m = manifest(out)
    assert m["counters"]["solutions"] == 8
    lines = (out / "solutions.csv").read_text().splitlines()
    assert len(lines) == 9
    assert (out / "diagram_1.svg").read_text().lstrip().startswith("<?xml")


def test_bifurcate_linear(tmp_path):
    code, out = run(tmp_path, "bifurcate", CONFIGS / "bifurcate.linear.yaml")
    assert code == 0
    assert manifest(out)["counters"]["solutions"] == 1


def test_bifurcate_cubic(tmp_path):
    code, out = run(tmp_path, "bifurcate", CONFIGS / "bifurcate.cubic.yaml")
    assert code == 0
    assert manifest(out)["counters"]["solutions"] == 8


def test_campaign_is_seed_deterministic(tmp_path):
    cfg = CONFIGS / "bifurcate.k8-two-lines.yaml"
    _, a = run(tmp_path, "bifurcate", cfg, "--seed", "5", name="a")
    _, b = run(tmp_path, "bifurcate", cfg, "--seed", "5", name="b")
    assert (a / "solutions.csv").read_bytes() == (b / "solutions.csv").read_bytes()
    assert manifest(a)["seed"] == 5
    assert manifest(a)["counters"]["orthant_draws"] == manifest(b)["counters"]["orthant_draws"]


def test_planar_circle(tmp_path):
    code, out = run(tmp_path, "planar", CONFIGS / "planar.circle.yaml")
    assert code == 0
    m = manifest(out)["counters"]
    assert m["zeros"] == 4 and m["parity_ok"] and m["domain_tiles"] == 5
    tiles = json.loads((out / "tiles.json").read_text())
    assert len(tiles["zeros"]) == 4


def test_scan_k1(tmp_path):
    code, out = run(tmp_path, "scan", CONFIGS / "scan.k1.yaml")
    assert code == 0
    m = manifest(out)["counters"]
    assert m["crossings"] == 1 and m["strictly_decreasing"]
    assert (out / "scan.csv").read_text().startswith("t,lambda1")


def test_ingest_check(tmp_path):
    from foldcont.elliptic import annulus_test_operator, export_operator

    export_operator(annulus_test_operator(), tmp_path / "annulus.mtx", tmp_path / "annulus_mass.mtx")
    cfg = write(tmp_path, "command: ingest-check\ningest_check: {operator_file: annulus.mtx, "
                          "mass_file: annulus_mass.mtx, m: 4}\n")
    code, out = run(tmp_path, "ingest-check", cfg)
    assert code == 0
    ev = manifest(out)["counters"]["eigenvalues"]
    assert ev == pytest.approx([9.0988, 16.3218, 22.9346, 30.4949], abs=1e-6)


def test_missing_config_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "census", tmp_path / "nope.yaml")
    assert code == 2
    assert "ConfigError" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path):
    cfg = write(tmp_path, "command: census\ncensus: {n: 4, ks: [1], bogus: 1}\n")
    assert run(tmp_path, "census", cfg)[0] == 2


def test_command_mismatch_exits_2(tmp_path):
    assert run(tmp_path, "scan", CONFIGS / "table1.k10.yaml")[0] == 2


def test_ladder_index_out_of_range_exits_2(tmp_path):
    cfg = write(tmp_path, "command: census\ncensus: {n: 4, ks: [9]}\n")
    assert run(tmp_path, "census", cfg)[0] == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, "command: scan\nscan:\n  grid: {shape: square_with_hole, n: 10, hole: [0, 10, 4, 6]}\n"
                          "  k: 1\n")
    code, _ = run(tmp_path, "scan", cfg)
    assert code == 3
    assert "DisconnectedDomain" in capsys.readouterr().err

import csv
import json

import pytest
import yaml

from popharvest.cli import main
from popharvest.scenarios import ScenarioError, bundled_scenarios, load_scenarios, parse_scenarios


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_every_bundled_scenario_validates():
    files = bundled_scenarios()
    assert len(files) >= 8
    for f in files:
        _, scenarios = load_scenarios(f)
        assert scenarios


def test_empty_config_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "empty.yaml"
    cfg.write_text("")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "empty" in capsys.readouterr().err


def test_unknown_key_is_named(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(
        yaml.safe_dump(
            {"name": "s", "kind": "simulate", "model": "single", "params": {"r": 2, "k": 1},
             "initial": [0.1], "horizon": 3, "colour": "red"}
        )
    )
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    assert "colour" in err and "unknown key" in err


def test_invariant_violation_reported():
    with pytest.raises(ScenarioError, match="params"):
        parse_scenarios({"name": "s", "kind": "equilibria", "model": "pair",
                         "params": {"r": 1, "k": 1, "a": -1, "c": 1, "d": 1}})


def test_missing_kind_and_duplicates():
    with pytest.raises(ScenarioError, match="kind"):
        parse_scenarios({"name": "s"})
    item = {"name": "s", "kind": "equilibria", "model": "poly", "params": {"s": 3.1}}
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenarios({"scenarios": [item, item]})


def test_fig3_trajectory_converges(tmp_path, capsys):
    assert main(["simulate", "--config", "fig3-e2-sink", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("fig3-e2-sink [simulate]")
    rows = _read(tmp_path / "fig3-e2-sink_trajectory.csv")
    assert rows[0] == ["t", "x", "y"]
    assert len(rows) == 502
    x, y = float(rows[-1][1]), float(rows[-1][2])
    assert abs(x - 1.61 / 3) < 1e-6 and abs(y - 1.3107004240209268) < 1e-6
    # full precision
    assert len(rows[1][1]) >= 3


def test_table1_csv(tmp_path):
    assert main(["table1", "--config", "table1", "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path / "table1_table1.csv")
    assert rows[0] == ["model", "h", "J", "dominated"]
    body = rows[1:]
    assert len(body) == 12
    assert [r[0] for r in body] == ["single"] * 6 + ["pair"] * 6
    assert body[0][1] == "h*" and body[6][1] == "h*"
    assert all(r[3] == "true" for r in body if r[1] != "h*")
    assert float(body[0][2]) == pytest.approx(0.0491, abs=5e-5)
    assert float(body[6][2]) == pytest.approx(0.04121, abs=1e-5)
    assert float(body[2][2]) == pytest.approx(0.04524, abs=2e-5)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "table1" and manifest["scenarios"][0]["outputs"] == ["table1_table1.csv"]


def test_emit_table1_empty_list():
    from popharvest.control import ControlProblem
    from popharvest.maps import PairParams, SingleParams
    from popharvest.runner import emit_table1

    single = ControlProblem("single", SingleParams(1.999, 0.8), x0=0.1, T=10, c1=0.1, c2=0.01)
    pair = ControlProblem("pair", PairParams(5.2, 2.1, 0.1, 0.5, 2.9), x0=0.5, y0=0.8, T=10, c1=0.025, c2=0.08)
    rows, _ = emit_table1(single, pair, [], [])
    assert [r[1] for r in rows] == ["h*", "h*"]


def test_reruns_are_byte_identical(tmp_path):
    for out in ("a", "b"):
        assert main(["run", "--config", "pair-harvest", "--out", str(tmp_path / out)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "manifest.json" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_subcommand_filters_by_kind(tmp_path, capsys):
    assert main(["equilibria", "--config", "fig3-e2-sink", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "e2=Sink" in out and "[simulate]" not in out
    assert main(["basin", "--config", "fig3-e2-sink", "--out", str(tmp_path)]) != 0


def test_basin_csv_and_summary(tmp_path, capsys):
    assert main(["basin", "--config", "remark-basin", "--out", str(tmp_path)]) == 0
    assert "Refuted witness=" in capsys.readouterr().out
    rows = _read(tmp_path / "remark-basin_basin.csv")
    assert rows[0] == ["x0", "code", "iters"]


def test_optimize_csv_and_mode_override(tmp_path, capsys):
    assert main(["optimize", "--config", "pair-harvest", "--out", str(tmp_path),
                 "--adjoint-mode", "paper-literal"]) == 0
    assert "adjoint=paper-literal" in capsys.readouterr().out
    rows = _read(tmp_path / "pair-optimal_control.csv")
    assert rows[0] == ["t", "h", "x", "y", "lambda1", "lambda2"]
    assert len(rows) == 82


def test_validate_subcommand(tmp_path, capsys):
    code = main(["validate", "--out", str(tmp_path), "--seed", "5", "--draws", "100", "--jury-draws", "2000"])
    assert code == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    rows = _read(tmp_path / "validation.csv")
    assert rows[0][0] == "check" and all(r[-1] == "pass" for r in rows[1:])


def test_seed_must_be_unsigned(tmp_path):
    with pytest.raises(SystemExit):
        main(["validate", "--seed", "-1", "--out", str(tmp_path)])


@pytest.mark.parametrize("path", bundled_scenarios(), ids=lambda p: p.stem)
def test_bundled_scenario_runs_quickly(path, tmp_path):
    import time

    t0 = time.perf_counter()
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 60

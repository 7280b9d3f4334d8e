import json

import pytest

from boundary_lab.boundary import BoundaryPoint
from boundary_lab.cli import main
from boundary_lab.config import ExperimentConfig, parse_config, require_below_dimension
from boundary_lab.errors import ConfigError, ParamError


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_config_values():
    cfg = parse_config("""
        # comment line
        m = 2
        depth = 4   # trailing comment
        truncation = 7
        s_grid = 0.1, 0.3
        basepoints = /a, b/ab
        plot = yes
    """)
    assert cfg.depth == 4 and cfg.s_grid == (0.1, 0.3) and cfg.plot
    assert cfg.basepoints == (BoundaryPoint("", "a"), BoundaryPoint("b", "ab"))
    assert cfg.truncation_for(2) == 5
    assert cfg.depth_scan() == [2, 3, 4]


@pytest.mark.parametrize("text", [
    "colour = red",
    "depth = 3\ndepth = 4",
    "depth 3",
    "depth = three",
    "basepoints = ab",
    "basepoints = aB/b",
    "truncation = 1\ndepth = 3",
    "format = xml",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_require_below_dimension():
    with pytest.raises(ParamError):
        require_below_dimension(ExperimentConfig(s_grid=(0.3, 0.6)))
    require_below_dimension(ExperimentConfig(s_grid=(0.3,)))


def test_unknown_key_exits_2(tmp_path, capsys):
    assert main(["sobolev", "--config", _cfg(tmp_path, "bogus = 1\n")]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_missing_config_and_bad_usage_exit_2(tmp_path):
    assert main(["sobolev", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert main([]) == 2
    assert main(["no-such-command"]) == 2


def test_out_of_range_parameters_exit_2(tmp_path):
    cfg = _cfg(tmp_path, "s_grid = 0.6\np = 2\n")
    assert main(["sobolev", "--config", cfg, "--out", str(tmp_path / "r.csv")]) == 2
    cfg = _cfg(tmp_path, "p = 1\n", "ai.cfg")
    assert main(["almost-invariant", "--config", cfg, "--out", str(tmp_path / "r.csv")]) == 2


def test_selftest_and_injected_fault(tmp_path, capsys):
    cfg = _cfg(tmp_path, "seed = 4\n")
    assert main(["selftest", "--config", cfg, "--out", str(tmp_path / "ok.csv")]) == 0
    assert main(["selftest", "--config", cfg, "--out", str(tmp_path / "bad.csv"), "--inject-fault"]) == 1
    assert "FAIL gmv" in capsys.readouterr().err
    summary = (tmp_path / "bad.summary.csv").read_text()
    assert "failure" in summary


def test_csv_is_deterministic_and_wall_time_free(tmp_path):
    cfg = _cfg(tmp_path, "depth = 3\ntruncation = 5\ns_grid = 0.3\ntrials = 20\nseed = 9\n")
    for name in ("a", "b"):
        assert main(["sobolev", "--config", cfg, "--out", str(tmp_path / f"{name}.csv")]) == 0
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b and a.startswith(b"s,p,depth,trial,lhs,rhs,ratio\r\n")
    assert (tmp_path / "a.summary.csv").read_bytes() == (tmp_path / "b.summary.csv").read_bytes()
    assert b"wall" not in (tmp_path / "a.summary.csv").read_bytes()


def test_json_report(tmp_path):
    cfg = _cfg(tmp_path, "depth = 3\ntruncation = 5\nformat = json\nbasepoints = /a\n")
    out = tmp_path / "r.json"
    assert main(["rescaling", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["experiment"] == "rescaling"
    assert doc["params"]["basepoints"] == ["/a"]
    assert doc["summary"]["law_max_error"] < 1e-10
    assert len(doc["rows"][0]) == len(doc["columns"])


def test_plot_is_written_and_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "depth = 3\ns_grid = 0.2, 0.3\n")
    for name in ("a", "b"):
        assert main(["potential", "--config", cfg, "--out", str(tmp_path / f"{name}.csv"), "--plot"]) == 0
    svg_a, svg_b = (tmp_path / "a.svg").read_bytes(), (tmp_path / "b.svg").read_bytes()
    assert svg_a.lstrip().startswith(b"<?xml") and b"<svg" in svg_a
    assert svg_a == svg_b


@pytest.mark.parametrize("command,text", [
    ("geometric-control", "truncation = 4\nt_grid = 0, 1\n"),
    ("rep-bound", "depth = 2\ntruncation = 2\ngroup_radius = 2\nt_grid = 0, 1\n"),
    ("cayley-norms", "depth = 2\ntruncation = 4\nbasepoints = /a, b/a\n"),
    ("almost-invariant", "depth = 1\ntruncation = 1\ngroup_radius = 1\n"),
])
def test_other_commands_run(tmp_path, command, text):
    out = tmp_path / "r.csv"
    assert main([command, "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    assert out.read_text().count("\n") > 2

import json
from pathlib import Path

import pytest

from heralded_amp.amplifier import gain_ideal, herald_efficiency_ideal
from heralded_amp.cli import CSV_HEADER, fmt, main, parse_config, read_csv, render, write_csv
from heralded_amp.errors import ConfigError
from heralded_amp.experiments import SweepRow, distance_to_loss

GOLDEN = Path(__file__).parent / "golden"

IDEAL = {
    "source": {"p_pair": 0.0},
    "detector": {"efficiency": 1.0, "dark_prob": 0.0, "number_resolving": True},
    "amplifier": {"intrinsic_loss": 1.0, "herald_rule": "single_port_click", "cutoff": 4},
    "experiment": {"kind": "gain-surface", "quantities": ["gain"]},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_fmt():
    assert fmt(0.5) == "0.500000000"
    assert fmt(1.0) == "1.00000000"
    assert fmt(166.7779632721202) == "166.777963"
    assert fmt(None) == ""


def test_render_single_ideal_row():
    text = render(CSV_HEADER, [[0.5, 0.5, 1.0, None, None, None, None]])
    assert text == "p,t,gain,herald_probability,herald_efficiency,visibility,distance_km\n0.500000000,0.500000000,1.00000000,,,,\n"
    dat = render(CSV_HEADER, [[0.5, 0.5, 1.0, None, None, None, None]], "dat")
    assert dat.splitlines()[0] == "# p t gain herald_probability herald_efficiency visibility distance_km"
    assert dat.splitlines()[1] == "0.500000000 0.500000000 1.00000000 nan nan nan nan"


def test_write_csv_refuses_empty(tmp_path):
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "x.csv")


def test_gain_surface_121_rows(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gain-surface", "--config", write(tmp_path, IDEAL), "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 122
    rows = read_csv(out)
    for r in rows:
        assert r.gain == pytest.approx(gain_ideal(r.t, r.p), rel=1e-8)


def test_golden_file_and_byte_identity(tmp_path):
    cfg = str(GOLDEN / "small_surface.json")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gain-surface", "--config", cfg, "--out", str(a)]) == 0
    assert main(["gain-surface", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() == (GOLDEN / "small_surface.csv").read_bytes()
    for r in read_csv(a):
        assert r.gain == pytest.approx(gain_ideal(r.t, r.p), rel=1e-8)
        assert r.herald_efficiency == pytest.approx(herald_efficiency_ideal(r.t, r.p), rel=1e-8)


def test_validate_bad_t(tmp_path):
    doc = {"amplifier": {"t": 1.2}}
    path = write(tmp_path, doc, "bad.json")
    code = main(["validate", "--config", path])
    assert code == 2


def test_validate_message_names_key(tmp_path, capsys):
    path = write(tmp_path, {"amplifier": {"t": 1.2}}, "bad.json")
    assert main(["validate", "--config", path]) == 2
    assert "amplifier.t" in capsys.readouterr().err


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", "--config", write(tmp_path, IDEAL)]) == 0
    assert "ok" in capsys.readouterr().out


@pytest.mark.parametrize(
    "doc,key",
    [
        ({"amplifier": {"tee": 0.5}}, "amplifier.tee"),
        ({"bogus": {}}, "bogus"),
        ({"input": {"p": -0.1}}, "input.p"),
        ({"input": {"p": 0.5, "p_grid": [0.5]}}, "input.p_grid"),
        ({"detector": {"efficiency": "high"}}, "detector.efficiency"),
        ({"detector": {"dark_prob": 1.0}}, "detector.dark_prob"),
        ({"amplifier": {"herald_rule": "any"}}, "amplifier.herald_rule"),
        ({"amplifier": {"t_grid": [0.5, 1.0]}}, "amplifier.t_grid[1]"),
        ({"source": {"p_pair": 0.01}, "amplifier": {"cutoff": 3}}, "amplifier.cutoff"),
        ({"experiment": {"quantities": ["speed"]}}, "experiment.quantities"),
        ({"experiment": {"kind": "hom"}}, "experiment.kind"),
    ],
)
def test_strict_parsing(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc, "gain-surface")
    assert exc.value.key == key


def test_missing_and_malformed_config(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--config", str(bad)]) == 2
    assert "malformed" in capsys.readouterr().err


def test_missing_output_path(tmp_path):
    assert main(["gain-surface", "--config", write(tmp_path, IDEAL)]) == 2


def test_unknown_subcommand(tmp_path):
    assert main(["dance", "--config", write(tmp_path, IDEAL)]) == 2


def test_herald_curve_distance(tmp_path):
    doc = {
        "detector": {"number_resolving": True},
        "amplifier": {"t_grid": [0.9, 0.95]},
        "input": {"distance_km": 20},
    }
    out = tmp_path / "h.csv"
    assert main(["herald-curve", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2
    for r in rows:
        assert r.p == pytest.approx(0.6689, abs=1e-4)
        assert r.p == pytest.approx(distance_to_loss(20.0), rel=1e-8)
        assert r.herald_efficiency == pytest.approx(herald_efficiency_ideal(r.t, r.p), rel=1e-8)
    assert out.read_text().splitlines()[1].endswith(",20.0000000")


def test_dat_format(tmp_path):
    out = tmp_path / "g.dat"
    doc = dict(IDEAL, input={"p_grid": [0.5]}, amplifier={"t_grid": [0.5]})
    assert main(["gain-surface", "--config", write(tmp_path, doc), "--out", str(out), "--format", "dat"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# p t gain")
    assert lines[1].split()[:3] == ["0.500000000", "0.500000000", "1.00000000"]


def test_visibility_surface(tmp_path):
    doc = {"detector": {"number_resolving": True}, "input": {"p_grid": [0.5]}, "amplifier": {"t_grid": [0.8, 0.5]}}
    out = tmp_path / "v.csv"
    assert main(["visibility-surface", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0].visibility == pytest.approx(0.8, abs=1e-8)
    assert rows[1].visibility == pytest.approx(1.0, abs=1e-8)


def test_fringe_command(tmp_path):
    doc = {"detector": {"number_resolving": True}, "input": {"p": 0.5}, "amplifier": {"t": 0.8},
           "experiment": {"phases": [0.0, 1.5707963267948966, 3.141592653589793, 4.71238898038469]}}
    out = tmp_path / "f.csv"
    assert main(["fringe", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p,t,phase,detection_probability,visibility"
    assert len(lines) == 5
    assert float(lines[1].split(",")[-1]) == pytest.approx(0.8, abs=1e-8)


def test_hom_command(tmp_path):
    doc = {"source": {"p_pair": 0.01}, "detector": {"number_resolving": False}}
    out = tmp_path / "hom.csv"
    assert main(["hom", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    header, row = out.read_text().splitlines()
    assert header == "p_pair,overlap,coincidence_prob,visibility"
    assert 0.95 <= float(row.split(",")[-1]) <= 1.0


def test_optimize_t_command(tmp_path):
    doc = {"detector": {"number_resolving": True}, "input": {"distance_km": 20}, "experiment": {"target": 0.83}}
    out = tmp_path / "o.csv"
    assert main(["optimize-t", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    (row,) = read_csv(out)
    assert row.herald_efficiency >= 0.83
    assert row.t == pytest.approx(0.83 * row.p / (0.17 * (1 - row.p) + 0.83 * row.p), abs=2e-6)


def test_optimize_t_infeasible_is_runtime_error(tmp_path):
    doc = {"detector": {"number_resolving": False}, "amplifier": {"intrinsic_loss": 0.5},
           "input": {"p": 0.6689}, "experiment": {"target": 0.999}}
    assert main(["optimize-t", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o.csv")]) == 1


def test_fit_command_round_trip(tmp_path):
    planted = {"detector": {"number_resolving": False}, "amplifier": {"intrinsic_loss": 0.8, "t_grid": [0.6, 0.9]},
               "input": {"p_grid": [0.55, 0.8]}, "experiment": {"quantities": ["herald_efficiency", "herald_probability"]}}
    data = tmp_path / "data.csv"
    assert main(["herald-curve", "--config", write(tmp_path, planted, "p.json"), "--out", str(data)]) == 0
    for r in read_csv(data):
        assert isinstance(r, SweepRow)
    fit = {"detector": {"number_resolving": False},
           "experiment": {"data": str(data), "free_params": ["intrinsic_loss"], "bounds": {"intrinsic_loss": [0.5, 1.0]}}}
    out = tmp_path / "fit.csv"
    assert main(["fit", "--config", write(tmp_path, fit, "f.json"), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "param,value"
    assert float(lines[1].split(",")[1]) == pytest.approx(0.8, abs=1e-3)


def test_cutoff_override(tmp_path):
    doc = dict(IDEAL, input={"p": 0.5}, amplifier={"t": 0.7})
    out = tmp_path / "c.csv"
    assert main(["gain-surface", "--config", write(tmp_path, doc), "--out", str(out), "--cutoff", "2"]) == 0
    assert main(["gain-surface", "--config", write(tmp_path, doc), "--out", str(out), "--cutoff", "1"]) == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "heralded_amp", "validate", "--config", write(tmp_path, IDEAL)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "config ok" in proc.stdout

import json
import subprocess
import sys

import pytest

from mlrsa.cli import EXIT_CONFIG, EXIT_GATE, EXIT_OK, main
from mlrsa.config import ExperimentConfig, parse_key_values
from mlrsa.figures import UnknownFigureError, emit_figure_data
from mlrsa.report import read_csv_table


def run_cli(*args):
    return main([str(a) for a in args])


def test_sim1d_csv_columns(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli("sim1d", "--k", 2, "--tau-max", 2, "--length", 500,
                   "--replications", 3, "--samples", 5, "-o", out) == EXIT_OK
    meta, header, rows = read_csv_table(out)
    assert header == ["tau", "color", "value", "stderr"]
    assert len(rows) == 10
    assert meta["config.mode"] == "sim1d" and meta["config.k"] == "2"


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_byte_identical(tmp_path, fmt):
    first = tmp_path / f"a.{fmt}"
    second = tmp_path / f"b.{fmt}"
    assert run_cli("sim2d", "--k", 2, "--tau-max", 3, "--side", 20, "--replications", 3,
                   "--seed", 7, "--format", fmt, "-o", first) == EXIT_OK
    assert run_cli("run", "--config", first, "-o", second, "--jobs", 3) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_config_file_and_comments(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# iterative curve\nmode = solve1d-iter\nk = 3   # colors\ntau-max = 4\n")
    out = tmp_path / "i.csv"
    assert run_cli("run", "--config", cfg, "-o", out) == EXIT_OK
    meta, _, rows = read_csv_table(out)
    assert meta["config.tau_max"] == "4.0"
    assert float(rows[-1][0]) == 4.0


def test_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MLRSA_OUTPUT_DIR", str(tmp_path / "outs"))
    assert run_cli("plan-wifi", "--preset", "5GHz", "--points", 5) == EXIT_OK
    meta, header, rows = read_csv_table(tmp_path / "outs" / "plan-wifi.csv")
    assert header == ["lambda_t", "d_inh"]
    assert meta["result.channels"] == "23"
    assert len(rows) == 5


def test_gap_grid_and_companion(tmp_path):
    out = tmp_path / "g.csv"
    assert run_cli("solve1d-gap", "--k", 2, "--tau-max", 2, "--samples", 3,
                   "--store-lmax", 2, "-o", out) == EXIT_OK
    _, header, rows = read_csv_table(out)
    assert header == ["l", "t", "G"]
    assert len(rows) == 3 * 401
    _, header, _ = read_csv_table(tmp_path / "g.density.csv")
    assert header == ["tau", "color", "value", "stderr"]


@pytest.mark.parametrize("args,field", [
    (["sim1d", "--k", "0"], "k"),
    (["sim1d", "--tau-max", "abc"], "tau_max"),
    (["compare", "--dim", "2", "--methods", "gap"], "methods"),
    (["solve1d-gap", "--k", "3", "--variant", "exact-K2"], "variant"),
    (["plan-wifi", "--preset", "6GHz"], "preset"),
    (["figure", "3"], "id"),
])
def test_invalid_config_field_message(args, field, capsys, tmp_path):
    assert main(args + ["-o", str(tmp_path / "x.csv")]) == EXIT_CONFIG
    assert capsys.readouterr().err.startswith(f"invalid configuration: {field}:")


def test_unknown_key_in_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mode = solve2d\nbogus = 3\n")
    assert run_cli("run", "--config", cfg) == EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err


def test_compare_gates(tmp_path):
    ok = tmp_path / "ok.csv"
    assert run_cli("compare", "--k", 2, "--tau-max", 4, "--samples", 8, "--size", 5000,
                   "--replications", 8, "--jobs", 4, "-o", ok) == EXIT_OK
    meta, header, _ = read_csv_table(ok)
    assert header == ["tau", "sim_mean", "sim_stderr", "iter", "gap", "iter_relerr", "gap_relerr"]
    assert meta["result.gate"] == "pass"
    bad = tmp_path / "bad.csv"
    assert run_cli("compare", "--k", 4, "--tau-max", 4, "--samples", 8, "--size", 5000,
                   "--replications", 8, "--methods", "iter", "--tol-iter", 0.001,
                   "-o", bad) == EXIT_GATE
    assert read_csv_table(bad)[0]["result.gate.iter"] == "fail"


def test_plot_written(tmp_path):
    out = tmp_path / "w.csv"
    assert run_cli("plan-wifi", "--points", 4, "--plot", "-o", out) == EXIT_OK
    assert (tmp_path / "w.png").stat().st_size > 1000


def test_figure_ids():
    with pytest.raises(UnknownFigureError) as info:
        emit_figure_data(12)
    assert "4, 5, 6, 7, 8, 9" in str(info.value)
    art = emit_figure_data(9)
    assert art.columns == ["k", "lambda_t", "d_inh"]
    assert {r[0] for r in art.rows} == {11, 23}


def test_figure4_small(tmp_path):
    art = emit_figure_data(4, {"replications": 2, "size": 2000.0})
    assert art.columns == ["tau", "source", "l", "G"]
    assert {r[0] for r in art.rows} == {2.0, 6.0, 10.0}
    assert {r[1] for r in art.rows} == {"gap", "sim"}


def test_json_config_parse(tmp_path):
    out = tmp_path / "a.json"
    assert run_cli("solve2d", "--k", 2, "--tau-max", 5, "--format", "json", "-o", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["config"]["mode"] == "solve2d"
    assert doc["columns"] == ["tau", "color", "value", "stderr"]


def test_parse_key_values_artifact_header():
    text = "# config.mode = solve2d\n# config.k = 3\n# result.final = 0.4\ntau,color\n"
    assert parse_key_values(text) == {"mode": "solve2d", "k": "3"}
    cfg = ExperimentConfig.from_mapping(parse_key_values(text))
    assert cfg.params["k"] == 3


def test_console_script(tmp_path):
    out = tmp_path / "p.csv"
    res = subprocess.run([sys.executable, "-m", "mlrsa.cli", "plan-wifi", "--preset", "2.4GHz",
                          "-o", str(out)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert read_csv_table(out)[0]["result.channels"] == "11"

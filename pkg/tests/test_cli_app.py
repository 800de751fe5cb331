import math
import os

import numpy as np
import pytest
import yaml

from FlowApp.heat_demo import heat_demo, heat_scan, scan_trends, weighted_integral_log
from FlowApp.run_solve import RESIDUAL_FILE, SIDECAR_FILE, TRAJECTORY_FILE, run_solve
from FlowApp.run_verify import SUITES, run_verify
from FlowEngine.field import seminorm
from Utils.config import RunConfig, load_config, parse_config
from Utils.errors import ConfigError, PreconditionError
from frechet_flow import EXIT_CONFIG, EXIT_OK, EXIT_OVERFLOW, EXIT_VERIFY, join_free_text_values, main, parse_samples

SMALL_RUN = """
grid:
  J: 4
  inv_h: 8
symbol:
  text: heat
evolve:
  times: [0.0, 0.1, 1.0]
init:
  kind: ones
"""

# 4 pi^2 J^2 must pass 709 for the top levels to saturate at t = -1
BACKWARD_RUN = SMALL_RUN.replace("J: 4", "J: 8").replace("[0.0, 0.1, 1.0]", "[-1.0]")


def write_config(tmp_path, text: str, name: str = "run.yaml") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# configuration

def test_defaults_round_trip():
    config = RunConfig()
    assert parse_config(config.to_yaml()) == config
    assert config.symbol.text == "heat"
    assert config.evolve.method == "multiplier"


@pytest.mark.parametrize("text, line", [
    ("evolve:\n  method: euler\n", 2),
    ("grid:\n  n: 1\n  J: 0\n", 3),
    ("grid:\n  size: 3\n", 2),
    ("symbol:\n  text: heat\n  diffop: '1:1'\n", 1),
    ("evolve:\n  tol: -1\n", 2),
    ("init:\n  kind: file\n", 1),
])
def test_invalid_values_report_their_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_malformed_yaml():
    with pytest.raises(ConfigError) as info:
        parse_config("grid:\n  J: [1, 2\n")
    assert info.value.line is not None
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")


def test_overrides():
    config = parse_config(SMALL_RUN, ["evolve.method=both", "grid.J=2", "evolve.times=[0, 0.5]"])
    assert config.evolve.method == "both"
    assert config.grid.J == 2
    assert config.evolve.times == [0.0, 0.5]
    for bad in ("method=both", "nosection.key=1", "evolve.method"):
        with pytest.raises(ConfigError):
            parse_config(SMALL_RUN, [bad])


def test_metadata_block_is_ignored():
    config = parse_config(SMALL_RUN + "run:\n  overflow: false\n")
    assert config == parse_config(SMALL_RUN)


def test_load_config_resolves_paths(tmp_path):
    config = load_config(write_config(tmp_path, SMALL_RUN, "heat_small.yaml"))
    assert config.output.directory == os.path.join(str(tmp_path), "output", "heat_small")
    assert config.output.log_file_path == os.path.join(config.output.directory, "process.log")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, SMALL_RUN.replace("kind: ones", "kind: file\n  path: none.bin")))


# solve runs

def test_solve_writes_outputs(tmp_path):
    config = load_config(write_config(tmp_path, SMALL_RUN))
    result = run_solve(config)
    directory = config.output.directory
    for name in (TRAJECTORY_FILE, SIDECAR_FILE, "field_000.csv", "field_002.csv"):
        assert os.path.exists(os.path.join(directory, name))
    assert not result.overflow
    assert load_config(os.path.join(directory, SIDECAR_FILE)) == config
    profiles = result.trajectory.profiles()
    for j in range(1, config.grid.J + 1):
        assert profiles[0][j] > profiles[1][j] > profiles[2][j]


def test_solve_at_time_zero_is_identity():
    config = parse_config(SMALL_RUN.replace("[0.0, 0.1, 1.0]", "[0.0]").replace("ones", "gaussian-hat"))
    result = run_solve(config, write=False)
    u = result.trajectory.fields[0]
    assert result.files == []
    np.testing.assert_array_equal(u.values, np.exp(-np.pi * u.grid.radius ** 2))


def test_backward_heat_overflows():
    config = parse_config(BACKWARD_RUN.replace("[-1.0]", "[-1.0, 0.0]").replace("ones", "gaussian-hat"))
    result = run_solve(config, write=False)
    assert result.overflow
    backward, start = result.trajectory.fields
    assert seminorm(backward, 1) > math.e * seminorm(start, 1)
    assert seminorm(backward, config.grid.J) > math.e * seminorm(start, config.grid.J)
    assert result.metadata["overflow"]


def test_series_and_multiplier_agree(tmp_path):
    config = load_config(write_config(tmp_path, SMALL_RUN), ["evolve.method=both"])
    result = run_solve(config)
    assert result.residuals_pass
    assert len(result.residual_frame()) == 3 * config.grid.J
    assert os.path.exists(os.path.join(config.output.directory, RESIDUAL_FILE))
    assert result.metadata["residuals_pass"]


# heat demo

def test_weighted_integral_at_time_zero():
    h = 1.0 / 64
    assert weighted_integral_log(0.0, 0, 1.0, h) == pytest.approx(math.log(2.0 + h))


def test_heat_scan_trends():
    scan = heat_scan(Rs=[1, 2, 4, 8, 16, 32])
    trends = scan_trends(scan).set_index(["t", "M"])
    for M in (0, 1, 2):
        assert trends.loc[(0.1, M), "converges"]
        assert trends.loc[(-0.1, M), "log_growth"] > math.log(1e6)
    forward = scan[scan["t"] == 0.1]
    for R in (1.0, 4.0, 32.0):
        values = forward[forward["R"] == R].sort_values("M")["value"].to_numpy()
        assert np.all(np.diff(values) > 0)
    with pytest.raises(PreconditionError):
        heat_scan(Rs=[4, 2])


def test_heat_demo_stages():
    frames = heat_demo()
    assert frames["stages"]["passed"].all()
    assert frames["scan"]["overflow"].any()


# self-check

def test_verify_suites_pass():
    report = run_verify()
    assert report.passed, report.failures()
    assert set(report.timings) == set(SUITES)


def test_injected_fault_is_caught():
    report = run_verify(["symbol_lang"], inject_fault=True)
    assert not report.passed
    assert "spectral_core" in set(report.failures()["suite"])


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_verify(["nonsense"])


# command line

def test_parse_samples():
    np.testing.assert_allclose(parse_samples("-2:2:0.5"), np.arange(-2.0, 2.01, 0.5))
    for bad in ("1:0:1", "0:1:0", "0:1"):
        with pytest.raises(ConfigError):
            parse_samples(bad)


def test_free_text_values_may_start_with_a_dash():
    assert join_free_text_values(["translate", "--samples", "-2:2:0.1", "--t", "0.5"]) == \
        ["translate", "--samples=-2:2:0.1", "--t", "0.5"]
    assert join_free_text_values(["check-eprime", "--symbol", "-xi^4"]) == ["check-eprime", "--symbol=-xi^4"]
    assert join_free_text_values(["check-l2", "--symbol", "--output", "x"]) == ["check-l2", "--symbol", "--output", "x"]
    assert join_free_text_values(["translate", "--samples"]) == ["translate", "--samples"]


def test_cli_solve(tmp_path):
    assert main(["solve", "--configs", write_config(tmp_path, SMALL_RUN)]) == EXIT_OK
    assert os.path.exists(tmp_path / "output" / "run" / TRAJECTORY_FILE)
    assert main(["solve", "--configs", write_config(tmp_path, BACKWARD_RUN, "backward.yaml")]) == EXIT_OVERFLOW
    bad = SMALL_RUN.replace("text: heat", "text: xi^(1/2)")
    assert main(["solve", "--configs", write_config(tmp_path, bad, "bad.yaml")]) == EXIT_CONFIG


def test_cli_checks(capsys, tmp_path):
    output = tmp_path / "l2"
    assert main(["check-l2", "--symbol", "backward-heat", "--output", str(output), "--blowup", "4"]) == EXIT_OK
    assert "NotInvariant" in capsys.readouterr().out
    assert (output / "l2_blowup.csv").exists()
    sidecar = yaml.safe_load((output / "l2_metadata.yaml").read_text(encoding="utf-8"))
    assert sidecar["run"]["verdicts"][0].startswith("L2 verdict")
    assert main(["check-eprime", "--symbol", "bilaplacian"]) == EXIT_OK
    assert "E' Invariant" in capsys.readouterr().out
    assert main(["check-eprime", "--diffop", "1:0,1", "--convention", "d"]) == EXIT_OK
    assert "m1-imaginary" in capsys.readouterr().out
    assert main(["check-eprime", "--symbol", "xi^(1/2)"]) == EXIT_CONFIG
    assert main(["check-eprime"]) == EXIT_CONFIG
    assert main(["check-eprime", "--symbol", "-xi^4"]) == EXIT_OK
    assert "E' Invariant" in capsys.readouterr().out


@pytest.mark.parametrize("text", ["xi^(1/0)", "0^(-1)*xi", "xi^100000000"])
def test_cli_rejects_degenerate_constants(text):
    assert main(["check-eprime", "--symbol", text]) == EXIT_CONFIG
    assert main(["check-l2", "--symbol", text]) == EXIT_CONFIG


@pytest.mark.parametrize("command, names", [
    ("check-l2", ["l2_blowup.csv", "--output"]),
    ("check-eprime", ["eprime_witnesses.csv", "--output"]),
])
def test_cli_help_names_the_written_tables(capsys, command, names):
    with pytest.raises(SystemExit):
        main([command, "--help"])
    out = capsys.readouterr().out
    for name in names:
        assert name in out


def test_cli_translate_and_seminorms(capsys):
    assert main(["translate", "--function", "gaussian", "--t", "0.5", "--samples", "-1:1:0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("s,series,exact,error,terms")
    assert main(["translate", "--function", "gaussian", "--t", "0.5", "--samples", "-2:2:0.1"]) == EXIT_OK
    assert len(capsys.readouterr().out.strip().splitlines()) == 42
    assert main(["translate", "--function", "lorentzian", "--t", "0.5"]) == EXIT_CONFIG
    assert main(["seminorms", "--field", "ones", "--J", "4", "--inv_h", "8"]) == EXIT_OK
    assert "metric to reference" in capsys.readouterr().out


def test_cli_verify_and_demo(tmp_path):
    assert main(["verify", "--scope", "symbol_lang"]) == EXIT_OK
    assert main(["verify", "--scope", "symbol_lang", "--inject_fault"]) == EXIT_VERIFY
    output = tmp_path / "demo"
    assert main(["heat-demo", "--output", str(output)]) == EXIT_OK
    assert (output / "heat_stages.csv").exists()
    assert (output / "heat_metadata.yaml").exists()

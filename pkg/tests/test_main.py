import json
import textwrap

import pytest

from Harness import scenarios
from Harness.main import EXIT_DEGRADED, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from Harness.output import read_timeseries
from Simulation.errors import NumericalDegradationError


def evolve_args(out, *extra):
    return ["evolve", "--nq", "5", "--K", "1.41421356", "--M", "32", "--steps", "260",
            "--pair", "1,2", "--out", str(out), *extra]


def test_selftest_passes():
    assert main(["selftest"]) == EXIT_OK


def test_evolve_writes_outputs(tmp_path):
    out = tmp_path / "evolve"
    assert main(evolve_args(out, "--block", "1..2")) == EXIT_OK
    for name in ("pipeline.log", "scenario.ini", "saturation.csv", "entropy.csv", "summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["scenario"] == "custom"
    assert {"timeseries_p00_M32_C_1_2.csv", "timeseries_p00_M32_S_1_2.csv"} <= set(summary["files"])


def test_run_config_file(tmp_path):
    out = tmp_path / "from_config"
    config = tmp_path / "small.ini"
    config.write_text(textwrap.dedent(f"""\
        [map]
        n_q = 5
        K = 1.41421356
        M = 16, 64

        [run]
        scenario = custom
        steps = 260
        pairs = 1,2; 2,3   # two pairs

        [output]
        path = {out}
    """), encoding="utf-8")
    assert main(["run", str(config)]) == EXIT_OK
    series = read_timeseries(str(out / "timeseries_p01_M64_C_2_3.csv"))
    assert series.steps("C_2_3") == list(range(1, 261))


def test_missing_config_is_io_error(tmp_path):
    assert main(["run", str(tmp_path / "absent.ini")]) == EXIT_IO


def test_bad_config_is_usage_error(tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[map]\nK = 1.4\nk = 0.2\nM = 10\n\n[run]\nscenario = custom\n\n[output]\npath = x\n",
                      encoding="utf-8")
    assert main(["run", str(config)]) == EXIT_USAGE


def test_missing_flag_exits_with_usage_status(tmp_path):
    with pytest.raises(SystemExit) as raised:
        main(["evolve", "--M", "32", "--out", str(tmp_path)])
    assert raised.value.code == EXIT_USAGE


def test_unknown_command_exits_with_usage_status():
    with pytest.raises(SystemExit) as raised:
        main(["plot"])
    assert raised.value.code == EXIT_USAGE


@pytest.mark.parametrize("flag, value", [("--K", "-1"), ("--nq", "1"), ("--pair", "2,9"), ("--steps", "10")])
def test_invalid_values_are_usage_errors(tmp_path, flag, value):
    args = evolve_args(tmp_path / "bad")
    args[args.index(flag) + 1] = value
    assert main(args) == EXIT_USAGE


def test_sweep_rejects_sparse_grid(tmp_path):
    args = ["sweep", "--K", "1.41421356", "--points-per-decade", "3", "--pair", "1,2", "--out", str(tmp_path)]
    assert main(args) == EXIT_USAGE


def test_degradation_exit_status(tmp_path, monkeypatch):
    def degrade(psi, i, j):
        raise NumericalDegradationError("injected")

    monkeypatch.setattr(scenarios, "concurrence_of_pair", degrade)
    out = tmp_path / "degraded"
    assert main(evolve_args(out)) == EXIT_DEGRADED
    assert (out / "summary.json").is_file()


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    assert main(evolve_args(blocker / "out")) == EXIT_IO

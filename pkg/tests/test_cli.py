import csv

import numpy as np
import pytest

from pinching_ee.ao import ALL_SCHEMES
from pinching_ee.cli import build_parser, main
from pinching_ee.config import ConfigError, build_spec, override, parse_config, parse_text


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_gives_defaults(tmp_path):
    spec = parse_config(_write(tmp_path, ""))
    sc = spec.base_scenario
    assert sc.antenna_height_m == 3.0
    assert sc.fixed_power_w == pytest.approx(0.01)
    assert sc.carrier_frequency_hz == 28e9
    assert sc.noise_power_w == pytest.approx(1e-12)
    assert sc.area_x_m == sc.waveguide_length_m == 120.0
    assert sc.area_y_m == 20.0
    assert spec.n_users == 5
    assert spec.max_power_dbm == 10.0
    assert spec.trials == 1000
    assert spec.schemes == ALL_SCHEMES
    assert spec.couple_length_to_area


@pytest.mark.parametrize("text", ["noise_power_dbm = −90", "noise_power_dbm = -90", "noise_power_dbm=-90  # comment"])
def test_noise_dbm_conversion(text):
    assert build_spec(parse_text(text)).base_scenario.noise_power_w == pytest.approx(1e-12, rel=1e-12)


def test_n_users_zero_names_key():
    with pytest.raises(ConfigError, match="n_users") as exc:
        parse_text("n_users = 0")
    assert exc.value.key == "n_users"


@pytest.mark.parametrize(
    "text, key",
    [
        ("bogus = 1", "bogus"),
        ("trials = many", "trials"),
        ("antenna_height_m = -3", "antenna_height_m"),
        ("schemes = noma-pso, fdma", "schemes"),
        ("sweep_param = noise", "sweep_param"),
        ("max_power_dbm = nan", "max_power_dbm"),
        ("trials = 5\ntrials = 6", "trials"),
    ],
)
def test_bad_values_name_their_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_text(text)
    assert exc.value.key == key
    assert key in str(exc.value)


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line|:1"):
        parse_text("trials 5")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.cfg")


def test_sweep_validation():
    with pytest.raises(ConfigError, match="sweep_values"):
        build_spec(parse_text("sweep_values = 5, 0"))
    with pytest.raises(ConfigError, match="sweep_values"):
        build_spec(parse_text("sweep_param = area_x_m"))
    with pytest.raises(ConfigError, match="grid_step_m"):
        build_spec(parse_text("grid_step_m = 500"))


def test_config_values_propagate(tmp_path):
    spec = parse_config(_write(tmp_path, """
        # custom sweep
        sweep_param = fixed_power_dbm
        sweep_values = 0, 10
        trials = 7
        master_seed = 99
        schemes = noma-pso, tdma
        waveguide_length_m = 60
        pso_swarm_size = 10
        dinkelbach_tolerance = 1e-8
    """))
    assert spec.sweep_param == "fixed_power_dbm" and spec.sweep_values == (0.0, 10.0)
    assert spec.trials == 7 and spec.master_seed == 99
    assert [s.value for s in spec.schemes] == ["noma-pso", "tdma"]
    assert spec.base_scenario.waveguide_length_m == 60.0 and not spec.couple_length_to_area
    assert spec.ao.pso.swarm_size == 10
    assert spec.ao.dinkelbach.tolerance == 1e-8


def test_override():
    spec = build_spec({})
    assert override(spec) is spec
    o = override(spec, seed=4, trials=3)
    assert (o.master_seed, o.trials) == (4, 3)


def test_parser_flags_long_form_only():
    p = build_parser()
    args = p.parse_args([])
    assert args.mode == "experiment" and args.seed is None
    with pytest.raises(SystemExit):
        p.parse_args(["--tri", "5"])
    with pytest.raises(SystemExit):
        p.parse_args(["fig2"])


# --- end to end -------------------------------------------------------------

FAST = "schemes = noma-pso, noma-fixed\nsweep_values = 0, 10\n"


def test_main_experiment_writes_files(tmp_path, capsys):
    cfg = _write(tmp_path, FAST)
    out = tmp_path / "out"
    code = main(["--config", str(cfg), "--out", str(out), "--trials", "3", "--seed", "1", "--log-level", "ERROR"])
    assert code == 0
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {r["scheme"] for r in rows} == {"noma-pso", "noma-fixed"}
    assert (out / "manifest.txt").exists()
    assert "noma-pso" in capsys.readouterr().out


def test_main_seed_determines_bytes(tmp_path):
    cfg = _write(tmp_path, FAST)
    def run(seed, name):
        main(["--config", str(cfg), "--out", str(tmp_path / name), "--trials", "3", "--seed", str(seed), "--log-level", "ERROR"])
        return (tmp_path / name / "results.csv").read_bytes()
    a, b, c = run(1, "a"), run(1, "b"), run(2, "c")
    assert a == b
    assert a != c


def test_main_preset(tmp_path):
    cfg = _write(tmp_path, "schemes = noma-fixed\n")
    out = tmp_path / "fig3"
    assert main(["--experiment", "fig3", "--config", str(cfg), "--out", str(out), "--trials", "2", "--log-level", "ERROR"]) == 0
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["sweep_value"]) for r in rows] == [0.0, 5.0, 10.0, 15.0, 20.0]
    assert {r["sweep_param"] for r in rows} == {"fixed_power_dbm"}


def test_main_solve_mode(tmp_path, capsys):
    out = tmp_path / "solve"
    assert main(["--mode", "solve", "--out", str(out), "--seed", "3", "--log-level", "ERROR"]) == 0
    with open(out / "solution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["scheme"] for r in rows] == [s.value for s in ALL_SCHEMES]
    for r in rows:
        powers = np.array([float(v) for v in r["powers_w"].split(";")])
        assert len(powers) == 5 and np.all(powers <= 0.01)
        assert 0 <= float(r["antenna_x_m"]) <= 120
    assert "noma-exhaustive" in capsys.readouterr().out


def test_main_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "n_users = 0\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "n_users" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_main_missing_config_exit_code(tmp_path):
    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2


def test_main_rejects_bad_overrides(tmp_path):
    assert main(["--trials", "0", "--out", str(tmp_path)]) == 2
    assert main(["--seed", "-1", "--out", str(tmp_path)]) == 2
    assert main(["--workers", "0", "--out", str(tmp_path)]) == 2


def test_main_unwritable_output(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    cfg = _write(tmp_path, FAST)
    assert main(["--config", str(cfg), "--out", str(blocker / "sub"), "--trials", "1", "--log-level", "ERROR"]) == 1

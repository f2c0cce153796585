import filecmp

import pytest

from degenlab.cli import main
from degenlab.config import ConfigError, load_config
from degenlab.params import read_constants_csv

SMALL = ["--set", "grid.h=0.05", "--set", "solver.t_end=0.1"]


def test_load_defaults_and_overrides():
    cfg = load_config(None, {"params.alpha": "2", "solver.t_end": "0.5"})
    assert cfg.params.alpha == 2 and cfg.solver.t_end == 0.5
    assert len(cfg.solver.snapshot_times) == 200
    assert cfg.resolved()["params.alpha"] == "2"


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[params]\nalpah = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(None, {"params.alpha": "one"})
    with pytest.raises(ConfigError):
        load_config(None, {"run.command": "dance"})


def test_exit_parse_and_invalid(tmp_path):
    assert main(["--set", "params.bogus=1", "--output", str(tmp_path)]) == 64
    assert main(["--set", "nodot=1"]) == 64
    assert main(["--set", "params.k2=0", "--output", str(tmp_path)]) == 65
    # certificate on inadmissible parameters
    assert main(["--command", "certify", "--set", "params.theta=1", "--output", str(tmp_path), *SMALL]) == 65


def test_constants_command(tmp_path):
    out = tmp_path / "c"
    assert main(["--command", "constants", "--output", str(out), "--set", "params.theta=1"]) == 0
    c = read_constants_csv(out / "constants.csv")
    assert c["Lambda"] == pytest.approx(0.2) and c["eps0"] == pytest.approx(0.4)
    assert c["lam"] == pytest.approx(4 / 3)
    assert "admissibility" in (out / "summary.txt").read_text()
    assert "exit_status = 0" in (out / "manifest.txt").read_text()


def test_certify_exit_codes(tmp_path):
    assert main(["--command", "certify", "--output", str(tmp_path / "z"), "--set", "initial.kind=zero", *SMALL]) == 0
    assert main(["--command", "certify", "--output", str(tmp_path / "h"), "--set", "params.alpha=0", *SMALL]) == 3
    text = (tmp_path / "h" / "certificate_report.txt").read_text()
    assert "Inconclusive" in text


def test_validate_command(tmp_path):
    args = ["--command", "validate", "--output", str(tmp_path), "--set", "grid.half_width=10",
            "--set", "grid.h=0.05", "--set", "solver.t_end=1", "--set", "initial.kind=barenblatt",
            "--set", "solver.snapshots=20"]
    assert main(args) == 0
    assert "pass = True" in (tmp_path / "summary.txt").read_text()


def test_unstable_exit(tmp_path):
    assert main(["--command", "solve", "--output", str(tmp_path), "--set", "solver.max_steps=5", *SMALL]) == 70


def test_solve_sweep_walk_deterministic(tmp_path):
    for cmd, extra in [("sweep", ["--set", "solver.snapshots=2"]),
                       ("walk", ["--set", "walkers.particles=2000", "--set", "walkers.tau_ref=0.001"])]:
        a, b = tmp_path / f"{cmd}a", tmp_path / f"{cmd}b"
        for out in (a, b):
            assert main(["--command", cmd, "--output", str(out), "--seed", "3", *SMALL, *extra]) == 0
        csvs = sorted(p.name for p in a.glob("*.csv"))
        assert csvs
        match, mismatch, errors = filecmp.cmpfiles(a, b, csvs, shallow=False)
        assert not mismatch and not errors


def test_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\ncommand = solve\n[grid]\nh = 0.05\n[solver]\nt_end = 0.05\nsnapshots = 2\n")
    assert main(["--config", str(ini), "--output", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "snapshots" / "snapshot_0002.csv").exists()

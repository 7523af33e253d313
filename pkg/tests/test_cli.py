import csv
import io
import subprocess
import sys

import pytest

from mwsn.cli import main
from mwsn.results import RAW_COLUMNS


def read_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def write_config(tmp_path, text):
    p = tmp_path / "trial.conf"
    p.write_text(text)
    return str(p)


def test_run_writes_trial_and_events(tmp_path):
    cfg = write_config(tmp_path, "sim.nodes = 20\nsim.max_rounds = 3\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    rows = read_rows(out / "trial.csv")
    assert len(rows) == 1 and list(rows[0]) == list(RAW_COLUMNS)
    assert rows[0]["censored"] == "true" and rows[0]["lifetime_rounds"] == "3"
    assert (out / "events.log").read_text().count("\n") >= 3
    assert not any(p.name.startswith(".partial") for p in out.iterdir())


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, "sim.nodes = 5\nsim.max_rounds = 1\nsim.seed = 3\n")

    def seed_of(*extra):
        out = tmp_path / f"o{len(list(tmp_path.iterdir()))}"
        assert main(["run", "--config", cfg, "--out", str(out), *extra]) == 0
        return read_rows(out / "trial.csv")[0]["seed"]

    monkeypatch.delenv("MWSN_SEED", raising=False)
    assert seed_of() == "3"
    monkeypatch.setenv("MWSN_SEED", "11")
    assert seed_of() == "11"
    assert seed_of("--seed", "17") == "17"


def test_bad_env_seed_is_a_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("MWSN_SEED", "abc")
    assert main(["run", "--out", str(tmp_path / "x")]) == 2


def test_sweep_example_row_count(tmp_path):
    cfg = write_config(tmp_path, "sim.max_rounds = 2\n")
    out = tmp_path / "s"
    code = main(["sweep", "--config", cfg, "--protocols", "all", "--nodes", "100", "--speeds", "5", "--seeds", "2", "--out", str(out)])
    assert code == 0
    assert len(read_rows(out / "sweep_raw.csv")) == 12
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted([
        "sweep_raw.csv", "sweep_agg.csv", "fig_pdr_vs_nodes.csv", "fig_pdr_vs_speed.csv",
        "fig_loss_vs_speed.csv", "fig_loss_vs_nodes.csv", "fig_ctrl_pkts.csv",
        "fig_lifetime_vs_nodes.csv", "fig_lifetime_vs_speed.csv",
    ])
    fig = read_rows(out / "fig_ctrl_pkts.csv")
    assert fig[0]["nodes"] == "100" and fig[0]["DECA"] == "1.0"


def test_sweep_output_is_byte_identical_across_job_counts(tmp_path):
    cfg = write_config(tmp_path, "sim.max_rounds = 4\n")
    outs = []
    for jobs in ("1", "8", "1"):
        out = tmp_path / f"j{len(outs)}"
        argv = ["sweep", "--config", cfg, "--protocols", "DEMC,GRC_RECOVERY", "--nodes", "30,60",
                "--speeds", "0,10", "--seeds", "2", "--jobs", jobs, "--out", str(out)]
        assert main(argv) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1] == outs[2]


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--nodes", "", "--seeds", "1"],
        ["sweep", "--nodes", "10,x"],
        ["sweep", "--speeds", "-5"],
        ["sweep", "--seeds", "0"],
        ["sweep", "--jobs", "0"],
        ["sweep", "--protocols", "LEACH"],
    ],
)
def test_sweep_usage_errors_exit_2(tmp_path, argv):
    out = tmp_path / "never"
    assert main(argv + ["--out", str(out)]) == 2
    assert not out.exists()


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "protocol.kind = GRC\nprotocol.w2 = 0.8\nprotocol.w1 = 0.2\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "0 < w2 < w1" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.conf"), "--out", str(tmp_path / "o")]) == 2
    bad = write_config(tmp_path, "no.such.key = 1\n")
    assert main(["run", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_runtime_failure_leaves_no_partial_output(tmp_path, monkeypatch):
    import mwsn.cli as cli

    def boom(self):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli.Simulation, "run", boom)
    out = tmp_path / "o"
    assert main(["run", "--out", str(out)]) == 1
    assert not out.exists()
    existing = tmp_path / "keep"
    existing.mkdir()
    (existing / "old.csv").write_text("x\n")
    assert main(["run", "--out", str(existing)]) == 1
    assert [p.name for p in existing.iterdir()] == ["old.csv"]


def test_describe_config(capsys):
    assert main(["describe-config"]) == 0
    out = capsys.readouterr().out
    assert "energy.initial_j | float | J | 3.0" in out
    assert "radio.e_elec_nj_per_bit | float | nJ/bit | 50.0" in out
    range_line = next(line for line in out.splitlines() if line.startswith("radio.range_m"))
    assert "derived" in range_line


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mwsn", "describe-config"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "sim.seed" in proc.stdout
    assert proc.stderr == ""

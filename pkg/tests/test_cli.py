import json

import numpy as np
import pytest

from sbmexit import cli


def test_parse_verify_example():
    s = cli.parse_config(["verify", "--d", "3", "--experiment", "prop44", "--x", "1.0", "--eps", "0.3,0.2,0.1",
                          "--seed", "42"])
    assert s.command == "verify" and s.experiment == "prop44" and s.eps == (0.3, 0.2, 0.1) and s.seed == 42


def test_missing_d():
    with pytest.raises(cli.ConfigError, match="d"):
        cli.parse_config(["verify", "--experiment", "prop44"])


def test_eps_precondition():
    with pytest.raises(cli.ConfigError, match="ε < |x| required"):
        cli.parse_config(["verify", "--d", "3", "--eps", "0.3", "--x", "0.2"])


def test_config_file_and_override(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("[general]\nd = 3\nseed = 9\n[verify]\nexperiment = martingales\nx = 1.5\n")
    s = cli.parse_config(["verify", "--config", str(f), "--seed", "10"])
    assert (s.d, s.seed, s.experiment, s.x) == (3, 10, "martingales", 1.5)
    f.write_text("[general]\nd = 3\nfoo = 1\n")
    with pytest.raises(cli.ConfigError, match="unknown"):
        cli.parse_config(["verify", "--config", str(f)])
    f.write_text("[verify]\nd = 3\ngamma = 1\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(["verify", "--config", str(f)])
    f.write_text("[other]\nd = 3\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(["verify", "--config", str(f)])


def test_ode_command(tmp_path):
    assert cli.main(["ode", "--d", "3", "--lambda", "2", "--eps", "1", "--out", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "ode_profile.csv", delimiter=",", skiprows=1)
    r, u = data[:, 0], data[:, 1]
    keep = r <= 50
    assert np.max(np.abs(u[keep] * r[keep] ** 2 - 2)) < 1e-6
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report[0]) >= {"name", "estimate", "stderr", "target", "tolerance_rule", "pass"}


def test_bessel_command(tmp_path):
    code = cli.main(["bessel", "--check", "lemma41", "--d", "3", "--gamma", "2", "--r", "2", "--replicates", "5000",
                     "--out", str(tmp_path)])
    row = json.loads((tmp_path / "report.json").read_text())[0]
    assert row["target"] == pytest.approx(2 ** ((17**0.5 - 1) / 2), rel=1e-12)
    assert code == (0 if row["pass"] else 1)


def test_exit_codes(tmp_path):
    assert cli.main(["verify", "--d", "3"] + ["--eps", "0.5", "--x", "0.2"]) == 2
    assert cli.main(["bessel", "--d", "3", "--check", "nope"]) == 2
    # runtime failure: too few clusters reach the sphere
    assert cli.main(["verify", "--d", "3", "--experiment", "prop44", "--replicates", "2", "--out",
                     str(tmp_path)]) == 2


def test_sim_command(tmp_path):
    assert cli.main(["sim", "--d", "3", "--N", "50", "--replicates", "50", "--eps", "0.3,0.2", "--r-kill", "2",
                     "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sim_samples.csv").read_text().startswith("replicate,eps_0")
    summary = json.loads((tmp_path / "sim_summary.json").read_text())
    assert summary["n"] == 50


def test_verify_deterministic(tmp_path):
    args = ["verify", "--d", "3", "--experiment", "martingales", "--scale", "0.02", "--seed", "7"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b"), "--threads", "2"])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

import csv
import io
import json
import subprocess
import sys

import pytest

from qnets import cli
from qnets.cli import ScenarioConfig
from qnets.errors import UsageError

QUICK = {
    "interferometer": {},
    "superdense": {},
    "teleport": {},
    "bb84": {"n": "2000"},
    "b92": {"n": "4000"},
    "byzantine": {"m": "30"},
    "fingerprint": {},
    "ewl": {},
    "contract": {},
    "grover": {"n": "6"},
    "shor": {},
    "netsim": {},
}


def run_main(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_flags(self):
        config, _ = cli.parse_config(["--scenario", "bb84", "--n", "1000", "--lambda", "0.1", "--seed", "1"])
        assert config.scenario == "bb84" and config.seed == 1
        assert config.params["n"] == 1000 and config.params["lambda"] == 0.1

    def test_unknown_key(self):
        with pytest.raises(UsageError, match="foo"):
            cli.parse_config(["--scenario", "bb84", "--foo", "3"])

    def test_unknown_scenario(self):
        with pytest.raises(UsageError, match="unknown scenario"):
            ScenarioConfig("tetris")

    def test_missing_seed(self):
        config, _ = cli.parse_config(["--scenario", "teleport"])
        assert isinstance(config.seed, int) and config.seed_source == "entropy"
        report = cli.run_scenario(config)
        assert report["seed"] == config.seed and report["seed_source"] == "entropy"

    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# demo\nscenario = bb84\nn = 5000\nlambda = 0.5  # heavy\nseed = 3\n")
        config, _ = cli.parse_config(["--config", str(cfg), "--lambda", "1"])
        assert config.params["n"] == 5000 and config.params["lambda"] == 1.0 and config.seed == 3

    def test_line_context(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("scenario = bb84\nthis line is wrong\n")
        with pytest.raises(UsageError, match="line 2"):
            cli.parse_config(["--config", str(cfg)])

    def test_bad_value(self):
        with pytest.raises(UsageError, match="n"):
            ScenarioConfig("bb84", {"n": "many"})

    @pytest.mark.parametrize("value, expected", [("true", True), ("0", False), ("yes", True)])
    def test_bool_coercion(self, value, expected):
        assert ScenarioConfig("grover", {"k_known": value}, seed=0).params["k_known"] is expected

    def test_trials_positive(self):
        with pytest.raises(UsageError):
            ScenarioConfig("teleport", trials=0)

    def test_no_scenario(self):
        with pytest.raises(UsageError):
            cli.parse_config(["--seed", "1"])

    def test_no_prefix_matching(self):
        config, _ = cli.parse_config(["--scenario", "netsim", "--src", "H1", "--seed", "2"])
        assert config.params["src"] == "H1"


class TestScenarios:
    @pytest.mark.parametrize("name", sorted(QUICK))
    def test_each_runs(self, name):
        report = cli.run_scenario(ScenarioConfig(name, dict(QUICK[name]), trials=2, seed=5))
        assert report["scenario"] == name and len(report["trials"]) == 2
        assert json.loads(cli.render_report(report, "json"))["seed"] == 5

    def test_bb84_full_attack(self):
        report = cli.run_scenario(ScenarioConfig("bb84", {"n": "100000", "lambda": "1"}, trials=10, seed=7))
        assert report["aggregates"]["qber"]["mean"] == pytest.approx(0.25, abs=0.02)
        assert report["aborted_trials"] == 10

    def test_grover_rate(self):
        report = cli.run_scenario(ScenarioConfig("grover", {"n": "10", "k": "1"}, trials=5, seed=1))
        assert report["aggregates"]["success_probability"]["mean"] >= 0.99

    def test_determinism(self):
        def make():
            config = ScenarioConfig("byzantine", {"adversary": "r0_cheats"}, trials=20, seed=11)
            return cli.render_report(cli.run_scenario(config), "json")

        assert make() == make()

    def test_trial_streams_independent_of_count(self):
        a = cli.run_scenario(ScenarioConfig("teleport", trials=3, seed=4))["trials"]
        b = cli.run_scenario(ScenarioConfig("teleport", trials=5, seed=4))["trials"]
        assert a == b[:3]

    def test_netsim_exhaustion_is_abort(self):
        report = cli.run_scenario(ScenarioConfig("netsim", {"pairs_per_edge": "0"}, seed=1))
        assert report["aborted_trials"] == 1 and report["trials"][0]["fidelity"] == 0.0

    def test_netsim_relay_exposure(self):
        report = cli.run_scenario(ScenarioConfig("netsim", {"mode": "relay", "dst": "R0.1"}, seed=1))
        assert report["trials"][0]["exposure"] == "R0.0;R1.0"

    def test_domain_error_becomes_usage(self):
        with pytest.raises(UsageError):
            cli.run_scenario(ScenarioConfig("shor", {"M": "35"}, seed=1))

    def test_transcript(self, tmp_path):
        path = tmp_path / "pulses.txt"
        cli.run_scenario(ScenarioConfig("bb84", {"n": "500", "transcript": str(path)}, seed=1))
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#") and len(lines) == 501


@pytest.fixture(scope="module")
def report():
    return cli.run_scenario(ScenarioConfig("bb84", {"n": "3000", "lambda": "0.1"}, trials=6, seed=2))


class TestReports:
    def test_csv_shape(self, report):
        text = cli.render_report(report, "csv")
        assert "\r" not in text
        rows = list(csv.reader(io.StringIO(text)))
        assert len(rows) == 6 + 1
        header = rows[0]
        assert header[0] == "trial"
        assert {"sifted_fraction", "qber", "final_key_len", "aborted"} <= set(header)

    def test_json_schema(self, report):
        doc = json.loads(cli.render_report(report, "json"))
        assert set(doc) == {"scenario", "seed", "seed_source", "config", "trials", "aggregates", "ledger", "aborted_trials"}
        assert all(set(a) == {"mean", "half_width"} for a in doc["aggregates"].values())

    def test_aggregates_recomputable(self, report):
        rows = list(csv.DictReader(io.StringIO(cli.render_report(report, "csv"))))
        for key in ("qber", "sifted_fraction", "final_key_len"):
            mean = sum(float(r[key]) for r in rows) / len(rows)
            assert mean == pytest.approx(report["aggregates"][key]["mean"], abs=1e-9)

    def test_twelve_digits(self):
        assert cli._sig12(1 / 3) == 0.333333333333

    def test_emit_atomic(self, report, tmp_path):
        target = tmp_path / "out.json"
        cli.emit_report(report, "json", target)
        assert json.loads(target.read_text())["scenario"] == "bb84"
        assert [p.name for p in tmp_path.iterdir()] == ["out.json"]

    def test_emit_bad_path(self, report, tmp_path):
        with pytest.raises(OSError, match="missing"):
            cli.emit_report(report, "csv", tmp_path / "missing" / "out.csv")


class TestMain:
    def test_list(self, capsys):
        code, out, _ = run_main(["--list"], capsys)
        assert code == 0 and all(name in out for name in cli.SCENARIOS)

    def test_success(self, capsys):
        code, out, _ = run_main(["--scenario", "superdense", "--trials", "4", "--seed", "1"], capsys)
        assert code == 0 and json.loads(out)["aggregates"]["correct"]["mean"] == 1.0

    def test_abort_exit(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, _, _ = run_main(["--scenario", "bb84", "--n", "20000", "--lambda", "1", "--seed", "1", "--format", "csv", "--out", str(out)], capsys)
        assert code == 1 and out.exists()

    def test_usage_exit(self, capsys):
        code, _, err = run_main(["--scenario", "bb84", "--foo", "1"], capsys)
        assert code == 2 and "foo" in err

    def test_unwritable_exit(self, tmp_path, capsys):
        code, _, err = run_main(["--scenario", "teleport", "--seed", "1", "--out", str(tmp_path / "no" / "x.json")], capsys)
        assert code == 2 and "no" in err

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "qnets", "--scenario", "ewl", "--seed", "3", "--format", "csv"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0 and proc.stdout.startswith("trial,")

import json

import pytest

from opeval.cli import cli_dispatch
from opeval.harness import RESULTS_HEADER


@pytest.fixture
def workdir(tmp_path):
    return tmp_path


def run(*argv):
    return cli_dispatch([str(a) for a in argv])


class TestSynthAndSimulate:
    def test_full_pipeline(self, workdir):
        data = workdir / "d.csv"
        log = workdir / "log.jsonl"
        tm, lm = workdir / "t.model", workdir / "l.model"
        assert run("synth", "--classes", 3, "--dim", 3, "--per-class", 40,
                   "--seed", 1, "--out", data) == 0
        assert run("simulate", "--data", data, "--channel", "noisy", "--n", 120,
                   "--seed", 2, "--iterations", 80, "--out", log,
                   "--target-model-out", tm, "--logging-model-out", lm) == 0
        assert log.exists() and tm.exists() and lm.exists()
        header = json.loads(log.read_text().splitlines()[0])
        assert header["num_actions"] == 3

    def test_evaluate_auto_embeds_trace(self, workdir, capsys):
        data, log = workdir / "d.csv", workdir / "log.jsonl"
        tm, lm = workdir / "t.model", workdir / "l.model"
        run("synth", "--classes", 3, "--dim", 3, "--per-class", 40, "--seed", 1, "--out", data)
        run("simulate", "--data", data, "--n", 100, "--seed", 2, "--iterations", 80,
            "--out", log, "--target-model-out", tm, "--logging-model-out", lm)
        out = workdir / "report.json"
        assert run("evaluate", "--log", log, "--target-model", tm, "--logging-model", lm,
                   "--estimator", "switch-dr", "--tau", "auto", "--iterations", 80,
                   "--out", out) == 0
        payload = json.loads(out.read_text())
        assert "tuning" in payload
        assert payload["tuning"]["chosen_tau"] == payload["tau"]
        assert len(payload["tuning"]["taus"]) == 21

    def test_evaluate_fixed_tau(self, workdir):
        data, log = workdir / "d.csv", workdir / "log.jsonl"
        tm, lm = workdir / "t.model", workdir / "l.model"
        run("synth", "--classes", 3, "--dim", 3, "--per-class", 40, "--seed", 1, "--out", data)
        run("simulate", "--data", data, "--n", 100, "--seed", 2, "--iterations", 80,
            "--out", log, "--target-model-out", tm, "--logging-model-out", lm)
        out = workdir / "report.json"
        assert run("evaluate", "--log", log, "--target-model", tm, "--logging-model", lm,
                   "--estimator", "ips", "--iterations", 80, "--out", out) == 0
        payload = json.loads(out.read_text())
        assert "tuning" not in payload
        assert "value" in payload


class TestSweep:
    def test_writes_documented_header(self, workdir):
        config = {
            "schema": "opeval-experiment/1",
            "master_seed": 5,
            "channel": "noisy",
            "replicates": 4,
            "sizes": [60],
            "estimators": ["ips", "dm"],
            "datasets": [
                {"kind": "synth", "name": "s1", "num_classes": 3, "dim": 3,
                 "per_class": 30, "separation": 2.0, "seed": 4}
            ],
            "trainer": {"iterations": 60},
        }
        cpath = workdir / "c.json"
        cpath.write_text(json.dumps(config))
        out = workdir / "r.csv"
        assert run("sweep", "--config", cpath, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == RESULTS_HEADER
        assert len(lines) == 3
        assert (workdir / "r.csv.meta.json").exists()

    def test_missing_config_is_validation_error(self, workdir, capsys):
        missing = workdir / "missing.json"
        assert run("sweep", "--config", missing, "--out", workdir / "r.csv") == 1
        assert str(missing) in capsys.readouterr().err


class TestExitCodes:
    def test_unknown_subcommand(self):
        assert run("frobnicate") == 1

    def test_unknown_flag(self):
        assert run("synth", "--bogus", 3) == 1

    def test_bad_schema_config(self, workdir):
        cpath = workdir / "c.json"
        cpath.write_text(json.dumps({"schema": "wrong/0", "datasets": [], "estimators": []}))
        assert run("sweep", "--config", cpath, "--out", workdir / "r.csv") == 1

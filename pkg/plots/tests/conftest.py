import json
import subprocess
import sys

import pytest


SWEEP_CONFIG = {
    "schema": "opeval-experiment/1",
    "master_seed": 90,
    "channel": "noisy",
    "replicates": 10,
    "sizes": [60, 120],
    "estimators": ["ips", "dm", {"name": "switch-dr", "tau": "auto"}],
    "datasets": [
        {"kind": "synth", "name": "plot-a", "num_classes": 3, "dim": 4,
         "per_class": 50, "separation": 2.0, "seed": 1},
        {"kind": "synth", "name": "plot-b", "num_classes": 4, "dim": 5,
         "per_class": 40, "separation": 1.5, "seed": 2},
    ],
    "trainer": {"iterations": 80},
    "oracle": True,
    "oracle_estimators": ["trim-ips", "trun-ips"],
}


@pytest.fixture(scope="session")
def sweep_csv(tmp_path_factory):
    """A real results CSV produced through the harness CLI, the external
    interface this package consumes."""
    root = tmp_path_factory.mktemp("sweep")
    config = root / "config.json"
    out = root / "results.csv"
    config.write_text(json.dumps(SWEEP_CONFIG))
    subprocess.run(
        [sys.executable, "-m", "opeval.cli", "sweep", "--config", str(config),
         "--out", str(out)],
        check=True,
        capture_output=True,
        text=True,
    )
    return out

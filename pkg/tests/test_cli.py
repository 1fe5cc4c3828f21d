from __future__ import annotations

import hashlib
import json
import os
import subprocess
import sys

import pytest

from fge.cli import build_parser, main, resolve_config

SMALL_CONFIG = """# small synthetic run
seed = 3
synth.n_firms = 30
synth.n_insiders = 150
synth.n_intents = 1000
smote_alpha = 0.5, 1.0
pos_weight = 1, 32.5
"""


@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL_CONFIG)
    return p


def _cli(*args, env=None):
    full_env = {**os.environ, **(env or {})}
    return subprocess.run([sys.executable, "-m", "fge.cli", *args], capture_output=True, text=True, env=full_env)


def test_missing_dependency_names_the_file(tmp_path, capsys):
    assert main(["audit", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "outcomes.csv" in err and "missing input" in err


def test_flags_override_config_file(config_file):
    parser = build_parser()
    cfg = resolve_config(parser.parse_args(["match", "--config", str(config_file), "--seed", "9"]))
    assert cfg.seed == 9
    assert cfg.smote_alpha == (0.5, 1.0)
    assert cfg.synth == {"n_firms": "30", "n_insiders": "150", "n_intents": "1000"}
    cfg = resolve_config(parser.parse_args(["match", "--config", str(config_file)]))
    assert cfg.seed == 3


def test_bad_config_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("no_such_key = 1\n")
    assert main(["synth", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "no_such_key" in capsys.readouterr().err
    p.write_text("just words\n")
    assert main(["synth", "--config", str(p), "--out", str(tmp_path)]) == 1


def test_unknown_stage_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nonsense"])


def test_log_level_from_environment(tmp_path, config_file):
    quiet = _cli("synth", "--config", str(config_file), "--out", str(tmp_path / "a"))
    loud = _cli("synth", "--config", str(config_file), "--out", str(tmp_path / "b"), env={"FGE_LOG": "INFO"})
    assert quiet.returncode == loud.returncode == 0
    assert "stage synth" not in quiet.stderr
    assert "stage synth" in loud.stderr


def test_manifest_records_hashes_and_is_stable(tmp_path, config_file):
    for name in ("a", "b"):
        assert main(["synth", "--config", str(config_file), "--out", str(tmp_path / name)]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["config_hash"] == mb["config_hash"]
    assert ma["seed"] == 3 and ma["generator"] == "numpy.random.PCG64"
    outputs = ma["stages"]["synth"]["outputs"]
    assert outputs == mb["stages"]["synth"]["outputs"]
    for rel, digest in outputs.items():
        assert hashlib.sha256((tmp_path / "a" / rel).read_bytes()).hexdigest() == digest
    assert ma["stages"]["synth"]["row_counts"]["intents"] == 1000


def test_stagewise_run_over_external_universe(tmp_path, config_file):
    assert main(["synth", "--config", str(config_file), "--out", str(tmp_path / "gen")]) == 0
    u = tmp_path / "gen" / "universe"
    args = ["--intents", str(u / "intents.csv"), "--executions", str(u / "executions.csv"),
            "--security", str(u / "security_panel.csv"), "--factors", str(u / "factors.csv"),
            "--out", str(tmp_path / "run")]
    assert main(["match", *args]) == 1  # ingest has not run yet
    assert main(["ingest", *args]) == 0
    assert main(["match", *args]) == 0
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert set(manifest["stages"]) == {"ingest", "match"}
    assert (tmp_path / "run" / "outcomes.csv").exists()

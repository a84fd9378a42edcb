import json

import pytest

from cli.commands import EXIT_CONFIG, EXIT_OK, build_parser, main
from storage.io_manager import read_table

TINY = {
    "dataset": {"num_classes": 3, "dim": 4, "train_per_class": 8, "test_per_class": 10},
    "methods": [{"kind": "standard"}, {"kind": "forward", "alpha": 0.2}],
    "seeds": [0, 1, 2],
    "train": {"epochs": 2, "batch_size": 8},
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(TINY), encoding="utf-8")
    return path


def test_parser_rejects_unknown_verb():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train"])


def test_malformed_config_exits_with_config_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"methods\": [{\"kind\": \"magic\"}]}", encoding="utf-8")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_missing_config_exits_with_config_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_run_writes_tables(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    assert len(read_table(out / "runs.csv")) == 6
    assert len(read_table(out / "summary.csv")) == 2


def test_seed_override(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--seed-override", "7"]) == EXIT_OK
    assert {row["seed"] for row in read_table(out / "runs.csv")} == {"7"}


def test_transition_file_is_ignored_by_symmetric_noise(tmp_path, config_file):
    out = tmp_path / "out"
    code = main(["estimate-t", "--config", str(config_file), "--out", str(out),
                 "--transition-file", str(tmp_path / "absent.csv")])
    assert code == EXIT_OK
    assert (out / "transition_estimate_seed0.csv").exists()

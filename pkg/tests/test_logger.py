import logging

import pytest

from utils.logger import current_level_name, get_run_logger, setup_logger


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
    logging.captureWarnings(False)


def test_run_logger_prefixes_grid_point():
    adapter = get_run_logger("cli.controllers", "LS(0.1)", 3)
    message, _ = adapter.process("diverged", {})
    assert message == "[LS(0.1) seed=3] diverged"


def test_setup_logger_writes_file(tmp_path, restore_root):
    log_file = tmp_path / "logs" / "lab.log"
    setup_logger(log_file=log_file, level="debug")
    assert current_level_name() == "DEBUG"
    logging.getLogger("core.training").debug("epoch 1")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "core.training - DEBUG - epoch 1" in log_file.read_text(encoding="utf-8")


def test_unknown_level_falls_back_to_info(restore_root):
    setup_logger(level="chatty")
    assert current_level_name() == "INFO"

"""
Label Smearing Lab - Main Application Entry Point
Label smoothing, loss correction and distillation experiments under label noise.
"""
import sys

import config
from utils.logger import setup_logger, get_logger
from cli.commands import main as run_cli

# Setup logging
setup_logger()
logger = get_logger(__name__)


def main() -> int:
    """Main application entry point."""
    logger.info(f"Starting {config.APP_NAME} v{config.VERSION}")
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())

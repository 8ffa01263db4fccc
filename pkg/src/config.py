"""Paths shared by the CLI and the logging setup."""
from pathlib import Path

SRC_PATH = Path(__file__).resolve().parent

LOGGING_CONFIG_PATH = SRC_PATH / "handling_logging" / "logging_config.json"
# Overridden by `--log-dir`
LOGS_PATH = Path.cwd() / "logs"

# Pixel images handled throughout (MNIST / Fashion-MNIST)
IMAGE_SIDE = 28
IMAGE_PIXELS = IMAGE_SIDE * IMAGE_SIDE

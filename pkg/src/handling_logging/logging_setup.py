"""Apply the JSON logging configuration; stdout is left to command results."""
import json
import logging
import logging.config
from pathlib import Path

from config import LOGGING_CONFIG_PATH, LOGS_PATH

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False, log_dir: Path | None = None) -> Path | None:
    """
    Configure the root logger from ``logging_config.json``.

    Returns the log directory, or None when the config file is missing (a
    stderr-only basicConfig is applied instead).
    """
    config = load_config()
    if config is None:
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
        logger.warning("Logging configuration not found at %s; using basicConfig", LOGGING_CONFIG_PATH)
        return None

    log_dir = Path(log_dir) if log_dir is not None else LOGS_PATH
    create_log_directory(log_dir)
    update_config_with_logfile_path(config, log_dir)
    if verbose:
        config["handlers"]["stderr"]["level"] = "DEBUG"

    logging.config.dictConfig(config)
    logger.debug("Logging configuration applied from %s, files in %s", LOGGING_CONFIG_PATH, log_dir)
    return log_dir


def load_config() -> dict | None:
    if not LOGGING_CONFIG_PATH.exists():
        return None
    with open(LOGGING_CONFIG_PATH, encoding="utf-8") as f:
        return json.load(f)


def create_log_directory(log_dir: Path) -> None:
    log_dir.mkdir(parents=True, exist_ok=True)


def update_config_with_logfile_path(config: dict, log_dir: Path) -> None:
    """Point every file handler at ``log_dir``."""
    for handler in config.get("handlers", {}).values():
        if "filename" in handler:
            handler["filename"] = str(log_dir / Path(handler["filename"]).name)

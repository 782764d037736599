import logging
import sys
from logging.handlers import RotatingFileHandler

from app.core.config import settings

# Define the format for the logs
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str | None = None, log_file: str | None = None):
    """
    Set up logging to both console and file.

    Console output goes to stderr so that commands writing CSV/JSON to stdout stay
    machine-parseable. Calling this twice does not duplicate handlers.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel((level or settings.LOG_LEVEL).upper())

    if getattr(root_logger, "_eeg_glt_configured", False):
        return

    formatter = logging.Formatter(LOG_FORMAT)

    # Create a handler for console output
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    root_logger.addHandler(stream_handler)

    # Create a handler for file output
    log_file = log_file if log_file is not None else settings.LOG_FILE
    if log_file:
        file_handler = RotatingFileHandler(log_file, maxBytes=1000000, backupCount=1, encoding="utf8")
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    root_logger._eeg_glt_configured = True

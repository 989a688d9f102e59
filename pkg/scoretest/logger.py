import logging
import os
from datetime import datetime

from scoretest.config import LOG_DIR, LOG_LEVEL, LOG_TO_FILE

LOG_FORMAT = "%(asctime)s | %(name)s | %(levelname)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Main logger
logger = logging.getLogger("SCORETEST")

# Component loggers
score_logger = logging.getLogger("SCORETEST.SCORE")
models_logger = logging.getLogger("SCORETEST.MODELS")
sampler_logger = logging.getLogger("SCORETEST.SAMPLER")
exponent_logger = logging.getLogger("SCORETEST.EXPONENT")
sweep_logger = logging.getLogger("SCORETEST.SWEEP")
train_logger = logging.getLogger("SCORETEST.TRAIN")
ingest_logger = logging.getLogger("SCORETEST.INGEST")
cli_logger = logging.getLogger("SCORETEST.CLI")
api_logger = logging.getLogger("SCORETEST.API")

_configured = False


def configure_logging(level: str = LOG_LEVEL, to_file: bool = LOG_TO_FILE, log_dir: str = LOG_DIR) -> None:
    """Attach console (and optionally file) handlers to the project logger.

    Safe to call more than once; only the first call installs handlers.
    """
    global _configured
    if _configured:
        return

    handlers = [logging.StreamHandler()]
    log_filename = None
    if to_file:
        os.makedirs(log_dir, exist_ok=True)
        log_filename = os.path.join(log_dir, f"scoretest_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
        handlers.append(logging.FileHandler(log_filename))

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    for handler in handlers:
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    _configured = True

    logger.info("=" * 80)
    logger.info("SCORETEST STARTED")
    logger.info("=" * 80)
    if log_filename:
        logger.debug(f"Log file: {log_filename}")

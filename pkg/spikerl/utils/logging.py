import json
import logging
import os
from logging.handlers import RotatingFileHandler

EVENTS_LEVEL_NUM = 38
DEFAULT_LOG_BACKUP_COUNT = 10
EVENTS_LOGGER_NAME = "spikerl.events"


def setup_events_logger(full_path, events_retention_size):
    """
    Rotating ``events.log`` in ``full_path`` at the custom EVENT level.

    Calling it again for a new run directory replaces the previous file handler.
    """
    logging.addLevelName(EVENTS_LEVEL_NUM, "EVENT")

    logger = logging.getLogger(EVENTS_LOGGER_NAME)
    logger.setLevel(EVENTS_LEVEL_NUM)
    logger.propagate = False

    def event(self, message, *args, **kws):
        if self.isEnabledFor(EVENTS_LEVEL_NUM):
            self._log(EVENTS_LEVEL_NUM, message, args, **kws)

    logging.Logger.event = event

    formatter = logging.Formatter(
        "%(asctime)s | %(levelname)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    file_handler = RotatingFileHandler(
        os.path.join(full_path, "events.log"),
        maxBytes=int(events_retention_size),
        backupCount=DEFAULT_LOG_BACKUP_COUNT,
    )
    file_handler.setFormatter(formatter)
    file_handler.setLevel(EVENTS_LEVEL_NUM)
    logger.addHandler(file_handler)

    return logger


def log_event(kind: str, **fields):
    """Write one structured line (``kind`` plus JSON fields) to the events log, if one is set up."""
    logger = logging.getLogger(EVENTS_LOGGER_NAME)
    if not logger.handlers:
        return
    logger.log(EVENTS_LEVEL_NUM, f"{kind} | {json.dumps(fields, sort_keys=True, default=float)}")

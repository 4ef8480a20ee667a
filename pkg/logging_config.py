import logging
from logging.config import dictConfig
from typing import Optional

from config.settings import settings


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """
    Route the ``vqaa.<module>`` loggers to the console and, optionally, a file.

    Python warnings raised inside numpy/scipy (complex casts, eigsh
    non-convergence) are captured into the same stream.

    Args:
        level: DEBUG, INFO, WARNING or ERROR (defaults to settings.LOG_LEVEL)
        log_file: Extra plain-text log, typically next to the run manifest
    """
    log_level = (level or settings.LOG_LEVEL).upper()
    run_handlers = ["console", "errors"]

    handlers = {
        "console": {
            "formatter": "run",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stdout",
            "level": log_level,
        },
        "errors": {
            "formatter": "error",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "level": "ERROR",
        },
    }
    if log_file:
        handlers["file"] = {
            "formatter": "timed",
            "class": "logging.FileHandler",
            "filename": log_file,
            "mode": "a",
            "level": "DEBUG",
        }
        run_handlers.append("file")

    dictConfig({
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "run": {"format": "%(levelname)s: %(name)s: %(message)s"},
            "timed": {"format": "%(asctime)s %(levelname)s: %(name)s: %(message)s"},
            "error": {"format": "%(levelname)s: %(name)s: %(funcName)s: %(message)s"},
        },
        "handlers": handlers,
        "loggers": {
            "vqaa": {  # every module logs as vqaa.<module>
                "handlers": run_handlers,
                "level": "DEBUG" if log_file else log_level,
                "propagate": False,
            },
            "py.warnings": {
                "handlers": run_handlers,
                "level": "WARNING",
                "propagate": False,
            },
        },
        "root": {"handlers": ["console"], "level": "WARNING"},
    })
    logging.captureWarnings(True)
    logging.getLogger("vqaa").debug(f"Logging configured at {log_level}" + (f", file {log_file}" if log_file else ""))

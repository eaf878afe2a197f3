from pathlib import Path
from typing import List, Optional, Union
import logging
import sys

########################################################################################################################
# PREFACE
# Logging setup and process entry. All package loggers live under the "KnMaps" parent logger; diagnostics go to stderr
# so that standard output stays reserved for results, and an optional log file receives everything at DEBUG level.
########################################################################################################################
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s\n%(message)s"


def configure_logging(verbosity: int = 0, log_file: Optional[Union[Path, str]] = None) -> logging.Logger:
    """
    Configures the package logger

    :param verbosity: 0 for warnings only, 1 for info, 2 or more for debug
    :param log_file: optional file receiving DEBUG-level records
    :return: the "KnMaps" parent logger
    """
    logger = logging.getLogger("KnMaps")
    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = False

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(logging.Formatter(fmt="%(levelname)s: %(message)s"))
    stream_handler.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))
    logger.addHandler(stream_handler)

    if log_file is not None:
        file_handler = logging.FileHandler(filename=log_file, mode="w")
        file_handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT))
        file_handler.setLevel(logging.DEBUG)
        logger.addHandler(file_handler)
    return logger


def startup(argv: Optional[List[str]] = None):
    from src.KnMaps_CLI import main
    sys.exit(main(sys.argv[1:] if argv is None else argv))

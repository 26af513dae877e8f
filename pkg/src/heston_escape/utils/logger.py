"""
Logging utilities for heston_escape.
"""
import logging
import os
import sys
from datetime import datetime
from typing import Optional


def setup_logger(name: str, log_dir: Optional[str] = None, level: int = logging.INFO) -> logging.Logger:
    """
    Set up a logger with a console handler and an optional file handler.

    Args:
        name: Name of the logger
        log_dir: Directory to store log files; no file handler when None
        level: Level of the console handler

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    # Repeated calls (tests, several CLI invocations in one process) reuse the handlers
    for handler in list(logger.handlers):
        if getattr(handler, "_heston_escape", False):
            logger.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    console_handler._heston_escape = True
    logger.addHandler(console_handler)

    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        file_handler = logging.FileHandler(os.path.join(log_dir, f"{name}_{timestamp}.log"))
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        )
        file_handler._heston_escape = True
        logger.addHandler(file_handler)

    return logger

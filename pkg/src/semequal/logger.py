"""Logging configuration for the semequal package."""

import logging

logger = logging.getLogger("semequal")
logger.setLevel(logging.WARN)

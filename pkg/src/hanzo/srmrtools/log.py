import logging
import sys

__all__ = ["LEVELS", "configure", "debug", "logger"]

LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

logger = logging.getLogger("hanzo.srmrtools")


def configure(level: str = "warning") -> None:
    """Send srmrtools log records to stderr at the given level name."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(LEVELS.get(level.lower(), logging.WARNING))
    logger.propagate = False


if __debug__:

    def debug(*args):
        logger.debug("SRMRTOOLS %s", args)
else:

    def debug(*args):
        pass

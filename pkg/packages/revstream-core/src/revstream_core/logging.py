import logging
import sys


def setup_logging(verbose: bool = False, log_file: str | None = None) -> None:
    """Configure logging with appropriate level and format.

    Records go to stderr; stdout carries program output.
    """
    level = logging.DEBUG if verbose else logging.INFO
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )

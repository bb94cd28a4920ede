# Imports: Standard Library
import logging
import inspect
import functools
from pathlib import Path
from typing import Optional, Union

# Imports: Third Party
import numpy as np

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'


def setup_logging(component: str, log_dir: Optional[Union[str, Path]] = None, level: int = logging.INFO) -> logging.Logger:
    """
    Sets up a named logger for a solver component.

    Args:
        component (str): Short component name, the logger is called ``hdvikit.<component>``.
        log_dir (str | Path, optional): Directory for the log file. When None no file
            handler is attached and records propagate to whatever the caller configured.
        level (int, optional): Logging level. Defaults to logging.INFO.
    Returns:
        logging.Logger: The configured logger.
    """
    logger = logging.getLogger(f'hdvikit.{component}')
    logger.setLevel(level)

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = (log_dir / f'{component}_log.log').resolve()

        already = any(
            isinstance(h, logging.FileHandler) and Path(h.baseFilename) == log_file
            for h in logger.handlers
        )
        if not already:
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(level)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logger.addHandler(file_handler)

    logger.info(f"Logger for '{component}' initialized.")
    return logger


def _summarize(value):
    """Arrays and trajectories are logged by shape, not by content."""
    if isinstance(value, np.ndarray):
        return f"ndarray{value.shape}"
    values = getattr(value, 'values', None)
    if isinstance(values, np.ndarray):
        return f"{type(value).__name__}{values.shape}"
    if isinstance(value, (list, tuple)) and len(value) > 8:
        return f"{type(value).__name__}[{len(value)}]"
    return value


def log_method_call(func):
    """
    Decorator to log solver method calls.
    Logs the method name and arguments on entry, completion on success and the
    error on failure (the error is re-raised). Does nothing when the instance has
    no ``logger``.

    Args:
        func (function): The function to decorate.
    Returns:
        function: The decorated function.
    """
    arg_names = inspect.getfullargspec(func).args[1:]  # Skip 'self'

    @functools.wraps(func)
    def wrapper(self, *args, **kwargs):
        logger = getattr(self, 'logger', None)
        if not logger:
            return func(self, *args, **kwargs)

        method_name = func.__name__
        all_args = {**dict(zip(arg_names, args)), **kwargs}
        shown_args = {k: _summarize(v) for k, v in all_args.items()}

        try:
            logger.info(f"Method Call: {method_name} | Args: {shown_args}")
            result = func(self, *args, **kwargs)
            logger.info(f"Method Complete: {method_name} | Status: Success")
            return result
        except Exception as e:
            logger.error(
                f"Method Error: {method_name} | "
                f"Args: {shown_args} | "
                f"Error Type: {type(e).__name__}: {str(e)}"
            )
            raise

    return wrapper

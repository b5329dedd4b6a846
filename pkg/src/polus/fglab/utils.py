"""Utility functions for fglab."""

from functools import wraps
from typing import Iterable, Iterator, TypeVar
import time

from tqdm import tqdm

from . import config
from .logger import exec_time_logger

T = TypeVar('T')


def progress(iterable: Iterable[T], desc: str, total: int | None = None) -> Iterator[T]:
    """Wrap a long loop in a progress bar when FGLAB_PROGRESS is set."""
    return tqdm(iterable, desc=desc, total=total, disable=not config.FGLAB_PROGRESS, leave=False)


def time_logger(func):
    """Decorator that logs the execution time of a function."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.time()
        result = func(*args, **kwargs)
        end_time = time.time()
        execution_time = end_time - start_time
        exec_time_logger.info(f"Executed {func.__name__} in {execution_time:.4f} seconds")
        return result
    return wrapper

from __future__ import annotations

import functools
import time


class Timer:
    """wall-clock stopwatch, started on creation"""
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def time_it(func):
    """
    Decorator that stores the wall time of the last call on the wrapper,
    as `wrapper.last_elapsed` (seconds).
    The CLI prints it when --timing is given.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        timer = Timer()
        try:
            return func(*args, **kwargs)
        finally:
            wrapper.last_elapsed = timer.elapsed

    wrapper.last_elapsed = None
    return wrapper

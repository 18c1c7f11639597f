import threading
import time
from collections import deque
from typing import Callable, Optional


class RateLimiter:
    """
    Sliding-window limiter: at most `rate_limit` acquisitions in any `window` seconds.

    Thread safe. `clock` and `sleep` are injectable so tests can run on a fake clock.
    """

    def __init__(
        self,
        rate_limit: int,
        window: float = 60.0,
        clock: Optional[Callable[[], float]] = None,
        sleep: Optional[Callable[[float], None]] = None,
    ):
        if rate_limit < 1:
            raise ValueError(f"rate_limit must be at least 1, got {rate_limit}")
        if clock is None:
            clock = time.monotonic
        if sleep is None:
            sleep = time.sleep

        self.rate_limit = rate_limit
        self.window = window
        self.clock = clock
        self.sleep = sleep
        self._issued = deque()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = self.clock()
                while self._issued and now - self._issued[0] >= self.window:
                    self._issued.popleft()
                if len(self._issued) < self.rate_limit:
                    self._issued.append(now)
                    return
                wait = self.window - (now - self._issued[0])
            self.sleep(max(wait, 0.0))

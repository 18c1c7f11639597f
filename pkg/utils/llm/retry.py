import random
import time
from typing import Callable, Optional, Tuple, TypeVar

from utils.errors import ProviderError
from utils.logger import get_console_logger

T = TypeVar("T")

BACKOFF_BASE = 1.0
BACKOFF_CAP = 60.0


def backoff_delay(attempt: int, base: float = BACKOFF_BASE, cap: float = BACKOFF_CAP, rng: Optional[random.Random] = None) -> float:
    """Exponential backoff with jitter: a uniform draw from [delay / 2, delay], delay = min(cap, base * 2^(attempt-1))."""
    if rng is None:
        rng = random.Random()
    delay = min(cap, base * 2 ** (attempt - 1))
    return rng.uniform(delay / 2, delay)


def call_with_retries(
    fn: Callable[[], T],
    max_retries: int,
    description: str = "",
    sleep: Optional[Callable[[float], None]] = None,
    rng: Optional[random.Random] = None,
) -> Tuple[T, int]:
    """
    Calls `fn`, retrying on ProviderError up to `max_retries` times.

    Returns:
        Tuple[T, int]: the result and the number of retries it took.

    Raises:
        ProviderError: the last error once every attempt has failed.
    """
    logger = get_console_logger(__name__)
    if sleep is None:
        sleep = time.sleep

    attempt = 1
    while True:
        try:
            return fn(), attempt - 1
        except ProviderError as e:
            if attempt > max_retries:
                raise e
            delay = backoff_delay(attempt, rng=rng)
            logger.error(
                f"Provider call failed. {description} Attempt: {attempt}. Reason: {e}. Retrying in {delay:.2f} sec."
            )
            sleep(delay)
        attempt += 1

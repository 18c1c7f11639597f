import random

import pytest

from utils.errors import ProviderError, ReplayMissError
from utils.llm.retry import BACKOFF_CAP, backoff_delay, call_with_retries


class Flaky:
    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def __call__(self):
        self.calls += 1
        if self.calls <= self.failures:
            raise ProviderError(f"transient {self.calls}")
        return "ok"


@pytest.mark.parametrize("attempt, upper", [(1, 1.0), (2, 2.0), (3, 4.0), (10, BACKOFF_CAP)])
def test_backoff_delay_bounds(attempt, upper):
    rng = random.Random(0)
    for _ in range(50):
        delay = backoff_delay(attempt, rng=rng)
        assert upper / 2 <= delay <= upper


def test_retries_until_success():
    sleeps = []
    result, retries = call_with_retries(Flaky(2), max_retries=3, sleep=sleeps.append, rng=random.Random(0))
    assert result == "ok"
    assert retries == 2
    assert len(sleeps) == 2


def test_gives_up_after_max_retries():
    flaky = Flaky(10)
    with pytest.raises(ProviderError, match="transient 3"):
        call_with_retries(flaky, max_retries=2, sleep=lambda _: None)
    assert flaky.calls == 3


def test_other_errors_are_not_retried():
    calls = []

    def miss():
        calls.append(1)
        raise ReplayMissError(("p", 0.0, 0))

    with pytest.raises(ReplayMissError):
        call_with_retries(miss, max_retries=3, sleep=lambda _: None)
    assert len(calls) == 1

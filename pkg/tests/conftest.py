from datetime import date, datetime, time, timezone
from typing import Optional, Sequence

import pytest

from datajobs.llm_volatility.corpus import compute_headline_id
from utils.schema import Headline, TradingCalendar


def build_headline(
    text: str,
    tickers: Sequence[str] = ("AAPL",),
    published_at: Optional[datetime] = None,
    effective_date: Optional[date] = None,
    source: str = "wire-a",
) -> Headline:
    if published_at is None:
        published_at = datetime(2024, 1, 2, 14, 0, tzinfo=timezone.utc)
    if effective_date is None:
        effective_date = published_at.date()
    return Headline(
        id=compute_headline_id(text, published_at),
        text=text,
        tickers=tuple(sorted(tickers)),
        published_at=published_at,
        source=source,
        effective_date=effective_date,
    )


@pytest.fixture
def make_headline():
    return build_headline


@pytest.fixture
def january_calendar() -> TradingCalendar:
    """January 2024 weekdays minus the 15th (a holiday)."""
    days = [date(2024, 1, d) for d in range(2, 32)]
    trading = [d for d in days if d.weekday() < 5 and d != date(2024, 1, 15)]
    return TradingCalendar(dates=tuple(trading), cutoff_time=time(15, 0), timezone="America/New_York")

# native Python packages
import os
from datetime import date, datetime, timedelta
from typing import Dict, List, Optional, Sequence
from zoneinfo import ZoneInfo

# third-party packages
import numpy as np
import pandas as pd

# custom packages
from utils.file_io import ensure_dir, write_csv, write_jsonl
from utils.logger import get_console_logger

DEFAULT_TICKERS = ["AAPL", "AMZN", "JPM", "MSFT", "XOM"]

EVENTS = [
    "shares rise after earnings beat",
    "cuts full-year guidance",
    "announces new buyback program",
    "faces regulatory probe",
    "unveils product lineup",
    "names new chief financial officer",
    "misses revenue estimates",
    "expands into new markets",
    "settles patent dispute",
    "reports steady quarterly sales",
]
SOURCES = ["wire-a", "wire-b", "wire-c"]

# Shares of extra records that the ingest filters should drop.
DUPLICATE_SHARE = 0.02
WIDE_TAG_SHARE = 0.02
LOW_PROMINENCE_SHARE = 0.03


def trading_dates(start: date, n_days: int, holidays: Sequence[date] = ()) -> List[date]:
    """The first `n_days` weekdays from `start` that are not holidays."""
    skip = set(holidays)
    dates = []
    for ts in pd.bdate_range(start, periods=n_days + len(skip)):
        if ts.date() not in skip:
            dates.append(ts.date())
        if len(dates) == n_days:
            break
    return dates


def random_walk_prices(
    tickers: Sequence[str], dates: Sequence[date], rng: np.random.Generator, drift: float = 0.0002, vol: float = 0.015
) -> pd.DataFrame:
    """Geometric random walk closes per ticker, `ticker,date,close`."""
    frames = []
    for ticker in tickers:
        start_price = rng.uniform(20, 300)
        log_returns = rng.normal(drift - vol**2 / 2, vol, size=len(dates))
        log_returns[0] = 0.0
        closes = np.round(start_price * np.exp(np.cumsum(log_returns)), 4)
        frames.append(pd.DataFrame({"ticker": ticker, "date": [d.isoformat() for d in dates], "close": closes}))
    return pd.concat(frames, ignore_index=True)


def _published_at(dates: Sequence[date], rng: np.random.Generator, tz: ZoneInfo) -> datetime:
    # The last trading date is excluded so every timestamp maps inside the calendar.
    first, last = dates[0], dates[-2]
    day = first + timedelta(days=int(rng.integers(0, (last - first).days + 1)))
    minute = int(rng.integers(0, 24 * 60))
    return datetime(day.year, day.month, day.day, minute // 60, minute % 60, tzinfo=tz)


def generate_dataset(
    output_dir: str,
    tickers: Optional[Sequence[str]] = None,
    n_headlines: int = 500,
    start: date = date(2024, 1, 2),
    n_days: int = 120,
    seed: int = 0,
    holidays: Sequence[date] = (),
    timezone_name: str = "America/New_York",
) -> Dict[str, str]:
    """
    Writes a synthetic headline feed, price table and trading calendar.

    On top of `n_headlines` clean records the feed holds exact duplicates, records tagged with three
    tickers and low-prominence records, so every ingest filter has something to drop.

    Args:
        output_dir (str): directory to write into.
        tickers (Optional[Sequence[str]]): ticker universe, default DEFAULT_TICKERS.
        n_headlines (int): number of headlines that survive ingest.
        start (date): first calendar date.
        n_days (int): number of trading dates.
        seed (int): random seed.
        holidays (Sequence[date]): weekdays left out of the calendar.
        timezone_name (str): exchange timezone of the timestamps.

    Returns:
        Dict[str, str]: paths keyed by "headlines", "prices" and "calendar".
    """
    logger = get_console_logger(__name__)
    if n_days < 2:
        raise ValueError(f"At least 2 trading dates are needed, got {n_days}.")

    tickers = [t.upper() for t in (tickers or DEFAULT_TICKERS)]
    rng = np.random.default_rng(seed)
    tz = ZoneInfo(timezone_name)
    dates = trading_dates(start, n_days, holidays)

    records = []
    for index in range(n_headlines):
        n_tags = 2 if len(tickers) > 1 and rng.random() < 0.15 else 1
        tagged = sorted(rng.choice(tickers, size=n_tags, replace=False).tolist())
        event = EVENTS[int(rng.integers(len(EVENTS)))]
        records.append(
            {
                "text": f"{' and '.join(tagged)} {event} (story {index})",
                "tickers": tagged,
                "published_at": _published_at(dates, rng, tz).isoformat(),
                "source": SOURCES[int(rng.integers(len(SOURCES)))],
                "prominence": round(float(rng.uniform(0.8, 1.0)), 3) if rng.random() < 0.5 else None,
            }
        )

    extras = []
    for index in rng.choice(n_headlines, size=int(n_headlines * DUPLICATE_SHARE), replace=False):
        extras.append({**records[int(index)], "source": "wire-dup"})
    for index in range(int(n_headlines * WIDE_TAG_SHARE)):
        if len(tickers) < 3:
            break
        extras.append(
            {
                "text": f"Sector roundup {index}",
                "tickers": sorted(rng.choice(tickers, size=3, replace=False).tolist()),
                "published_at": _published_at(dates, rng, tz).isoformat(),
                "source": SOURCES[0],
            }
        )
    for index in range(int(n_headlines * LOW_PROMINENCE_SHARE)):
        extras.append(
            {
                "text": f"{tickers[0]} mentioned in passing (brief {index})",
                "tickers": [tickers[0]],
                "published_at": _published_at(dates, rng, tz).isoformat(),
                "source": SOURCES[1],
                "prominence": 0.3,
            }
        )

    feed = [{k: v for k, v in r.items() if v is not None} for r in records + extras]
    order = rng.permutation(len(feed))

    ensure_dir(output_dir)
    paths = {
        "headlines": os.path.join(output_dir, "headlines.jsonl"),
        "prices": os.path.join(output_dir, "prices.csv"),
        "calendar": os.path.join(output_dir, "calendar.csv"),
    }
    write_jsonl(paths["headlines"], (feed[i] for i in order))
    write_csv(paths["prices"], random_walk_prices(tickers, dates, rng))
    write_csv(paths["calendar"], pd.DataFrame({"date": [d.isoformat() for d in dates]}))

    logger.info(
        f"Generated synthetic dataset. Path: {output_dir}. Headlines: {n_headlines}. "
        f"Extra records: {len(extras)}. Trading dates: {len(dates)}."
    )
    return paths

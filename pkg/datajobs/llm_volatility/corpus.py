# native Python packages
import json
import time
from collections import Counter
from datetime import date, datetime, timezone
from datetime import time as time_of_day
from typing import Dict, Iterable, List, Optional, Set, Tuple

# third-party packages
import pandas as pd
from pydantic import ValidationError

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts
from utils.config import PipelineConfig
from utils.errors import (
    CalendarError,
    EmptyCorpusError,
    HeadlineFormatError,
    OutOfRangeError,
    PriceValidationError,
)
from utils.file_io import iter_jsonl, write_csv, write_jsonl, write_to_json
from utils.logger import get_console_logger
from utils.schema import Headline, PriceBar, TradingCalendar, sha256_hex

MAX_TICKERS_PER_HEADLINE = 2
REQUIRED_HEADLINE_FIELDS = ("text", "tickers", "published_at", "source")
PRICE_COLUMNS = ["ticker", "date", "close"]


def normalize_text(text: str) -> str:
    """Trims and collapses internal whitespace runs. Case is preserved."""
    return " ".join(text.split())


def compute_headline_id(text: str, published_at: datetime) -> str:
    instant = published_at.astimezone(timezone.utc).isoformat()
    return sha256_hex(f"{normalize_text(text)}\x1f{instant}")[:16]


def parse_timestamp(value: str) -> datetime:
    """
    Parses an RFC 3339 timestamp into a timezone-aware datetime.

    Raises:
        ValueError: if the value is not a string, cannot be parsed, or has no UTC offset.
    """
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text[-1:] in ("Z", "z"):
        text = text[:-1] + "+00:00"
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None or parsed.utcoffset() is None:
        raise ValueError(f"timestamp has no UTC offset: {value}")
    return parsed


def assign_effective_date(published_at: datetime, calendar: TradingCalendar) -> date:
    """
    Maps a publication timestamp onto its next actionable trading date.

    The timestamp is converted to the calendar's exchange timezone. News strictly before the
    cutoff on a trading day is actionable that day; anything else rolls to the next trading
    date strictly after the local calendar date.

    Raises:
        OutOfRangeError: if the timestamp falls after the calendar's last actionable date.
    """
    local = published_at.astimezone(calendar.tz)
    day = local.date()
    if day > calendar.last:
        raise OutOfRangeError(
            f"Publication is after the last calendar date. Published: {published_at.isoformat()}. "
            f"Last date: {calendar.last}."
        )

    if local.time() < calendar.cutoff_time and calendar.is_trading_day(day):
        return day

    next_date = calendar.next_trading_date(day)
    if next_date is None:
        raise OutOfRangeError(
            f"No trading date after the publication. Published: {published_at.isoformat()}. "
            f"Last date: {calendar.last}."
        )
    return next_date


def load_calendar(
    file_path: Optional[str],
    start: Optional[date] = None,
    end: Optional[date] = None,
    cutoff_time: time_of_day = time_of_day(15, 0),
    timezone_name: str = "America/New_York",
) -> TradingCalendar:
    """
    Loads a trading calendar from a CSV of ISO dates, one per line.

    When no file is given, every weekday between `start` and `end` is a trading date.
    A `date` header line and `#` comments are allowed.

    Raises:
        CalendarError: on unparseable, duplicate or unordered dates, or a missing range for the fallback.
    """
    logger = get_console_logger(__name__)

    if file_path is None:
        if start is None or end is None:
            raise CalendarError("A calendar file or a start and end date is required.")
        logger.info(f"No calendar file configured. Using weekdays from {start} to {end}.")
        dates = [ts.date() for ts in pd.bdate_range(start, end)]
    else:
        raw = pd.read_csv(
            file_path, header=None, names=["date"], dtype=str, comment="#", skip_blank_lines=True
        )
        values = [v.strip() for v in raw["date"] if v.strip().lower() != "date"]
        parsed = pd.to_datetime(pd.Series(values, dtype=str), format="%Y-%m-%d", errors="coerce")
        if parsed.isna().any():
            bad = values[int(parsed.isna().to_numpy().argmax())]
            raise CalendarError(f"Invalid calendar date. Path: {file_path}. Value: {bad}")
        dates = [ts.date() for ts in parsed]

    try:
        return TradingCalendar(dates=tuple(dates), cutoff_time=cutoff_time, timezone=timezone_name)
    except ValidationError as e:
        raise CalendarError(f"Invalid trading calendar. Reason: {e}") from e


def write_calendar(file_path: str, calendar: TradingCalendar):
    write_csv(file_path, pd.DataFrame({"date": [d.isoformat() for d in calendar.dates]}))


def load_universe(tickers: Iterable[str], file_path: Optional[str] = None) -> Set[str]:
    universe = {t.strip().upper() for t in tickers if t.strip()}
    if file_path:
        with open(file_path, "r", encoding="utf-8") as file:
            universe.update(
                line.strip().upper() for line in file if line.strip() and not line.startswith("#")
            )
    if not universe:
        raise ValueError("The ticker universe is empty.")
    return universe


def _decode_record(line_number: int, line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise HeadlineFormatError(line_number, f"invalid JSON ({e.msg})") from e

    if not isinstance(record, dict):
        raise HeadlineFormatError(line_number, "expected a JSON object")

    missing = [field for field in REQUIRED_HEADLINE_FIELDS if field not in record]
    if missing:
        raise HeadlineFormatError(line_number, f"missing fields {missing}")

    if not isinstance(record["text"], str):
        raise HeadlineFormatError(line_number, "`text` must be a string")
    if not isinstance(record["source"], str):
        raise HeadlineFormatError(line_number, "`source` must be a string")
    tickers = record["tickers"]
    if not isinstance(tickers, list) or not all(isinstance(t, str) for t in tickers):
        raise HeadlineFormatError(line_number, "`tickers` must be a list of strings")

    prominence = record.get("prominence")
    if prominence is not None and (
        isinstance(prominence, bool) or not isinstance(prominence, (int, float))
    ):
        raise HeadlineFormatError(line_number, "`prominence` must be a number")

    try:
        record["published_at"] = parse_timestamp(record["published_at"])
    except ValueError as e:
        raise HeadlineFormatError(line_number, f"invalid `published_at` ({e})") from e

    return record


def read_headlines(
    file_path: str,
    universe: Set[str],
    prominence_floor: float,
    calendar: TradingCalendar,
) -> Tuple[List[Headline], Dict[str, int]]:
    """
    Reads, filters, deduplicates and time-aligns headlines.

    Returns:
        Tuple[List[Headline], Dict[str, int]]: headlines ordered by (published_at, id), and the
        count of records dropped per reason.
    """
    logger = get_console_logger(__name__)

    universe = {t.upper() for t in universe}
    dropped = Counter()
    seen = set()
    headlines = []
    total = 0

    for line_number, line in iter_jsonl(file_path):
        total += 1
        record = _decode_record(line_number, line)

        text = record["text"].strip()
        if not text:
            dropped["empty_text"] += 1
            continue

        tagged = {t.strip().upper() for t in record["tickers"] if t.strip()}
        if len(tagged) > MAX_TICKERS_PER_HEADLINE:
            dropped["too_many_tickers"] += 1
            continue

        tickers = tagged & universe
        if not tickers:
            dropped["outside_universe"] += 1
            continue

        prominence = record.get("prominence")
        if prominence is not None and prominence < prominence_floor:
            dropped["low_prominence"] += 1
            continue

        published_at = record["published_at"]
        dedup_key = (normalize_text(text), published_at.astimezone(timezone.utc))
        if dedup_key in seen:
            dropped["duplicate"] += 1
            continue
        seen.add(dedup_key)

        try:
            effective_date = assign_effective_date(published_at, calendar)
        except OutOfRangeError as e:
            logger.warning(f"Dropping headline outside the calendar. Line: {line_number}. Reason: {e}")
            dropped["outside_calendar"] += 1
            continue

        headlines.append(
            Headline(
                id=compute_headline_id(text, published_at),
                text=text,
                tickers=tuple(tickers),
                published_at=published_at,
                source=record["source"],
                effective_date=effective_date,
                prominence=prominence,
            )
        )

    headlines.sort(key=lambda h: (h.published_at, h.id))
    logger.info(
        f"Read headlines. Path: {file_path}. Records: {total}. Kept: {len(headlines)}. Dropped: {dict(dropped)}."
    )
    return headlines, dict(dropped)


def ingest_headlines(
    file_path: str,
    universe: Set[str],
    prominence_floor: float,
    calendar: TradingCalendar,
) -> List[Headline]:
    """
    Ingests a headline JSONL file into canonical Headlines.

    Records tagged with more than two tickers, records without a universe ticker, and records whose
    `prominence` is below `prominence_floor` are dropped. Duplicates by (normalized text, published_at)
    keep the first occurrence.

    Raises:
        HeadlineFormatError: on a malformed line, naming its line number.
        EmptyCorpusError: if no headline survives filtering.
    """
    headlines, _ = read_headlines(file_path, universe, prominence_floor, calendar)
    if not headlines:
        raise EmptyCorpusError(f"No headlines left after filtering. Path: {file_path}")
    return headlines


def headline_to_record(headline: Headline) -> dict:
    record = {
        "id": headline.id,
        "text": headline.text,
        "tickers": list(headline.tickers),
        "published_at": headline.published_at.isoformat(),
        "source": headline.source,
        "effective_date": headline.effective_date.isoformat(),
    }
    if headline.prominence is not None:
        record["prominence"] = headline.prominence
    return record


def write_headlines(file_path: str, headlines: List[Headline]):
    write_jsonl(file_path, (headline_to_record(h) for h in headlines))


def read_corpus(file_path: str) -> List[Headline]:
    """Loads headlines previously written by `write_headlines` without re-filtering them."""
    headlines = []
    for line_number, line in iter_jsonl(file_path):
        record = json.loads(line)
        record["published_at"] = parse_timestamp(record["published_at"])
        headlines.append(Headline.model_validate(record))
    return headlines


class PriceTable:
    """
    Daily closes keyed by (ticker, date).

    Attributes:
        closes (Dict[Tuple[str, date], float]): close price per (ticker, date).
    """

    def __init__(self, bars: Iterable[PriceBar]):
        self.closes: Dict[Tuple[str, date], float] = {}
        for bar in bars:
            key = (bar.ticker, bar.date)
            if key in self.closes:
                raise PriceValidationError(f"duplicate bar for {bar.ticker} on {bar.date}")
            self.closes[key] = bar.close

    def __len__(self):
        return len(self.closes)

    def __repr__(self):
        return f"PriceTable(bars={len(self)}, tickers={len(self.tickers)})"

    def close(self, ticker: str, day: date) -> Optional[float]:
        return self.closes.get((ticker, day))

    @property
    def dates(self) -> List[date]:
        return sorted({day for _, day in self.closes})

    @property
    def tickers(self) -> List[str]:
        return sorted({ticker for ticker, _ in self.closes})

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"ticker": ticker, "date": day.isoformat(), "close": close}
            for (ticker, day), close in sorted(self.closes.items())
        ]
        return pd.DataFrame(rows, columns=PRICE_COLUMNS)


def ingest_prices(file_path: str, calendar: Optional[TradingCalendar] = None) -> PriceTable:
    """
    Loads a `ticker,date,close` CSV into a PriceTable.

    Raises:
        PriceValidationError: on missing columns, unparseable dates, non-positive closes, duplicate
            (ticker, date) rows, or dates missing from `calendar`. Row numbers count the header as line 1.
    """
    frame = pd.read_csv(file_path, dtype=str, keep_default_na=False)
    missing = [c for c in PRICE_COLUMNS if c not in frame.columns]
    if missing:
        raise PriceValidationError(f"missing columns {missing}. Path: {file_path}")

    frame["ticker"] = frame["ticker"].str.strip().str.upper()
    dates = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    closes = pd.to_numeric(frame["close"].str.strip(), errors="coerce")

    bars = []
    seen = {}
    for index in range(len(frame)):
        row_number = index + 2
        ticker = frame["ticker"].iat[index]
        if not ticker:
            raise PriceValidationError("empty ticker", row_number)
        if pd.isna(dates.iat[index]):
            raise PriceValidationError(f"invalid date {frame['date'].iat[index]!r}", row_number)
        close = closes.iat[index]
        if pd.isna(close) or close <= 0:
            raise PriceValidationError(
                f"close must be a positive number, got {frame['close'].iat[index]!r}", row_number
            )

        day = dates.iat[index].date()
        key = (ticker, day)
        if key in seen:
            raise PriceValidationError(
                f"duplicate bar for {ticker} on {day} (first seen on row {seen[key]})", row_number
            )
        seen[key] = row_number

        if calendar is not None and not calendar.is_trading_day(day):
            raise PriceValidationError(f"{day} is not a trading date in the calendar", row_number)

        bars.append(PriceBar(ticker=ticker, date=day, close=float(close)))

    return PriceTable(bars)


def ingest(config: PipelineConfig) -> dict:
    """
    Ingest stage: validates prices, builds the calendar, and writes the canonical corpus.

    Returns:
        dict: the stage metadata that is also written to `corpus/metadata.json`.
    """
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    logger.info(f"Ingest prices. Path: {config.paths.prices}")
    prices = ingest_prices(config.paths.prices)
    price_dates = prices.dates
    if not price_dates:
        raise PriceValidationError(f"price file has no rows. Path: {config.paths.prices}")

    calendar = load_calendar(
        config.paths.calendar,
        start=price_dates[0],
        end=price_dates[-1],
        cutoff_time=config.corpus.cutoff_time,
        timezone_name=config.corpus.timezone,
    )
    off_calendar = [d for d in price_dates if not calendar.is_trading_day(d)]
    if off_calendar:
        raise PriceValidationError(f"price dates missing from the calendar, first: {off_calendar[0]}")

    universe = load_universe(config.corpus.universe, config.paths.universe)
    logger.info(f"Ingest headlines. Path: {config.paths.headlines}. Universe size: {len(universe)}.")
    headlines, dropped = read_headlines(
        config.paths.headlines, universe, config.corpus.prominence_floor, calendar
    )
    if not headlines:
        raise EmptyCorpusError(f"No headlines left after filtering. Path: {config.paths.headlines}")

    write_headlines(artifacts.headlines, headlines)
    write_calendar(artifacts.calendar, calendar)
    write_csv(artifacts.prices, prices.to_frame())

    metadata = {
        "headline_count": len(headlines),
        "dropped": dropped,
        "ticker_count": len({t for h in headlines for t in h.tickers}),
        "price_bar_count": len(prices),
        "calendar_first": calendar.first.isoformat(),
        "calendar_last": calendar.last.isoformat(),
        "calendar_length": len(calendar.dates),
    }
    write_to_json(artifacts.metadata(artifacts.corpus_dir), metadata)
    logger.info(
        f"Ingest completed. Headlines: {len(headlines)}. Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return metadata


def load_stage_calendar(artifacts: StageArtifacts, config: PipelineConfig) -> TradingCalendar:
    return load_calendar(
        artifacts.calendar,
        cutoff_time=config.corpus.cutoff_time,
        timezone_name=config.corpus.timezone,
    )

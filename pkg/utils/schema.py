import bisect
import hashlib
from datetime import date, datetime, time
from enum import Enum
from typing import Dict, Literal, Optional, Tuple
from zoneinfo import ZoneInfo

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Headline(BaseModel):
    """
    Represents one news item tied to at most two tickers.

    Attributes:
        id (str): content hash of (normalized text, published_at).
        text (str): headline text, trimmed.
        tickers (Tuple[str, ...]): sorted ticker symbols, one or two of them.
        published_at (datetime): timezone-aware publication timestamp.
        source (str): publisher or feed name.
        effective_date (date): first trading date on which the headline is actionable.
        prominence (Optional[float]): ticker prominence score when the source provides one.
    """

    model_config = ConfigDict(frozen=True)

    id: str
    text: str
    tickers: Tuple[str, ...]
    published_at: datetime
    source: str
    effective_date: date
    prominence: Optional[float] = None

    @field_validator("text")
    @classmethod
    def _text_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("headline text is empty")
        return value

    @field_validator("tickers")
    @classmethod
    def _one_or_two_tickers(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        if not 1 <= len(value) <= 2:
            raise ValueError(f"a headline carries 1 or 2 tickers, got {len(value)}")
        return tuple(sorted(value))

    @field_validator("published_at")
    @classmethod
    def _timezone_aware(cls, value: datetime) -> datetime:
        if value.tzinfo is None or value.utcoffset() is None:
            raise ValueError("published_at must carry a timezone offset")
        return value

    def __repr__(self):
        text_repr = self.text.replace("\n", "\\n")[:20]
        return f"Headline(id={self.id}, text={text_repr}, tickers={self.tickers})"


class PriceBar(BaseModel):
    model_config = ConfigDict(frozen=True)

    ticker: str
    date: date
    close: float = Field(gt=0)


class TradingCalendar(BaseModel):
    """
    Ordered trading dates plus the intraday cutoff used to map news onto them.

    Attributes:
        dates (Tuple[date, ...]): strictly increasing trading dates.
        cutoff_time (time): exchange-local time of day; news at or after it rolls to the next trading date.
        timezone (str): IANA name of the exchange timezone.
    """

    model_config = ConfigDict(frozen=True)

    dates: Tuple[date, ...]
    cutoff_time: time = time(15, 0)
    timezone: str = "America/New_York"

    _date_set: frozenset = PrivateAttr(default=frozenset())

    @model_validator(mode="after")
    def _strictly_increasing(self) -> "TradingCalendar":
        if not self.dates:
            raise ValueError("trading calendar is empty")
        for previous, current in zip(self.dates, self.dates[1:]):
            if current <= previous:
                raise ValueError(
                    f"trading dates must be strictly increasing, got {previous} then {current}"
                )
        ZoneInfo(self.timezone)
        return self

    def model_post_init(self, __context) -> None:
        self._date_set = frozenset(self.dates)

    @property
    def tz(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    @property
    def first(self) -> date:
        return self.dates[0]

    @property
    def last(self) -> date:
        return self.dates[-1]

    def is_trading_day(self, day: date) -> bool:
        return day in self._date_set

    def next_trading_date(self, day: date) -> Optional[date]:
        """Returns the first trading date strictly after `day`, or None past the end of the calendar."""
        index = bisect.bisect_right(self.dates, day)
        if index >= len(self.dates):
            return None
        return self.dates[index]

    def dates_before(self, day: date, count: int) -> Tuple[date, ...]:
        """Returns up to `count` trading dates strictly before `day`, oldest first."""
        index = bisect.bisect_left(self.dates, day)
        return self.dates[max(0, index - count) : index]

    def between(self, start: date, end: date) -> Tuple[date, ...]:
        lo = bisect.bisect_left(self.dates, start)
        hi = bisect.bisect_right(self.dates, end)
        return self.dates[lo:hi]


class PromptStyle(str, Enum):
    SINGLE = "single"
    BATCH = "batch"


class PromptJob(BaseModel):
    """
    A rendered prompt and the headlines it covers.

    Index i in a batch prompt's numbered block corresponds to headline_ids[i - 1].
    """

    model_config = ConfigDict(frozen=True)

    prompt_text: str
    headline_ids: Tuple[str, ...]
    style: PromptStyle

    @model_validator(mode="after")
    def _headline_count_matches_style(self) -> "PromptJob":
        if not self.headline_ids:
            raise ValueError("a prompt job covers at least one headline")
        if self.style == PromptStyle.SINGLE and len(self.headline_ids) != 1:
            raise ValueError("a single-style prompt job covers exactly one headline")
        return self

    @property
    def prompt_hash(self) -> str:
        return sha256_hex(self.prompt_text)


class LlmResponse(BaseModel):
    """
    Raw generated text for one (prompt, temperature, run) triple.

    Attributes:
        prompt_hash (str): SHA-256 hex digest of the UTF-8 prompt bytes.
        temperature (float): decoding temperature.
        run_index (int): repetition index, 0..k-1.
        raw_text (str): the generated text, unmodified.
        provider (str): provider name.
        model (str): model name.
        created_at (datetime): when the response was first generated.
    """

    model_config = ConfigDict(frozen=True)

    prompt_hash: str
    temperature: float = Field(ge=0, le=2)
    run_index: int = Field(ge=0)
    raw_text: str
    provider: str
    model: str
    created_at: datetime

    @property
    def key(self) -> Tuple[str, float, int]:
        return self.prompt_hash, self.temperature, self.run_index


class FailureRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    prompt_hash: str
    temperature: float
    run_index: int
    provider: str
    model: str
    attempts: int
    reason: str


class FeedSentiment(BaseModel):
    model_config = ConfigDict(frozen=True)

    headline_id: str
    temperature: float
    run_index: int
    label: Literal[-1, 0, 1]
    confidence: Optional[float] = Field(default=None, ge=0, le=1)
    raw_fragment: str = ""


class TickerDayScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    ticker: str
    date: date
    temperature: float
    run_index: int
    score: float = Field(ge=-1, le=1)


class LexicalStat(BaseModel):
    model_config = ConfigDict(frozen=True)

    headline_id: str
    temperature: float
    mean_pair_distance: float = Field(ge=0)


class SemanticStat(BaseModel):
    """
    Range of a sentiment score across runs.

    `key` is the headline id at feed level and "TICKER|YYYY-MM-DD" at ticker level.
    """

    model_config = ConfigDict(frozen=True)

    level: Literal["feed", "ticker"]
    key: str
    temperature: float
    range: float = Field(ge=0, le=2)


class VolatilityRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    temperature: float
    metric: Literal["lexical_mean", "semantic_range_mean"]
    level: Literal["feed", "ticker"]
    value: float


class Position(BaseModel):
    model_config = ConfigDict(frozen=True)

    ticker: str
    date: date
    weight: float


class BacktestResult(BaseModel):
    """
    Daily return series and summary numbers for one (temperature, run) backtest.

    `sharpe_flagged` is set when the return series has zero spread and the Sharpe ratio is reported as 0.
    """

    model_config = ConfigDict(frozen=True)

    run_index: int
    temperature: float
    daily_returns: Dict[date, float]
    total_return: float
    sharpe: float
    sharpe_flagged: bool = False
    dropped_positions: int = 0


class RepetitionStat(BaseModel):
    model_config = ConfigDict(frozen=True)

    temperature: float
    n_runs: int
    return_mean: float
    return_std: float
    return_min: float
    return_max: float
    sharpe_mean: float
    sharpe_std: float
    std_flagged: bool = False

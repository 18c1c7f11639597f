# native Python packages
import os
import time
from collections import defaultdict
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

# third-party packages
import editdistance
import pandas as pd

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts, require
from datajobs.llm_volatility.corpus import read_corpus
from datajobs.llm_volatility.parse import read_feed_sentiment
from utils.config import PipelineConfig
from utils.errors import InsufficientRunsError, JoinError
from utils.file_io import read_json, write_csv, write_to_json
from utils.logger import get_console_logger
from utils.schema import (
    FeedSentiment,
    Headline,
    LexicalStat,
    SemanticStat,
    TickerDayScore,
    VolatilityRow,
)

ENSEMBLE_RUN = -1
TICKER_DAY_COLUMNS = ["ticker", "date", "temperature", "run", "score"]
VOLATILITY_COLUMNS = ["temperature", "metric", "level", "value"]


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance with unit costs, counted in Unicode code points."""
    return int(editdistance.eval(a, b))


def pair_distance(a: str, b: str) -> float:
    """D/L_a + D/L_b for one pair of outputs; an empty output's length is clamped to 1."""
    distance = edit_distance(a, b)
    return distance / max(len(a), 1) + distance / max(len(b), 1)


def lexical_volatility(outputs: Sequence[str]) -> float:
    """
    Mean of the length-normalized pair distance over all C(k, 2) pairs of k outputs.

    Raises:
        InsufficientRunsError: if fewer than two outputs are given.
    """
    if len(outputs) < 2:
        raise InsufficientRunsError(f"Lexical volatility needs at least 2 outputs, got {len(outputs)}.")
    terms = [pair_distance(a, b) for a, b in combinations(outputs, 2)]
    return sum(terms) / len(terms)


def feed_range(labels: Sequence[int]) -> float:
    if len(labels) < 2:
        raise InsufficientRunsError(f"A range across runs needs at least 2 runs, got {len(labels)}.")
    return float(max(labels) - min(labels))


def ticker_day_scores(
    feed: Sequence[FeedSentiment], headlines: Sequence[Headline]
) -> List[TickerDayScore]:
    """
    Averages feed labels per (ticker, effective_date, temperature, run).

    A headline tagged with two tickers contributes its label to both.

    Raises:
        JoinError: if a feed sentiment refers to an unknown headline.
    """
    by_id = {h.id: h for h in headlines}
    rows = []
    for sentiment in feed:
        headline = by_id.get(sentiment.headline_id)
        if headline is None:
            raise JoinError(f"Feed sentiment refers to an unknown headline. Headline: {sentiment.headline_id}.")
        for ticker in headline.tickers:
            rows.append(
                {
                    "ticker": ticker,
                    "date": headline.effective_date,
                    "temperature": sentiment.temperature,
                    "run_index": sentiment.run_index,
                    "label": sentiment.label,
                }
            )
    if not rows:
        return []

    means = pd.DataFrame(rows).groupby(["ticker", "date", "temperature", "run_index"], sort=True)["label"].mean()
    return [
        TickerDayScore(
            ticker=str(ticker),
            date=day,
            temperature=float(temperature),
            run_index=int(run_index),
            score=float(score),
        )
        for (ticker, day, temperature, run_index), score in means.items()
    ]


def ensemble_ticker_day_scores(scores: Sequence[TickerDayScore]) -> List[TickerDayScore]:
    """Averages each (ticker, date, temperature) score over its runs, as pseudo-run ENSEMBLE_RUN."""
    grouped: Dict[Tuple, List[float]] = defaultdict(list)
    for score in scores:
        if score.run_index != ENSEMBLE_RUN:
            grouped[(score.ticker, score.date, score.temperature)].append(score.score)
    return [
        TickerDayScore(
            ticker=ticker, date=day, temperature=temperature, run_index=ENSEMBLE_RUN, score=sum(values) / len(values)
        )
        for (ticker, day, temperature), values in sorted(grouped.items())
    ]


def lexical_stats(feed: Sequence[FeedSentiment]) -> Tuple[List[LexicalStat], int]:
    """
    Lexical volatility per (headline, temperature) over its runs' raw fragments.

    Returns:
        Tuple[List[LexicalStat], int]: stats, and the number of groups skipped for having fewer than 2 runs.
    """
    grouped: Dict[Tuple[str, float], List[FeedSentiment]] = defaultdict(list)
    for sentiment in feed:
        grouped[(sentiment.headline_id, sentiment.temperature)].append(sentiment)

    stats = []
    skipped = 0
    for (headline_id, temperature), runs in sorted(grouped.items()):
        if len(runs) < 2:
            skipped += 1
            continue
        outputs = [s.raw_fragment for s in sorted(runs, key=lambda s: s.run_index)]
        stats.append(
            LexicalStat(
                headline_id=headline_id, temperature=temperature, mean_pair_distance=lexical_volatility(outputs)
            )
        )
    return stats, skipped


def feed_semantic_stats(feed: Sequence[FeedSentiment]) -> Tuple[List[SemanticStat], int]:
    grouped: Dict[Tuple[str, float], List[int]] = defaultdict(list)
    for sentiment in feed:
        grouped[(sentiment.headline_id, sentiment.temperature)].append(sentiment.label)

    stats = []
    skipped = 0
    for (headline_id, temperature), labels in sorted(grouped.items()):
        if len(labels) < 2:
            skipped += 1
            continue
        stats.append(SemanticStat(level="feed", key=headline_id, temperature=temperature, range=feed_range(labels)))
    return stats, skipped


def ticker_semantic_stats(scores: Sequence[TickerDayScore]) -> Tuple[List[SemanticStat], int]:
    grouped: Dict[Tuple[str, str, float], List[float]] = defaultdict(list)
    for score in scores:
        if score.run_index != ENSEMBLE_RUN:
            grouped[(score.ticker, score.date.isoformat(), score.temperature)].append(score.score)

    stats = []
    skipped = 0
    for (ticker, day, temperature), values in sorted(grouped.items()):
        if len(values) < 2:
            skipped += 1
            continue
        stats.append(
            SemanticStat(level="ticker", key=f"{ticker}|{day}", temperature=temperature, range=max(values) - min(values))
        )
    return stats, skipped


def _mean(values: List[float]) -> float:
    return sum(values) / len(values)


def corpus_volatility_report(
    lexical: Sequence[LexicalStat],
    semantic: Sequence[SemanticStat],
    temperatures: Sequence[float],
) -> List[VolatilityRow]:
    """
    Corpus means per temperature: lexical volatility over headlines, feed-level range over headlines,
    and ticker-level range over ticker-days.

    A temperature without stats for a metric gets no row for it; the summary marks it incomplete.
    """
    logger = get_console_logger(__name__)
    rows = []
    for temperature in temperatures:
        lexical_values = [s.mean_pair_distance for s in lexical if s.temperature == temperature]
        feed_values = [s.range for s in semantic if s.level == "feed" and s.temperature == temperature]
        ticker_values = [s.range for s in semantic if s.level == "ticker" and s.temperature == temperature]

        for metric, level, values in (
            ("lexical_mean", "feed", lexical_values),
            ("semantic_range_mean", "feed", feed_values),
            ("semantic_range_mean", "ticker", ticker_values),
        ):
            if not values:
                logger.warning(f"No stats to aggregate. Temperature: {temperature}. Metric: {metric}. Level: {level}.")
                continue
            rows.append(VolatilityRow(temperature=temperature, metric=metric, level=level, value=_mean(values)))
    return rows


def volatility_frame(rows: Sequence[VolatilityRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in rows], columns=VOLATILITY_COLUMNS)


def read_volatility_report(file_path: str) -> List[VolatilityRow]:
    frame = pd.read_csv(file_path)
    return [VolatilityRow.model_validate(record) for record in frame.to_dict(orient="records")]


def write_ticker_day_scores(file_path: str, scores: Sequence[TickerDayScore]):
    frame = pd.DataFrame(
        [
            {
                "ticker": s.ticker,
                "date": s.date.isoformat(),
                "temperature": s.temperature,
                "run": s.run_index,
                "score": s.score,
            }
            for s in scores
        ],
        columns=TICKER_DAY_COLUMNS,
    )
    write_csv(file_path, frame)


def read_ticker_day_scores(file_path: str) -> List[TickerDayScore]:
    frame = pd.read_csv(file_path, dtype={"ticker": str, "date": str})
    return [
        TickerDayScore(
            ticker=row.ticker,
            date=row.date,
            temperature=float(row.temperature),
            run_index=int(row.run),
            score=float(row.score),
        )
        for row in frame.itertuples(index=False)
    ]


def compute_metrics(config: PipelineConfig) -> dict:
    """
    Metrics stage: ticker-day scores plus lexical and semantic volatility per temperature.

    Writes `metrics/ticker_day_scores.csv`, `metrics/lexical.csv`, `metrics/semantic.csv`,
    `metrics/volatility.csv` (`temperature,metric,level,value`) and `metrics/metadata.json`.
    """
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    feed = read_feed_sentiment(
        require(artifacts.feed_sentiment, "metrics", "parse"), require(artifacts.fragments, "metrics", "parse")
    )
    parse_metadata = read_json(require(artifacts.metadata(artifacts.parsed_dir), "metrics", "parse"))
    headlines = read_corpus(require(artifacts.headlines, "metrics", "ingest"))

    scores = ticker_day_scores(feed, headlines)
    lexical, lexical_skipped = lexical_stats(feed)
    feed_stats, feed_skipped = feed_semantic_stats(feed)
    ticker_stats, ticker_skipped = ticker_semantic_stats(scores)
    report = corpus_volatility_report(lexical, feed_stats + ticker_stats, config.run.temperatures)

    write_ticker_day_scores(artifacts.ticker_day_scores, scores)
    write_csv(
        os.path.join(artifacts.metrics_dir, "lexical.csv"),
        pd.DataFrame([s.model_dump() for s in lexical], columns=["headline_id", "temperature", "mean_pair_distance"]),
    )
    write_csv(
        os.path.join(artifacts.metrics_dir, "semantic.csv"),
        pd.DataFrame(
            [s.model_dump() for s in feed_stats + ticker_stats], columns=["level", "key", "temperature", "range"]
        ),
    )
    write_csv(artifacts.volatility_report, volatility_frame(report))

    metadata = {
        "ticker_day_count": len(scores),
        "lexical_count": len(lexical),
        "feed_range_count": len(feed_stats),
        "ticker_range_count": len(ticker_stats),
        "skipped_for_insufficient_runs": {
            "lexical": lexical_skipped,
            "feed": feed_skipped,
            "ticker": ticker_skipped,
        },
        "response_digest": parse_metadata["response_digest"],
        "provider": parse_metadata["provider"],
        "model": parse_metadata["model"],
        "failure_count": parse_metadata["failure_count"],
    }
    write_to_json(artifacts.metadata(artifacts.metrics_dir), metadata)
    logger.info(
        f"Metrics completed. Rows: {len(report)}. Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return metadata

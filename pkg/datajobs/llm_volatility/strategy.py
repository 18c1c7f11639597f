# native Python packages
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

# third-party packages
import numpy as np
import pandas as pd

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts, require
from datajobs.llm_volatility.corpus import PriceTable, ingest_prices, load_stage_calendar
from datajobs.llm_volatility.metrics import ENSEMBLE_RUN, ensemble_ticker_day_scores, read_ticker_day_scores
from utils.config import PipelineConfig, SignalConfig
from utils.file_io import read_json, read_jsonl, write_csv, write_jsonl, write_to_json
from utils.logger import get_console_logger
from utils.schema import BacktestResult, Position, RepetitionStat, TickerDayScore, TradingCalendar

# Below this the daily return series is treated as constant and the Sharpe ratio is flagged.
ZERO_STD_TOLERANCE = 1e-14

CONVENTIONS = {
    "baseline": "pooled mean of all ticker-day scores over the lookback trading dates strictly before the date",
    "weighting": "equal weight within each side",
    "returns": "close-to-close from the position date to the next trading date, no costs",
    "sharpe": "mean / population std of daily returns x sqrt(annualization), zero risk-free rate",
}


def deviation_signal(
    scores: Sequence[TickerDayScore],
    config: SignalConfig,
    trading_dates: Optional[Sequence[date]] = None,
) -> Dict[Tuple[str, date], float]:
    """
    Deviation of each ticker-day score from the pooled rolling baseline.

    The baseline for date d is the mean of every ticker-day score (all tickers pooled) on the
    `config.lookback` trading dates strictly before d. Dates whose lookback holds no score are skipped.

    Args:
        scores (Sequence[TickerDayScore]): scores of one (temperature, run).
        config (SignalConfig): signal settings.
        trading_dates (Optional[Sequence[date]]): trading calendar; defaults to the dates present in `scores`.

    Returns:
        Dict[Tuple[str, date], float]: deviation per (ticker, date).
    """
    if not scores:
        return {}

    ordered = sorted(scores, key=lambda s: (s.date, s.ticker))
    dates = sorted(set(trading_dates or ()) | {s.date for s in ordered})
    position = {day: index for index, day in enumerate(dates)}

    sums = np.zeros(len(dates))
    counts = np.zeros(len(dates), dtype=np.int64)
    for score in ordered:
        sums[position[score.date]] += score.score
        counts[position[score.date]] += 1

    deviations = {}
    for score in ordered:
        index = position[score.date]
        lo = max(0, index - config.lookback)
        pool_count = int(counts[lo:index].sum())
        if pool_count == 0:
            continue
        baseline = float(sums[lo:index].sum()) / pool_count
        deviations[(score.ticker, score.date)] = score.score - baseline
    return deviations


def build_positions(deviations: Dict[str, float], day: date, config: SignalConfig) -> List[Position]:
    """
    Equal-weight long-short book for one date.

    Positive-deviation tickers share `long_gross`, negative-deviation tickers share `short_gross`;
    zero deviations and tickers without news get no position.
    """
    longs = sorted(ticker for ticker, value in deviations.items() if value > 0)
    shorts = sorted(ticker for ticker, value in deviations.items() if value < 0)

    positions = [Position(ticker=t, date=day, weight=config.long_gross / len(longs)) for t in longs]
    positions += [Position(ticker=t, date=day, weight=-config.short_gross / len(shorts)) for t in shorts]
    return sorted(positions, key=lambda p: p.ticker)


def positions_from_scores(
    scores: Sequence[TickerDayScore],
    config: SignalConfig,
    trading_dates: Optional[Sequence[date]] = None,
) -> Dict[date, List[Position]]:
    by_date: Dict[date, Dict[str, float]] = defaultdict(dict)
    for (ticker, day), deviation in deviation_signal(scores, config, trading_dates).items():
        by_date[day][ticker] = deviation

    positions = {}
    for day in sorted(by_date):
        book = build_positions(by_date[day], day, config)
        if book:
            positions[day] = book
    return positions


def sharpe_ratio(daily_returns: Sequence[float], annualization: int = 252) -> Tuple[float, bool]:
    """
    Annualized Sharpe ratio with a zero risk-free rate and population standard deviation.

    Returns:
        Tuple[float, bool]: the ratio, and whether it was forced to 0 because the series has no spread.
    """
    values = np.asarray(daily_returns, dtype=float)
    if values.size == 0:
        return 0.0, True
    std = float(np.std(values))
    if std <= ZERO_STD_TOLERANCE:
        return 0.0, True
    return float(np.mean(values) / std * np.sqrt(annualization)), False


def run_backtest(
    positions_by_date: Dict[date, List[Position]],
    prices: PriceTable,
    calendar: TradingCalendar,
    run_index: int = 0,
    temperature: float = 0.0,
    start: Optional[date] = None,
    end: Optional[date] = None,
    annualization: int = 252,
) -> BacktestResult:
    """
    Backtests daily positions against close-to-close returns.

    Every trading date d in [start, end] whose next trading date is also in the window contributes
    r = sum_i w_i(d) * (close(i, next(d)) / close(i, d) - 1), or 0 without positions. A positioned
    ticker missing either close gets weight 0 that day.

    Args:
        positions_by_date (Dict[date, List[Position]]): positions formed on each date.
        prices (PriceTable): daily closes.
        calendar (TradingCalendar): trading dates.
        run_index (int): run recorded on the result.
        temperature (float): temperature recorded on the result.
        start (Optional[date]): first date of the window, default the first price date.
        end (Optional[date]): last date of the window, default the last price date.
        annualization (int): periods per year for the Sharpe ratio.

    Returns:
        BacktestResult: daily returns keyed by position date, total return and Sharpe ratio.
    """
    logger = get_console_logger(__name__)
    price_dates = prices.dates
    if start is None:
        start = price_dates[0] if price_dates else calendar.first
    if end is None:
        end = price_dates[-1] if price_dates else calendar.last

    window = calendar.between(start, end)
    daily_returns = {}
    dropped = 0
    for day, next_day in zip(window, window[1:]):
        daily_return = 0.0
        for position in positions_by_date.get(day, []):
            close = prices.close(position.ticker, day)
            next_close = prices.close(position.ticker, next_day)
            if close is None or next_close is None:
                dropped += 1
                logger.warning(
                    f"Missing price for a positioned ticker. Ticker: {position.ticker}. Date: {day}. "
                    f"Temperature: {temperature}. Run: {run_index}. Setting its weight to 0."
                )
                continue
            daily_return += position.weight * (next_close / close - 1)
        daily_returns[day] = daily_return

    values = np.fromiter(daily_returns.values(), dtype=float, count=len(daily_returns))
    total_return = float(np.prod(1 + values) - 1) if values.size else 0.0
    sharpe, flagged = sharpe_ratio(values, annualization)
    return BacktestResult(
        run_index=run_index,
        temperature=temperature,
        daily_returns=daily_returns,
        total_return=total_return,
        sharpe=sharpe,
        sharpe_flagged=flagged,
        dropped_positions=dropped,
    )


def repetition_stats(results: Sequence[BacktestResult]) -> List[RepetitionStat]:
    """
    Sample mean and sample standard deviation (n - 1) of total return and Sharpe per temperature.

    A temperature with a single run reports std 0 and is flagged.
    """
    grouped: Dict[float, List[BacktestResult]] = defaultdict(list)
    for result in results:
        grouped[result.temperature].append(result)

    stats = []
    for temperature in sorted(grouped):
        group = grouped[temperature]
        returns = np.array([r.total_return for r in group])
        sharpes = np.array([r.sharpe for r in group])
        single = len(group) < 2
        stats.append(
            RepetitionStat(
                temperature=temperature,
                n_runs=len(group),
                return_mean=float(np.mean(returns)),
                return_std=0.0 if single else float(np.std(returns, ddof=1)),
                return_min=float(np.min(returns)),
                return_max=float(np.max(returns)),
                sharpe_mean=float(np.mean(sharpes)),
                sharpe_std=0.0 if single else float(np.std(sharpes, ddof=1)),
                std_flagged=single,
            )
        )
    return stats


def format_mean_std(mean: float, std: float, scale: float = 100.0, digits: int = 2) -> str:
    return f"{mean * scale:.{digits}f} ± {std * scale:.{digits}f}"


def dispersion_frame(stats: Sequence[RepetitionStat]) -> pd.DataFrame:
    """Mean ± std per temperature in columns, return (%) and Sharpe in rows."""
    columns = {"metric": ["Ret(%)", "Sharpe"]}
    for stat in stats:
        columns[f"t={stat.temperature}"] = [
            format_mean_std(stat.return_mean, stat.return_std),
            format_mean_std(stat.sharpe_mean, stat.sharpe_std, scale=1.0),
        ]
    return pd.DataFrame(columns)


def _backtest_one(
    args: Tuple[float, int, List[TickerDayScore], PriceTable, TradingCalendar, SignalConfig, Optional[date], Optional[date]]
) -> BacktestResult:
    temperature, run_index, scores, prices, calendar, config, start, end = args
    positions = positions_from_scores(scores, config, calendar.dates)
    return run_backtest(
        positions,
        prices,
        calendar,
        run_index=run_index,
        temperature=temperature,
        start=start,
        end=end,
        annualization=config.annualization,
    )


def backtest_grid(
    scores: Sequence[TickerDayScore],
    prices: PriceTable,
    calendar: TradingCalendar,
    config: SignalConfig,
    start: Optional[date] = None,
    end: Optional[date] = None,
    workers: int = 1,
    include_ensemble: bool = True,
) -> List[BacktestResult]:
    """
    One backtest per (temperature, run), plus the run-averaged ensemble per temperature.

    Backtests are independent; with `workers` > 1 they run in a process pool.

    Returns:
        List[BacktestResult]: sorted by (temperature, run_index); ensemble results carry run_index ENSEMBLE_RUN.
    """
    runs: Dict[Tuple[float, int], List[TickerDayScore]] = defaultdict(list)
    for score in scores:
        if score.run_index != ENSEMBLE_RUN:
            runs[(score.temperature, score.run_index)].append(score)
    if include_ensemble:
        for score in ensemble_ticker_day_scores(scores):
            runs[(score.temperature, ENSEMBLE_RUN)].append(score)

    tasks = [
        (temperature, run_index, runs[(temperature, run_index)], prices, calendar, config, start, end)
        for temperature, run_index in sorted(runs)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_backtest_one, tasks))
    else:
        results = [_backtest_one(task) for task in tasks]
    return sorted(results, key=lambda r: (r.temperature, r.run_index))


def returns_frame(result: BacktestResult) -> pd.DataFrame:
    days = sorted(result.daily_returns)
    values = np.array([result.daily_returns[d] for d in days], dtype=float)
    return pd.DataFrame(
        {
            "date": [d.isoformat() for d in days],
            "daily_return": values,
            "cum_return": np.cumprod(1 + values) - 1,
        },
        columns=["date", "daily_return", "cum_return"],
    )


def summary_frame(results: Sequence[BacktestResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"temperature": r.temperature, "run": r.run_index, "total_return": r.total_return, "sharpe": r.sharpe}
            for r in results
        ],
        columns=["temperature", "run", "total_return", "sharpe"],
    )


def read_repetition_stats(file_path: str) -> Tuple[List[RepetitionStat], List[RepetitionStat]]:
    """Returns (per-run stats, ensemble stats) written by the backtest stage."""
    per_run, ensemble = [], []
    for record in read_jsonl(file_path):
        target = ensemble if record.pop("ensemble") else per_run
        target.append(RepetitionStat.model_validate(record))
    return per_run, ensemble


def backtest(config: PipelineConfig) -> dict:
    """
    Backtest stage: long-short backtests per (temperature, run) and their repetition statistics.

    Writes per-run `backtest/returns/t<temperature>_run<run>.csv` (`date,daily_return,cum_return`),
    `backtest/summary.csv`, `backtest/stats.csv` (mean ± std, laid out by temperature),
    `backtest/repetition_stats.jsonl` and `backtest/metadata.json`.
    """
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    scores = read_ticker_day_scores(require(artifacts.ticker_day_scores, "backtest", "metrics"))
    metrics_metadata = read_json(require(artifacts.metadata(artifacts.metrics_dir), "backtest", "metrics"))
    prices = ingest_prices(require(artifacts.prices, "backtest", "ingest"))
    require(artifacts.calendar, "backtest", "ingest")
    calendar = load_stage_calendar(artifacts, config)

    results = backtest_grid(
        scores,
        prices,
        calendar,
        config.signal,
        start=config.corpus.backtest_start,
        end=config.corpus.backtest_end,
        workers=config.workers,
    )
    per_run = [r for r in results if r.run_index != ENSEMBLE_RUN]
    ensemble = [r for r in results if r.run_index == ENSEMBLE_RUN]

    for result in results:
        run_label = "ensemble" if result.run_index == ENSEMBLE_RUN else str(result.run_index)
        write_csv(
            os.path.join(artifacts.backtest_dir, "returns", f"t{result.temperature}_run{run_label}.csv"),
            returns_frame(result),
        )
    write_csv(artifacts.backtest_summary, summary_frame(results))

    stats = repetition_stats(per_run)
    ensemble_stats = repetition_stats(ensemble)
    write_csv(artifacts.backtest_stats, dispersion_frame(stats))
    write_jsonl(
        os.path.join(artifacts.backtest_dir, "repetition_stats.jsonl"),
        [{**s.model_dump(), "ensemble": False} for s in stats]
        + [{**s.model_dump(), "ensemble": True} for s in ensemble_stats],
    )

    metadata = {
        "backtest_count": len(per_run),
        "ensemble_count": len(ensemble),
        "dropped_positions": sum(r.dropped_positions for r in results),
        "sharpe_flagged": sum(r.sharpe_flagged for r in results),
        "signal": config.signal.model_dump(),
        "conventions": CONVENTIONS,
        "response_digest": metrics_metadata["response_digest"],
    }
    write_to_json(artifacts.metadata(artifacts.backtest_dir), metadata)
    logger.info(
        f"Backtest completed. Runs: {len(per_run)}. Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return metadata

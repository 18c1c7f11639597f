# native Python packages
import os
import time
from typing import Any, Dict, List, Literal, Sequence

# third-party packages
import pandas as pd
from pydantic import BaseModel, ConfigDict

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts, require
from datajobs.llm_volatility.metrics import read_volatility_report, volatility_frame
from datajobs.llm_volatility.strategy import format_mean_std, read_repetition_stats
from utils.config import PipelineConfig
from utils.errors import ConsistencyError
from utils.file_io import read_json, write_csv, write_to_json
from utils.logger import get_console_logger
from utils.schema import RepetitionStat, VolatilityRow

SCHEMA_VERSION = 1
VOLATILITY_METRICS = (("lexical_mean", "feed"), ("semantic_range_mean", "feed"), ("semantic_range_mean", "ticker"))
STRATEGY_COLUMNS = [
    "temperature",
    "ensemble",
    "n_runs",
    "return_mean",
    "return_std",
    "return_min",
    "return_max",
    "sharpe_mean",
    "sharpe_std",
    "std_flagged",
    "return_display",
    "sharpe_display",
]


class StrategyRow(BaseModel):
    """RepetitionStat plus its `mean ± std` display strings (return in percent, Sharpe as is)."""

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
    return_display: str
    sharpe_display: str

    @classmethod
    def from_stat(cls, stat: RepetitionStat) -> "StrategyRow":
        return cls(
            **stat.model_dump(),
            return_display=format_mean_std(stat.return_mean, stat.return_std),
            sharpe_display=format_mean_std(stat.sharpe_mean, stat.sharpe_std, scale=1.0),
        )


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    provider: str
    model: str
    cache_digest: str


class ExperimentSummary(BaseModel):
    """
    Machine-readable result of one experiment.

    Attributes:
        schema_version (int): version of this layout.
        status (str): "complete" when every configured temperature has all volatility rows and a strategy row.
        incomplete_temperatures (List[float]): configured temperatures missing from either row set.
        config (Dict[str, Any]): snapshot of the pipeline config.
        volatility (List[VolatilityRow]): corpus volatility means per temperature.
        strategy (List[StrategyRow]): return and Sharpe dispersion over repetitions per temperature.
        ensemble (List[StrategyRow]): the same for the run-averaged ensemble.
        failures (Dict[str, int]): failed provider tuples.
        provenance (Provenance): provider, model and response set digest.
        conventions (Dict[str, str]): signal and return conventions the backtest used.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    status: Literal["complete", "partial"]
    incomplete_temperatures: List[float]
    config: Dict[str, Any]
    volatility: List[VolatilityRow]
    strategy: List[StrategyRow]
    ensemble: List[StrategyRow] = []
    failures: Dict[str, int]
    provenance: Provenance
    conventions: Dict[str, str] = {}


def incomplete_temperatures(
    temperatures: Sequence[float], volatility: Sequence[VolatilityRow], strategy: Sequence[RepetitionStat]
) -> List[float]:
    volatility_keys = {(r.temperature, r.metric, r.level) for r in volatility}
    strategy_temperatures = {s.temperature for s in strategy}
    missing = []
    for temperature in temperatures:
        has_volatility = all((temperature, metric, level) in volatility_keys for metric, level in VOLATILITY_METRICS)
        if not has_volatility or temperature not in strategy_temperatures:
            missing.append(temperature)
    return sorted(missing)


def strategy_frame(strategy: Sequence[StrategyRow], ensemble: Sequence[StrategyRow]) -> pd.DataFrame:
    records = [{**row.model_dump(), "ensemble": False} for row in strategy]
    records += [{**row.model_dump(), "ensemble": True} for row in ensemble]
    return pd.DataFrame(records, columns=STRATEGY_COLUMNS)


def emit_summary(
    report_dir: str,
    volatility: Sequence[VolatilityRow],
    strategy: Sequence[RepetitionStat],
    config: PipelineConfig,
    volatility_digest: str,
    strategy_digest: str,
    provider: str,
    model: str,
    failure_count: int = 0,
    ensemble: Sequence[RepetitionStat] = (),
    conventions: Dict[str, str] = None,
) -> ExperimentSummary:
    """
    Writes `summary.json`, `fig1_volatility.csv` and `table2_strategy.csv` into `report_dir`.

    Re-emitting identical inputs rewrites identical bytes.

    Args:
        report_dir (str): output directory.
        volatility (Sequence[VolatilityRow]): corpus volatility rows.
        strategy (Sequence[RepetitionStat]): per-temperature repetition stats.
        config (PipelineConfig): config snapshotted into the summary.
        volatility_digest (str): response set digest the volatility rows were computed from.
        strategy_digest (str): response set digest the strategy stats were computed from.
        provider (str): provider name.
        model (str): model name.
        failure_count (int): provider tuples that exhausted their retries.
        ensemble (Sequence[RepetitionStat]): repetition stats of the ensemble pseudo-run.
        conventions (Dict[str, str]): backtest conventions to record.

    Returns:
        ExperimentSummary: the emitted summary.

    Raises:
        ConsistencyError: if the two inputs come from different response sets.
    """
    logger = get_console_logger(__name__)
    if volatility_digest != strategy_digest:
        raise ConsistencyError(
            f"Volatility and strategy inputs come from different response sets. "
            f"Volatility digest: {volatility_digest}. Strategy digest: {strategy_digest}."
        )

    missing = incomplete_temperatures(config.run.temperatures, volatility, strategy)
    if missing:
        logger.warning(f"Summary is partial. Incomplete temperatures: {missing}.")

    summary = ExperimentSummary(
        status="partial" if missing or not strategy else "complete",
        incomplete_temperatures=missing,
        config=config.snapshot(),
        volatility=sorted(volatility, key=lambda r: (r.temperature, r.metric, r.level)),
        strategy=[StrategyRow.from_stat(s) for s in sorted(strategy, key=lambda s: s.temperature)],
        ensemble=[StrategyRow.from_stat(s) for s in sorted(ensemble, key=lambda s: s.temperature)],
        failures={"provider_tuples": failure_count},
        provenance=Provenance(provider=provider, model=model, cache_digest=volatility_digest),
        conventions=conventions or {},
    )

    write_to_json(os.path.join(report_dir, "summary.json"), summary.model_dump(mode="json"))
    write_csv(os.path.join(report_dir, "fig1_volatility.csv"), volatility_frame(summary.volatility))
    write_csv(os.path.join(report_dir, "table2_strategy.csv"), strategy_frame(summary.strategy, summary.ensemble))
    return summary


def load_summary(file_path: str) -> ExperimentSummary:
    return ExperimentSummary.model_validate(read_json(file_path))


def report(config: PipelineConfig) -> ExperimentSummary:
    """Report stage: assembles the metrics and backtest outputs into `report/`."""
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    volatility = read_volatility_report(require(artifacts.volatility_report, "report", "metrics"))
    metrics_metadata = read_json(require(artifacts.metadata(artifacts.metrics_dir), "report", "metrics"))
    stats_path = require(os.path.join(artifacts.backtest_dir, "repetition_stats.jsonl"), "report", "backtest")
    backtest_metadata = read_json(require(artifacts.metadata(artifacts.backtest_dir), "report", "backtest"))
    strategy, ensemble = read_repetition_stats(stats_path)

    summary = emit_summary(
        artifacts.report_dir,
        volatility,
        strategy,
        config,
        volatility_digest=metrics_metadata["response_digest"],
        strategy_digest=backtest_metadata["response_digest"],
        provider=metrics_metadata["provider"],
        model=metrics_metadata["model"],
        failure_count=metrics_metadata["failure_count"],
        ensemble=ensemble,
        conventions=backtest_metadata.get("conventions"),
    )
    logger.info(
        f"Report completed. Status: {summary.status}. Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return summary

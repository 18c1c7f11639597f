# native Python packages
import os
from datetime import date, time
from typing import Any, Dict, List, Optional

# third-party packages
import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

# custom packages
from utils.errors import ConfigError
from utils.schema import PromptStyle


class PathsConfig(BaseModel):
    """
    Input and output locations. Relative paths resolve against the config file's directory.

    Attributes:
        headlines (str): headline JSONL file.
        prices (str): price CSV file (`ticker,date,close`).
        calendar (Optional[str]): trading-date CSV; weekdays between the first and last price date when absent.
        cache (str): response cache root.
        output (str): root directory for stage artifacts.
        universe (Optional[str]): optional file with one ticker per line, merged with `corpus.universe`.
        planted_labels (Optional[str]): optional CSV `headline_id,label` for the synthetic provider.
        replay_archive (Optional[str]): JSONL archive or cache directory served by the replay provider.
    """

    model_config = ConfigDict(extra="forbid")

    headlines: str
    prices: str
    calendar: Optional[str] = None
    cache: str = "cache"
    output: str = "output"
    universe: Optional[str] = None
    planted_labels: Optional[str] = None
    replay_archive: Optional[str] = None


INPUT_PATH_FIELDS = ("headlines", "prices", "calendar", "universe", "planted_labels", "replay_archive")


class CorpusConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    universe: List[str] = Field(default_factory=list)
    prominence_floor: float = Field(default=0.8, ge=0, le=1)
    timezone: str = "America/New_York"
    cutoff_time: time = time(15, 0)
    backtest_start: Optional[date] = None
    backtest_end: Optional[date] = None


class PromptConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    style: PromptStyle = PromptStyle.BATCH
    template: Optional[str] = None
    batch_size: int = Field(default=50, ge=1)


class RunConfig(BaseModel):
    """
    The (temperature x repetition) grid and how it is executed.

    Attributes:
        temperatures (List[float]): decoding temperatures, each in [0, 2].
        repetitions (int): k, independent generations per (prompt, temperature).
        provider (str): registered provider name (`http`, `replay` or `synthetic`).
        model (str): model name recorded with every response.
        rate_limit (int): maximum network requests per 60 seconds.
        max_retries (int): retries after the first failed attempt.
        max_in_flight (int): concurrent provider requests.
    """

    model_config = ConfigDict(extra="forbid")

    temperatures: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0])
    repetitions: int = Field(default=3, ge=1)
    provider: str = "synthetic"
    model: str = "synthetic-v1"
    rate_limit: int = Field(default=60, ge=1)
    max_retries: int = Field(default=3, ge=0)
    max_in_flight: int = Field(default=4, ge=1)

    @field_validator("temperatures")
    @classmethod
    def _temperatures_in_range(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one temperature is required")
        for temperature in value:
            if not 0 <= temperature <= 2:
                raise ValueError(f"temperature {temperature} is outside [0, 2]")
        if len(set(value)) != len(value):
            raise ValueError("temperatures must be distinct")
        return [float(t) for t in value]


class ProviderConfig(BaseModel):
    """
    Provider-specific settings. Only the fields of the selected provider are read.

    `noise_schedule` maps a temperature to the synthetic provider's noise; temperatures
    missing from it use `noise`.
    """

    model_config = ConfigDict(extra="forbid")

    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = Field(default=60.0, gt=0)
    noise: float = Field(default=0.1, ge=0, le=1)
    noise_schedule: Dict[str, float] = Field(default_factory=dict)

    @field_validator("noise_schedule")
    @classmethod
    def _noise_in_range(cls, value: Dict[str, float]) -> Dict[str, float]:
        for temperature, noise in value.items():
            float(temperature)
            if not 0 <= noise <= 1:
                raise ValueError(f"noise {noise} for temperature {temperature} is outside [0, 1]")
        return value

    def noise_for(self, temperature: float) -> float:
        for key, noise in self.noise_schedule.items():
            if float(key) == temperature:
                return noise
        return self.noise


class SignalConfig(BaseModel):
    """
    Long-short signal settings.

    Attributes:
        lookback (int): trading days in the rolling baseline (21, one trading month).
        long_gross (float): gross long exposure shared equally by positive-deviation tickers.
        short_gross (float): gross short exposure shared equally by negative-deviation tickers.
        annualization (int): periods per year for the Sharpe ratio.
    """

    model_config = ConfigDict(extra="forbid")

    lookback: int = Field(default=21, ge=1)
    long_gross: float = Field(default=0.5, ge=0)
    short_gross: float = Field(default=0.5, ge=0)
    annualization: int = Field(default=252, ge=1)


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    paths: PathsConfig
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    prompt: PromptConfig = Field(default_factory=PromptConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    signal: SignalConfig = Field(default_factory=SignalConfig)
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _resolve(base_dir: str, path: Optional[str]) -> Optional[str]:
    if path is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def load_config(
    config_path: str, overrides: Optional[Dict[str, Any]] = None, check_paths: bool = True
) -> PipelineConfig:
    """
    Loads a TOML pipeline config and applies dotted-key overrides.

    Args:
        config_path (str): path to the TOML file.
        overrides (Optional[Dict[str, Any]]): values keyed by dotted field path, e.g. {"run.repetitions": 5}.
            None values are ignored so unset CLI flags can be passed through.
        check_paths (bool): whether input files named under `paths` must already exist.

    Returns:
        PipelineConfig: the validated config with paths resolved against the config file's directory.

    Raises:
        ConfigError: on a missing or malformed file, an invalid value, or a missing input file.
    """
    try:
        with open(config_path, "rb") as file:
            raw = tomli.load(file)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found. Path: {config_path}") from e
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"Config file is not valid TOML. Path: {config_path}. Reason: {e}") from e

    for dotted_key, value in (overrides or {}).items():
        if value is None:
            continue
        section = raw
        *parents, leaf = dotted_key.split(".")
        for parent in parents:
            section = section.setdefault(parent, {})
        section[leaf] = value

    try:
        config = PipelineConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid config. Path: {config_path}. Reason: {e}") from e

    base_dir = os.path.dirname(os.path.abspath(config_path))
    paths = config.paths.model_copy(
        update={
            name: _resolve(base_dir, getattr(config.paths, name))
            for name in PathsConfig.model_fields
        }
    )
    prompt = config.prompt.model_copy(update={"template": _resolve(base_dir, config.prompt.template)})
    if check_paths:
        for name in INPUT_PATH_FIELDS:
            value = getattr(paths, name)
            if value is not None and not os.path.exists(value):
                raise ConfigError(f"Input file not found. Field: paths.{name}. Path: {value}")
    return config.model_copy(update={"paths": paths, "prompt": prompt})

from datetime import date

import pytest

from datajobs.llm_volatility.synthetic_data import generate_dataset
from utils.config import load_config

EXPERIMENT_CONFIG = """
seed = 7

[paths]
headlines = "raw/headlines.jsonl"
prices = "raw/prices.csv"
calendar = "raw/calendar.csv"
cache = "cache"
output = "output"

[corpus]
universe = ["AAPL", "AMZN", "JPM", "MSFT", "XOM"]

[prompt]
style = "batch"
batch_size = 20

[run]
temperatures = [0.0, 1.0]
repetitions = 3

[provider]
noise_schedule = { "0.0" = 0.0, "1.0" = 0.3 }

[signal]
lookback = 5
"""


@pytest.fixture
def experiment_dir(tmp_path):
    generate_dataset(str(tmp_path / "raw"), n_headlines=120, start=date(2024, 1, 2), n_days=60, seed=3)
    (tmp_path / "experiment.toml").write_text(EXPERIMENT_CONFIG, encoding="utf-8")
    return tmp_path


@pytest.fixture
def config_path(experiment_dir):
    return str(experiment_dir / "experiment.toml")


@pytest.fixture
def experiment_config(config_path):
    return load_config(config_path)

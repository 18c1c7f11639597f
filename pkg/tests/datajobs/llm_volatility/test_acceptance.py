from datetime import date

import pytest

from datajobs.llm_volatility.cli import STAGES
from datajobs.llm_volatility.synthetic_data import generate_dataset
from utils.config import load_config

EXPERIMENT_CONFIG = """
[paths]
headlines = "raw/headlines.jsonl"
prices = "raw/prices.csv"
calendar = "raw/calendar.csv"
cache = "cache"
output = "output"

[prompt]
style = "batch"
batch_size = 20

[signal]
lookback = 5
"""


def run_experiment(base_dir, n_headlines, temperatures, noise_schedule, seed, noise=0.0):
    generate_dataset(str(base_dir / "raw"), n_headlines=n_headlines, start=date(2024, 1, 2), n_days=120, seed=seed)
    config_path = base_dir / "experiment.toml"
    config_path.write_text(EXPERIMENT_CONFIG, encoding="utf-8")
    config = load_config(
        str(config_path),
        {
            "seed": seed,
            "run.temperatures": temperatures,
            "run.repetitions": 3,
            "provider.noise": noise,
            "provider.noise_schedule": {str(t): v for t, v in noise_schedule.items()},
        },
    )
    summary = None
    for _, stage, _ in STAGES:
        summary = stage(config)
    return summary


def volatility_by_temperature(summary, metric, level):
    return [
        row.value
        for row in sorted(summary.volatility, key=lambda r: r.temperature)
        if row.metric == metric and row.level == level
    ]


def test_noiseless_provider_has_no_volatility(tmp_path):
    summary = run_experiment(tmp_path, 500, [0.0, 1.0], {0.0: 0.0, 1.0: 0.0}, seed=11)

    assert summary.status == "complete"
    for metric, level in [("lexical_mean", "feed"), ("semantic_range_mean", "feed"), ("semantic_range_mean", "ticker")]:
        assert volatility_by_temperature(summary, metric, level) == [0.0, 0.0]
    for stat in summary.strategy:
        assert stat.n_runs == 3
        assert stat.return_std == pytest.approx(0.0, abs=1e-12)
        assert stat.return_min == stat.return_max


def test_volatility_increases_with_noise(tmp_path):
    temperatures = [0.05, 0.2, 0.5]
    summary = run_experiment(tmp_path, 1000, temperatures, {t: t for t in temperatures}, seed=5)

    for metric, level in [("lexical_mean", "feed"), ("semantic_range_mean", "feed"), ("semantic_range_mean", "ticker")]:
        values = volatility_by_temperature(summary, metric, level)
        assert len(values) == 3
        assert values[0] < values[1] < values[2], (metric, level, values)


@pytest.mark.parametrize("seeds", [[1, 2, 3, 4, 5]])
def test_return_dispersion_grows_with_noise(tmp_path, seeds):
    temperatures = [0.05, 0.2, 0.5]
    grows = 0
    for seed in seeds:
        summary = run_experiment(tmp_path / f"seed{seed}", 1000, temperatures, {t: t for t in temperatures}, seed=seed)
        stds = [s.return_std for s in sorted(summary.strategy, key=lambda s: s.temperature)]
        grows += stds[0] <= stds[1] <= stds[2]
    assert grows > len(seeds) // 2

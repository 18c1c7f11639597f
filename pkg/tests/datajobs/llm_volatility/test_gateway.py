import os
import threading
from datetime import datetime, timezone

import pytest

from datajobs.llm_volatility.artifacts import StageArtifacts
from datajobs.llm_volatility.corpus import ingest
from datajobs.llm_volatility.gateway import (
    build_provider,
    distinct_prompts,
    execute_grid,
    query,
    read_failures,
    read_responses,
    response_set_digest,
)
from datajobs.llm_volatility.prompt import render_single
from utils.config import RunConfig
from utils.errors import ConfigError, ProviderError, ReplayMissError
from utils.file_io import read_json
from utils.llm.base import Provider
from utils.llm.cache import ResponseCache
from utils.llm.replay_provider import ReplayProvider
from utils.llm.synthetic_provider import SyntheticProvider
from utils.schema import LlmResponse, PromptJob, PromptStyle


class EchoProvider(Provider):
    name = "echo"

    def __init__(self, fail_first=0, always_fail=()):
        super().__init__("echo-1")
        self.fail_first = fail_first
        self.always_fail = set(always_fail)
        self.seen = {}
        self.lock = threading.Lock()

    def _generate(self, request):
        with self.lock:
            self.seen[request.key] = self.seen.get(request.key, 0) + 1
            attempt = self.seen[request.key]
        if request.run_index in self.always_fail or attempt <= self.fail_first:
            raise ProviderError(f"transient failure {attempt}")
        return f"POSITIVE ({request.temperature}) run {request.run_index}"


@pytest.fixture
def jobs(make_headline):
    return [render_single(make_headline(f"story {i}")) for i in range(5)]


@pytest.fixture
def run_config():
    return RunConfig(temperatures=[0.0, 0.25, 0.5, 1.0], repetitions=3, max_retries=2, max_in_flight=4)


def no_sleep(_):
    return None


class TestExecuteGrid:
    def test_covers_the_grid(self, jobs, run_config, tmp_path):
        provider = EchoProvider()
        result = execute_grid(jobs, run_config, provider, ResponseCache(str(tmp_path)), sleep=no_sleep)

        assert len(result.responses) == 60
        assert result.failures == []
        assert result.provider_calls == 60
        assert {r.key for r in result.responses} == {
            (j.prompt_hash, t, k) for j in jobs for t in run_config.temperatures for k in range(3)
        }
        keys = [(r.prompt_hash, r.temperature, r.run_index) for r in result.responses]
        assert keys == sorted(keys)

    def test_warm_cache_makes_no_calls(self, jobs, run_config, tmp_path):
        cache = ResponseCache(str(tmp_path))
        first = execute_grid(jobs, run_config, EchoProvider(), cache, sleep=no_sleep)

        provider = EchoProvider()
        second = execute_grid(jobs, run_config, provider, cache, sleep=no_sleep)
        assert provider.call_count == 0
        assert second.provider_calls == 0
        assert second.cache_hits == 60
        assert response_set_digest(second.responses) == response_set_digest(first.responses)

    def test_transient_failure_is_retried_once(self, jobs, run_config, tmp_path):
        provider = EchoProvider(fail_first=1)
        result = execute_grid(jobs, run_config, provider, ResponseCache(str(tmp_path)), sleep=no_sleep)
        assert len(result.responses) == 60
        assert result.retries == 60
        assert result.provider_calls == 120

    def test_exhausted_retries_become_failures(self, jobs, run_config, tmp_path):
        provider = EchoProvider(always_fail={2})
        result = execute_grid(jobs, run_config, provider, ResponseCache(str(tmp_path)), sleep=no_sleep)

        assert len(result.responses) == 40
        assert len(result.failures) == 20
        assert all(f.run_index == 2 and f.attempts == 3 for f in result.failures)
        assert {(f.prompt_hash, f.temperature, f.run_index) for f in result.failures}.isdisjoint(
            {r.key for r in result.responses}
        )

    def test_failed_tuples_resume_from_cache(self, jobs, run_config, tmp_path):
        cache = ResponseCache(str(tmp_path))
        execute_grid(jobs, run_config, EchoProvider(always_fail={2}), cache, sleep=no_sleep)

        provider = EchoProvider()
        result = execute_grid(jobs, run_config, provider, cache, sleep=no_sleep)
        assert provider.call_count == 20
        assert len(result.responses) == 60 and result.failures == []

    def test_duplicate_prompts_share_responses(self, jobs, run_config, tmp_path):
        duplicated = jobs + [PromptJob(prompt_text=jobs[0].prompt_text, headline_ids=("other",), style=PromptStyle.SINGLE)]
        assert len(distinct_prompts(duplicated)) == 5
        result = execute_grid(duplicated, run_config, EchoProvider(), ResponseCache(str(tmp_path)), sleep=no_sleep)
        assert len(result.responses) == 60

    def test_replay_miss_is_fatal(self, jobs, run_config, tmp_path):
        with pytest.raises(ReplayMissError):
            execute_grid(jobs, run_config, ReplayProvider({}), ResponseCache(str(tmp_path)), sleep=no_sleep)


def make_response(**overrides):
    fields = dict(
        prompt_hash="p",
        temperature=0.5,
        run_index=0,
        raw_text="POSITIVE",
        provider="synthetic",
        model="m",
        created_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )
    fields.update(overrides)
    return LlmResponse(**fields)


def test_digest_ignores_order_and_creation_time():
    a = make_response(run_index=0)
    b = make_response(run_index=1, created_at=datetime(2025, 1, 1, tzinfo=timezone.utc))
    c = make_response(run_index=1)
    assert response_set_digest([a, b]) == response_set_digest([c, a])
    assert response_set_digest([a, b]) != response_set_digest([a, make_response(run_index=1, raw_text="NEGATIVE")])


def test_unknown_provider(experiment_config):
    config = experiment_config.model_copy(
        update={"run": experiment_config.run.model_copy(update={"provider": "nope"})}
    )
    with pytest.raises(ConfigError, match="nope"):
        build_provider(config, ["h"])


class TestQueryStage:
    def test_writes_responses_and_metadata(self, experiment_config):
        ingest(experiment_config)
        result = query(experiment_config)
        artifacts = StageArtifacts(experiment_config.paths.output)

        metadata = read_json(artifacts.metadata(artifacts.responses_dir))
        assert metadata["response_count"] == len(result.responses) == metadata["prompt_count"] * 2 * 3
        assert metadata["failure_count"] == 0
        assert metadata["provider"] == "synthetic"
        assert read_responses(artifacts.responses) == result.responses
        assert read_failures(artifacts.failures) == []

    def test_second_query_is_served_from_cache(self, experiment_config):
        ingest(experiment_config)
        query(experiment_config)
        artifacts = StageArtifacts(experiment_config.paths.output)
        first = open(artifacts.responses, "rb").read()

        second = query(experiment_config)
        assert second.provider_calls == 0
        assert open(artifacts.responses, "rb").read() == first

    def test_replay_provider_is_deterministic(self, experiment_config, tmp_path):
        ingest(experiment_config)
        query(experiment_config)
        artifacts = StageArtifacts(experiment_config.paths.output)

        replay_config = experiment_config.model_copy(
            update={
                "run": experiment_config.run.model_copy(update={"provider": "replay", "model": "archive"}),
                "paths": experiment_config.paths.model_copy(
                    update={"replay_archive": artifacts.responses, "cache": str(tmp_path / "replay-cache")}
                ),
            }
        )
        first = query(replay_config)
        first_bytes = open(artifacts.responses, "rb").read()
        second = query(replay_config)

        assert first.provider_calls == len(first.responses)
        assert second.provider_calls == 0
        assert open(artifacts.responses, "rb").read() == first_bytes
        assert response_set_digest(second.responses) == response_set_digest(first.responses)
        assert os.path.isdir(tmp_path / "replay-cache" / "replay" / "archive")


def test_synthetic_provider_follows_the_noise_schedule(experiment_config):
    provider = build_provider(experiment_config, ["h"])
    assert isinstance(provider, SyntheticProvider)
    assert provider.noise_for(0.0) == 0.0
    assert provider.noise_for(1.0) == 0.3
    for temperature in experiment_config.run.temperatures:
        assert provider.noise_for(temperature) == experiment_config.provider.noise_for(temperature)

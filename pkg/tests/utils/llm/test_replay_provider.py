from datetime import datetime, timezone

import pytest

from utils.errors import ReplayMissError
from utils.file_io import write_jsonl
from utils.llm.base import GenerationRequest
from utils.llm.cache import ResponseCache
from utils.llm.replay_provider import ReplayProvider
from utils.schema import LlmResponse, PromptStyle


def make_response(prompt_hash="p1", temperature=0.5, run_index=0, raw_text="POSITIVE (0.9)"):
    return LlmResponse(
        prompt_hash=prompt_hash,
        temperature=temperature,
        run_index=run_index,
        raw_text=raw_text,
        provider="http",
        model="gpt-x",
        created_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )


def make_request(prompt_hash="p1", temperature=0.5, run_index=0):
    return GenerationRequest(
        prompt_text="unused",
        prompt_hash=prompt_hash,
        temperature=temperature,
        run_index=run_index,
        headline_ids=("h1",),
        style=PromptStyle.SINGLE,
    )


def test_serves_archived_text_byte_exactly():
    raw = "  Positive (0.8)\r\n\tmore text  "
    provider = ReplayProvider.from_responses([make_response(raw_text=raw)])
    assert provider.generate(make_request()) == raw


def test_miss_names_the_tuple():
    provider = ReplayProvider.from_responses([make_response()])
    with pytest.raises(ReplayMissError) as error:
        provider.generate(make_request(run_index=1))
    assert error.value.key == ("p1", 0.5, 1)
    assert "Run: 1" in str(error.value)


def test_from_jsonl(tmp_path):
    path = tmp_path / "archive.jsonl"
    write_jsonl(str(path), [make_response(run_index=i, raw_text=f"r{i}").model_dump(mode="json") for i in range(3)])
    provider = ReplayProvider.from_path(str(path))
    assert len(provider) == 3
    assert provider.generate(make_request(run_index=2)) == "r2"


def test_from_cache_directory(tmp_path):
    cache = ResponseCache(str(tmp_path / "cache"))
    cache.put(make_response(temperature=1.0, raw_text="NEGATIVE"))
    provider = ReplayProvider.from_path(str(tmp_path / "cache"))
    assert provider.generate(make_request(temperature=1.0)) == "NEGATIVE"

from datetime import datetime, timezone

import pytest

from datajobs.llm_volatility.artifacts import StageArtifacts
from datajobs.llm_volatility.corpus import ingest
from datajobs.llm_volatility.gateway import query
from datajobs.llm_volatility.parse import parse, parse_responses, read_feed_sentiment, write_feed_sentiment
from datajobs.llm_volatility.prompt import render_batch, render_single
from utils.errors import JoinError, MissingArtifactError
from utils.file_io import read_json
from utils.schema import LlmResponse


def respond(job, raw_text, temperature=0.0, run_index=0):
    return LlmResponse(
        prompt_hash=job.prompt_hash,
        temperature=temperature,
        run_index=run_index,
        raw_text=raw_text,
        provider="test",
        model="m",
        created_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )


@pytest.fixture
def headlines(make_headline):
    return [make_headline(f"story {i}") for i in range(3)]


def test_single_responses(headlines):
    jobs = [render_single(h) for h in headlines]
    responses = [respond(jobs[0], "not negative (0.7)"), respond(jobs[1], "NEGATIVE"), respond(jobs[2], "unsure")]

    sentiments, coverage = parse_responses(responses, jobs)
    by_id = {s.headline_id: s for s in sentiments}
    assert by_id[headlines[0].id].label == 1
    assert by_id[headlines[0].id].confidence == 0.7
    assert by_id[headlines[1].id].label == -1
    assert by_id[headlines[2].id].label == 0
    assert by_id[headlines[2].id].raw_fragment == "unsure"
    assert coverage == {"missing": 0, "duplicates": 0, "out_of_range": 0}


def test_batch_responses_with_gaps(headlines):
    job = render_batch(headlines)[0]
    response = respond(job, "1. POSITIVE (0.9)\n1. NEGATIVE\n3. NEGATIVE (0.8)\n4. NEUTRAL", run_index=2)

    sentiments, coverage = parse_responses([response], [job])
    labels = {s.headline_id: s.label for s in sentiments}
    assert labels == {headlines[0].id: 1, headlines[1].id: 0, headlines[2].id: -1}
    assert all(s.run_index == 2 for s in sentiments)
    assert coverage == {"missing": 1, "duplicates": 1, "out_of_range": 1}


def test_sorted_output(headlines):
    jobs = [render_single(h) for h in headlines]
    responses = [respond(j, "positive", t, k) for j in reversed(jobs) for t in (1.0, 0.0) for k in (1, 0)]
    sentiments, _ = parse_responses(responses, jobs)
    keys = [(s.headline_id, s.temperature, s.run_index) for s in sentiments]
    assert keys == sorted(keys)
    assert len(keys) == 12


def test_unknown_prompt(headlines):
    job = render_single(headlines[0])
    with pytest.raises(JoinError):
        parse_responses([respond(job, "positive")], [render_single(headlines[1])])


def test_feed_sentiment_files_round_trip(headlines, tmp_path):
    jobs = [render_single(h) for h in headlines]
    sentiments, _ = parse_responses(
        [respond(jobs[0], "positive (0.6)"), respond(jobs[1], "line one\nline, two"), respond(jobs[2], "")], jobs
    )
    csv_path, fragments_path = str(tmp_path / "feed.csv"), str(tmp_path / "fragments.jsonl")
    write_feed_sentiment(csv_path, fragments_path, sentiments)
    assert read_feed_sentiment(csv_path, fragments_path) == sentiments

    with open(csv_path, encoding="utf-8") as file:
        assert file.readline().strip() == "headline_id,temperature,run,label,confidence"


def test_parse_before_query(experiment_config):
    with pytest.raises(MissingArtifactError, match="`query`"):
        parse(experiment_config)


def test_parse_stage(experiment_config):
    ingest(experiment_config)
    query(experiment_config)
    metadata = parse(experiment_config)
    artifacts = StageArtifacts(experiment_config.paths.output)
    query_metadata = read_json(artifacts.metadata(artifacts.responses_dir))

    assert metadata["response_digest"] == query_metadata["response_digest"]
    assert metadata["sentiment_count"] == 120 * 2 * 3
    assert sum(metadata["label_counts"].values()) == metadata["sentiment_count"]
    assert metadata["batch_coverage"]["missing"] == 0

# native Python packages
import json
import time
from collections import Counter
from typing import Dict, List, Sequence, Tuple

# third-party packages
import pandas as pd

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts, require
from datajobs.llm_volatility.gateway import read_jobs, read_responses, response_set_digest
from utils.config import PipelineConfig
from utils.errors import JoinError
from utils.file_io import iter_jsonl, read_json, write_csv, write_jsonl, write_to_json
from utils.logger import get_console_logger
from utils.parser.sentiment_parser import extract_label, split_batch
from utils.schema import FeedSentiment, LlmResponse, PromptJob, PromptStyle

FEED_SENTIMENT_COLUMNS = ["headline_id", "temperature", "run", "label", "confidence"]


def parse_responses(
    responses: Sequence[LlmResponse], jobs: Sequence[PromptJob]
) -> Tuple[List[FeedSentiment], Dict[str, int]]:
    """
    Turns raw responses into one FeedSentiment per (headline, temperature, run).

    Single-style responses are parsed whole; batch responses are split by the indexes in the prompt
    first. Headlines whose index is missing from a batch response get an empty fragment, which the
    label rules map to 0.

    Returns:
        Tuple[List[FeedSentiment], Dict[str, int]]: sentiments sorted by (headline_id, temperature, run),
        and a coverage report counting missing, duplicate and out-of-range batch indexes.

    Raises:
        JoinError: if a response's prompt hash matches no job.
    """
    jobs_by_hash: Dict[str, List[PromptJob]] = {}
    for job in jobs:
        jobs_by_hash.setdefault(job.prompt_hash, []).append(job)

    coverage = Counter({"missing": 0, "duplicates": 0, "out_of_range": 0})
    sentiments = []
    for response in responses:
        matched = jobs_by_hash.get(response.prompt_hash)
        if not matched:
            raise JoinError(f"Response has no matching prompt job. Prompt: {response.prompt_hash}.")

        for job in matched:
            if job.style == PromptStyle.SINGLE:
                fragments = {job.headline_ids[0]: response.raw_text}
            else:
                split = split_batch(response.raw_text, job.headline_ids)
                fragments = split.fragments
                coverage["missing"] += len(split.missing)
                coverage["duplicates"] += len(split.duplicates)
                coverage["out_of_range"] += len(split.out_of_range)

            for headline_id in job.headline_ids:
                fragment = fragments[headline_id]
                label, confidence = extract_label(fragment)
                sentiments.append(
                    FeedSentiment(
                        headline_id=headline_id,
                        temperature=response.temperature,
                        run_index=response.run_index,
                        label=label,
                        confidence=confidence,
                        raw_fragment=fragment,
                    )
                )

    sentiments.sort(key=lambda s: (s.headline_id, s.temperature, s.run_index))
    return sentiments, dict(coverage)


def write_feed_sentiment(csv_path: str, fragments_path: str, sentiments: Sequence[FeedSentiment]):
    """Writes the `headline_id,temperature,run,label,confidence` CSV and the raw fragments next to it."""
    frame = pd.DataFrame(
        [
            {
                "headline_id": s.headline_id,
                "temperature": s.temperature,
                "run": s.run_index,
                "label": s.label,
                "confidence": s.confidence,
            }
            for s in sentiments
        ],
        columns=FEED_SENTIMENT_COLUMNS,
    )
    write_csv(csv_path, frame)
    write_jsonl(
        fragments_path,
        (
            {
                "headline_id": s.headline_id,
                "temperature": s.temperature,
                "run": s.run_index,
                "raw_fragment": s.raw_fragment,
            }
            for s in sentiments
        ),
    )


def read_feed_sentiment(csv_path: str, fragments_path: str) -> List[FeedSentiment]:
    frame = pd.read_csv(csv_path, dtype={"headline_id": str})
    fragments = {}
    for _, line in iter_jsonl(fragments_path):
        record = json.loads(line)
        fragments[(record["headline_id"], float(record["temperature"]), int(record["run"]))] = record[
            "raw_fragment"
        ]

    sentiments = []
    for row in frame.itertuples(index=False):
        key = (row.headline_id, float(row.temperature), int(row.run))
        sentiments.append(
            FeedSentiment(
                headline_id=row.headline_id,
                temperature=float(row.temperature),
                run_index=int(row.run),
                label=int(row.label),
                confidence=None if pd.isna(row.confidence) else float(row.confidence),
                raw_fragment=fragments.get(key, ""),
            )
        )
    return sentiments


def parse(config: PipelineConfig) -> dict:
    """
    Parse stage: extracts feed-level labels from the query stage's responses.

    Writes `parsed/feed_sentiment.csv`, `parsed/fragments.jsonl` and `parsed/metadata.json`.
    """
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    responses = read_responses(require(artifacts.responses, "parse", "query"))
    jobs = read_jobs(require(artifacts.jobs, "parse", "query"))
    query_metadata = read_json(require(artifacts.metadata(artifacts.responses_dir), "parse", "query"))

    sentiments, coverage = parse_responses(responses, jobs)
    write_feed_sentiment(artifacts.feed_sentiment, artifacts.fragments, sentiments)

    labels = Counter(s.label for s in sentiments)
    metadata = {
        "sentiment_count": len(sentiments),
        "label_counts": {str(label): labels.get(label, 0) for label in (-1, 0, 1)},
        "with_confidence": sum(s.confidence is not None for s in sentiments),
        "batch_coverage": coverage,
        "response_digest": response_set_digest(responses),
        "provider": query_metadata["provider"],
        "model": query_metadata["model"],
        "failure_count": query_metadata["failure_count"],
    }
    write_to_json(artifacts.metadata(artifacts.parsed_dir), metadata)
    if coverage["missing"] or coverage["duplicates"]:
        logger.warning(f"Batch responses were incomplete. Coverage: {coverage}.")
    logger.info(
        f"Parse completed. Sentiments: {len(sentiments)}. Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return metadata

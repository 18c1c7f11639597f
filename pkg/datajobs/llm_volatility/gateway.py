# native Python packages
import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from datetime import datetime, timezone
from typing import Callable, Dict, Iterable, List, Optional, Sequence

# third-party packages
import pandas as pd
from pydantic import BaseModel
from tqdm import tqdm

# custom packages
from datajobs.llm_volatility.artifacts import StageArtifacts, require
from datajobs.llm_volatility.corpus import read_corpus
from datajobs.llm_volatility.prompt import render_jobs
from utils.config import PipelineConfig, RunConfig
from utils.errors import ConfigError, ProviderError
from utils.file_io import iter_jsonl, write_jsonl, write_to_json
from utils.llm.base import GenerationRequest, Provider
from utils.llm.cache import ResponseCache
from utils.llm.http_provider import HttpChatProvider
from utils.llm.rate_limiter import RateLimiter
from utils.llm.replay_provider import ReplayProvider
from utils.llm.retry import call_with_retries
from utils.llm.synthetic_provider import SyntheticProvider, plant_labels
from utils.logger import get_console_logger
from utils.schema import FailureRecord, LlmResponse, PromptJob, sha256_hex


class GridResult(BaseModel):
    """
    Outcome of one grid execution.

    Attributes:
        responses (List[LlmResponse]): one per completed (prompt, temperature, run), sorted by key.
        failures (List[FailureRecord]): tuples that exhausted their retries, sorted by key.
        provider_calls (int): generation calls made during this execution (0 on a warm cache).
        cache_hits (int): tuples served from the cache.
        retries (int): retries spent on tuples that eventually succeeded.
    """

    responses: List[LlmResponse]
    failures: List[FailureRecord]
    provider_calls: int = 0
    cache_hits: int = 0
    retries: int = 0


def response_set_digest(responses: Iterable[LlmResponse]) -> str:
    """Digest of a response set that ignores creation times and ordering."""
    lines = sorted(
        json.dumps(
            [r.provider, r.model, repr(r.temperature), r.run_index, r.prompt_hash, r.raw_text],
            ensure_ascii=False,
        )
        for r in responses
    )
    return sha256_hex("\n".join(lines))


def distinct_prompts(jobs: Sequence[PromptJob]) -> List[PromptJob]:
    """Jobs with identical prompt text share responses; keeps the first job per prompt hash."""
    seen = set()
    unique = []
    for job in jobs:
        if job.prompt_hash not in seen:
            seen.add(job.prompt_hash)
            unique.append(job)
    return unique


def execute_grid(
    jobs: Sequence[PromptJob],
    config: RunConfig,
    provider: Provider,
    cache: ResponseCache,
    rate_limiter: Optional[RateLimiter] = None,
    sleep: Optional[Callable[[float], None]] = None,
) -> GridResult:
    """
    Runs every distinct prompt at every temperature for `config.repetitions` runs.

    Cached responses are reused without calling the provider, and every new response is cached as
    soon as it arrives, so an interrupted run resumes where it stopped. Provider errors are retried
    with exponential backoff; tuples that still fail are returned as failures and the run continues.
    Network providers are rate limited.

    Returns:
        GridResult: responses plus failures; together they cover distinct prompts x temperatures x repetitions.
    """
    logger = get_console_logger(__name__)
    if rate_limiter is None and provider.is_network:
        rate_limiter = RateLimiter(config.rate_limit)

    prompts = distinct_prompts(jobs)
    tasks = [
        (job, temperature, run_index)
        for job in prompts
        for temperature in config.temperatures
        for run_index in range(config.repetitions)
    ]
    calls_before = provider.call_count

    def run_task(job: PromptJob, temperature: float, run_index: int):
        cached = cache.get(provider.name, provider.model, temperature, run_index, job.prompt_hash)
        if cached is not None:
            return "hit", cached, 0

        request = GenerationRequest(
            prompt_text=job.prompt_text,
            prompt_hash=job.prompt_hash,
            temperature=temperature,
            run_index=run_index,
            headline_ids=job.headline_ids,
            style=job.style,
        )

        def attempt() -> str:
            if rate_limiter is not None:
                rate_limiter.acquire()
            return provider.generate(request)

        try:
            raw_text, retries = call_with_retries(
                attempt,
                config.max_retries,
                description=f"Prompt: {job.prompt_hash[:12]}. Temperature: {temperature}. Run: {run_index}.",
                sleep=sleep,
            )
        except ProviderError as e:
            logger.error(
                f"Giving up on a tuple. Prompt: {job.prompt_hash[:12]}. Temperature: {temperature}. "
                f"Run: {run_index}. Reason: {e}"
            )
            failure = FailureRecord(
                prompt_hash=job.prompt_hash,
                temperature=temperature,
                run_index=run_index,
                provider=provider.name,
                model=provider.model,
                attempts=config.max_retries + 1,
                reason=str(e),
            )
            return "failed", failure, 0

        response = LlmResponse(
            prompt_hash=job.prompt_hash,
            temperature=temperature,
            run_index=run_index,
            raw_text=raw_text,
            provider=provider.name,
            model=provider.model,
            created_at=datetime.now(timezone.utc),
        )
        cache.put(response)
        return "ok", response, retries

    responses = []
    failures = []
    cache_hits = 0
    retries = 0
    with ThreadPoolExecutor(max_workers=config.max_in_flight) as executor:
        futures = [executor.submit(run_task, *task) for task in tasks]
        for future in tqdm(as_completed(futures), total=len(futures), desc="query", leave=False):
            status, item, task_retries = future.result()
            if status == "failed":
                failures.append(item)
                continue
            responses.append(item)
            cache_hits += status == "hit"
            retries += task_retries

    responses.sort(key=lambda r: (r.prompt_hash, r.temperature, r.run_index))
    failures.sort(key=lambda f: (f.prompt_hash, f.temperature, f.run_index))
    return GridResult(
        responses=responses,
        failures=failures,
        provider_calls=provider.call_count - calls_before,
        cache_hits=cache_hits,
        retries=retries,
    )


def _read_planted_labels(file_path: str) -> Dict[str, int]:
    frame = pd.read_csv(file_path, dtype={"headline_id": str, "label": int})
    return dict(zip(frame["headline_id"], frame["label"].astype(int)))


def _build_synthetic(config: PipelineConfig, headline_ids: Sequence[str]) -> Provider:
    if config.paths.planted_labels:
        planted = _read_planted_labels(config.paths.planted_labels)
    else:
        planted = plant_labels(headline_ids, config.seed)
    return SyntheticProvider(
        planted,
        noise=config.provider.noise,
        seed=config.seed,
        noise_schedule={t: config.provider.noise_for(t) for t in config.run.temperatures},
        model=config.run.model,
    )


def _build_replay(config: PipelineConfig, headline_ids: Sequence[str]) -> Provider:
    if not config.paths.replay_archive:
        raise ConfigError("The replay provider needs `paths.replay_archive`.")
    return ReplayProvider.from_path(config.paths.replay_archive, model=config.run.model)


def _build_http(config: PipelineConfig, headline_ids: Sequence[str]) -> Provider:
    return HttpChatProvider(
        config.run.model,
        base_url=config.provider.base_url,
        api_key_env=config.provider.api_key_env,
        timeout=config.provider.timeout,
    )


PROVIDER_BUILDERS: Dict[str, Callable[[PipelineConfig, Sequence[str]], Provider]] = {
    "synthetic": _build_synthetic,
    "replay": _build_replay,
    "http": _build_http,
}


def build_provider(config: PipelineConfig, headline_ids: Sequence[str]) -> Provider:
    try:
        builder = PROVIDER_BUILDERS[config.run.provider]
    except KeyError:
        raise ConfigError(
            f"Unknown provider. Provider: {config.run.provider}. Registered: {sorted(PROVIDER_BUILDERS)}."
        ) from None
    return builder(config, headline_ids)


def write_jobs(file_path: str, jobs: Sequence[PromptJob]):
    write_jsonl(file_path, (job.model_dump(mode="json") for job in jobs))


def read_jobs(file_path: str) -> List[PromptJob]:
    return [PromptJob.model_validate_json(line) for _, line in iter_jsonl(file_path)]


def read_responses(file_path: str) -> List[LlmResponse]:
    return [LlmResponse.model_validate_json(line) for _, line in iter_jsonl(file_path)]


def read_failures(file_path: str) -> List[FailureRecord]:
    return [FailureRecord.model_validate_json(line) for _, line in iter_jsonl(file_path)]


def query(config: PipelineConfig, provider: Optional[Provider] = None) -> GridResult:
    """
    Query stage: renders prompts for the ingested corpus and executes the grid.

    Writes `prompts/jobs.jsonl`, `responses/responses.jsonl`, the failure manifest
    `responses/failures.jsonl` and `responses/metadata.json`.
    """
    start_time = time.time()
    logger = get_console_logger(__name__)
    artifacts = StageArtifacts(config.paths.output)

    headlines = read_corpus(require(artifacts.headlines, "query", "ingest"))
    jobs = render_jobs(headlines, config.prompt.style, config.prompt.template, config.prompt.batch_size)
    write_jobs(artifacts.jobs, jobs)

    if provider is None:
        provider = build_provider(config, [h.id for h in headlines])

    logger.info(
        f"Execute grid. Jobs: {len(jobs)}. Temperatures: {config.run.temperatures}. "
        f"Repetitions: {config.run.repetitions}. Provider: {provider.name}. Model: {provider.model}."
    )
    result = execute_grid(jobs, config.run, provider, ResponseCache(config.paths.cache))

    write_jsonl(artifacts.responses, (r.model_dump(mode="json") for r in result.responses))
    write_jsonl(artifacts.failures, (f.model_dump(mode="json") for f in result.failures))
    metadata = {
        "job_count": len(jobs),
        "prompt_count": len(distinct_prompts(jobs)),
        "temperatures": config.run.temperatures,
        "repetitions": config.run.repetitions,
        "response_count": len(result.responses),
        "failure_count": len(result.failures),
        "provider": provider.name,
        "model": provider.model,
        "response_digest": response_set_digest(result.responses),
    }
    write_to_json(artifacts.metadata(artifacts.responses_dir), metadata)
    logger.info(
        f"Query completed. Responses: {len(result.responses)}. Failures: {len(result.failures)}. "
        f"Provider calls: {result.provider_calls}. Cache hits: {result.cache_hits}. "
        f"Elapsed: {round(time.time() - start_time, 2)} sec."
    )
    return result

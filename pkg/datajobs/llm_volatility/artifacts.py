# native Python packages
import os

# custom packages
from utils.errors import MissingArtifactError


class StageArtifacts:
    """
    File layout of every stage's outputs under one output directory.

    Each stage writes into its own sub-directory and reads only its predecessors' files.
    """

    def __init__(self, output_dir: str):
        self.output_dir = output_dir

    def _path(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    # ingest
    @property
    def corpus_dir(self) -> str:
        return self._path("corpus")

    @property
    def headlines(self) -> str:
        return self._path("corpus", "headlines.jsonl")

    @property
    def calendar(self) -> str:
        return self._path("corpus", "calendar.csv")

    @property
    def prices(self) -> str:
        return self._path("corpus", "prices.csv")

    # query
    @property
    def jobs(self) -> str:
        return self._path("prompts", "jobs.jsonl")

    @property
    def responses_dir(self) -> str:
        return self._path("responses")

    @property
    def responses(self) -> str:
        return self._path("responses", "responses.jsonl")

    @property
    def failures(self) -> str:
        return self._path("responses", "failures.jsonl")

    # parse
    @property
    def parsed_dir(self) -> str:
        return self._path("parsed")

    @property
    def feed_sentiment(self) -> str:
        return self._path("parsed", "feed_sentiment.csv")

    @property
    def fragments(self) -> str:
        return self._path("parsed", "fragments.jsonl")

    # metrics
    @property
    def metrics_dir(self) -> str:
        return self._path("metrics")

    @property
    def ticker_day_scores(self) -> str:
        return self._path("metrics", "ticker_day_scores.csv")

    @property
    def volatility_report(self) -> str:
        return self._path("metrics", "volatility.csv")

    # backtest
    @property
    def backtest_dir(self) -> str:
        return self._path("backtest")

    @property
    def backtest_summary(self) -> str:
        return self._path("backtest", "summary.csv")

    @property
    def backtest_stats(self) -> str:
        return self._path("backtest", "stats.csv")

    # report
    @property
    def report_dir(self) -> str:
        return self._path("report")

    def metadata(self, stage_dir: str) -> str:
        return os.path.join(stage_dir, "metadata.json")


def require(path: str, stage: str, required: str) -> str:
    """Raises MissingArtifactError naming `required` when `path` does not exist."""
    if not os.path.exists(path):
        raise MissingArtifactError(stage, required, path)
    return path

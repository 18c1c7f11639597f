import json
import os
from typing import Dict, Iterable, Tuple

from utils.errors import ReplayMissError
from utils.file_io import iter_jsonl
from utils.llm.base import GenerationRequest, Provider
from utils.llm.cache import ResponseCache
from utils.schema import LlmResponse

ReplayKey = Tuple[str, float, int]


class ReplayProvider(Provider):
    """Serves archived responses byte-exactly by (prompt_hash, temperature, run_index)."""

    name = "replay"

    def __init__(self, archive: Dict[ReplayKey, str], model: str = "replay"):
        super().__init__(model)
        self.archive = dict(archive)

    def __len__(self):
        return len(self.archive)

    def _generate(self, request: GenerationRequest) -> str:
        try:
            return self.archive[request.key]
        except KeyError:
            raise ReplayMissError(request.key) from None

    @classmethod
    def from_responses(cls, responses: Iterable[LlmResponse], model: str = "replay") -> "ReplayProvider":
        return cls({r.key: r.raw_text for r in responses}, model=model)

    @classmethod
    def from_path(cls, path: str, model: str = "replay") -> "ReplayProvider":
        """
        Loads an archive from a JSONL file of responses or from a response cache directory.

        Each JSONL record needs `prompt_hash`, `temperature`, `run_index` and `raw_text`.
        """
        if os.path.isdir(path):
            return cls.from_responses(ResponseCache(path), model=model)

        archive = {}
        for _, line in iter_jsonl(path):
            record = json.loads(line)
            key = (record["prompt_hash"], float(record["temperature"]), int(record["run_index"]))
            archive[key] = record["raw_text"]
        return cls(archive, model=model)

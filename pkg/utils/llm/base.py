import threading
from abc import ABC, abstractmethod
from typing import Tuple

from pydantic import BaseModel, ConfigDict

from utils.schema import PromptStyle


class GenerationRequest(BaseModel):
    """
    One generation call: a rendered prompt at a temperature for one repetition.

    `headline_ids` and `style` travel with the prompt so offline providers can answer per headline.
    """

    model_config = ConfigDict(frozen=True)

    prompt_text: str
    prompt_hash: str
    temperature: float
    run_index: int
    headline_ids: Tuple[str, ...]
    style: PromptStyle

    @property
    def key(self) -> Tuple[str, float, int]:
        return self.prompt_hash, self.temperature, self.run_index


class Provider(ABC):
    """
    A text generation backend.

    Attributes:
        name (str): provider name recorded with every response.
        model (str): model name recorded with every response.
        is_network (bool): whether calls leave the process and count against the rate limit.
        call_count (int): number of `generate` calls made so far.
    """

    name = "base"
    is_network = False

    def __init__(self, model: str):
        self.model = model
        self.call_count = 0
        self._count_lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> str:
        with self._count_lock:
            self.call_count += 1
        return self._generate(request)

    @abstractmethod
    def _generate(self, request: GenerationRequest) -> str:
        raise NotImplementedError

import hashlib
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from utils.errors import PlantedLabelError
from utils.llm.base import GenerationRequest, Provider
from utils.schema import PromptStyle

CANONICAL_PHRASES = {
    1: "POSITIVE (0.90)",
    0: "NEUTRAL (0.90)",
    -1: "NEGATIVE (0.90)",
}

# (text, label the rule-based parser assigns to it)
VARIANT_BANK: List[Tuple[str, int]] = [
    ("Positive", 1),
    ("positive (0.6)", 1),
    ("The sentiment is not negative (0.7).", 1),
    ("NEUTRAL (0.5)", 0),
    ("neutral", 0),
    ("I cannot determine the sentiment.", 0),
    ("Mixed: both positive and negative signals.", 0),
    ("negative (0.65)", -1),
    ("NEGATIVE", -1),
    ("This is not positive news (0.8).", -1),
]

PLANTED_LABEL_PROBABILITIES = {1: 0.45, 0: 0.30, -1: 0.25}


def derive_seed(*parts) -> int:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def variant_label_distribution() -> Dict[int, float]:
    """Label distribution of a uniform draw from the variant bank."""
    counts = {1: 0, 0: 0, -1: 0}
    for _, label in VARIANT_BANK:
        counts[label] += 1
    return {label: count / len(VARIANT_BANK) for label, count in counts.items()}


def plant_labels(headline_ids: Iterable[str], seed: int) -> Dict[str, int]:
    """Deterministically assigns a label to every headline id, skewed towards positive."""
    labels = list(PLANTED_LABEL_PROBABILITIES)
    probabilities = list(PLANTED_LABEL_PROBABILITIES.values())
    planted = {}
    for headline_id in headline_ids:
        rng = np.random.default_rng(derive_seed("plant", seed, headline_id))
        planted[headline_id] = int(rng.choice(labels, p=probabilities))
    return planted


class SyntheticProvider(Provider):
    """
    Offline provider emulating the temperature-volatility effect.

    For every headline in a request it emits the canonical phrasing of the planted label with
    probability 1 - noise, and otherwise a uniform draw from `VARIANT_BANK`. Output is a pure function
    of (seed, prompt_hash, temperature, run_index, headline_id).

    Args:
        planted (Mapping[str, int]): headline id to label in {-1, 0, +1}.
        noise (float): default noise in [0, 1].
        seed (int): experiment seed.
        noise_schedule (Optional[Mapping[float, float]]): per-temperature noise overriding `noise`.
        model (str): model name recorded with responses.
    """

    name = "synthetic"

    def __init__(
        self,
        planted: Mapping[str, int],
        noise: float,
        seed: int,
        noise_schedule: Optional[Mapping[float, float]] = None,
        model: str = "synthetic-v1",
    ):
        super().__init__(model)
        if noise_schedule is None:
            noise_schedule = {}

        for value in [noise, *noise_schedule.values()]:
            if not 0 <= value <= 1:
                raise ValueError(f"noise must be within [0, 1], got {value}")

        self.planted = dict(planted)
        self.noise = noise
        self.seed = seed
        self.noise_schedule = {float(t): v for t, v in noise_schedule.items()}

    def noise_for(self, temperature: float) -> float:
        return self.noise_schedule.get(float(temperature), self.noise)

    def phrase_for(self, request: GenerationRequest, headline_id: str) -> str:
        if headline_id not in self.planted:
            raise PlantedLabelError(f"No planted label for headline. Headline: {headline_id}.")

        rng = np.random.default_rng(
            derive_seed(self.seed, request.prompt_hash, repr(request.temperature), request.run_index, headline_id)
        )
        if rng.random() < self.noise_for(request.temperature):
            text, _ = VARIANT_BANK[int(rng.integers(len(VARIANT_BANK)))]
            return text
        return CANONICAL_PHRASES[self.planted[headline_id]]

    def _generate(self, request: GenerationRequest) -> str:
        if request.style == PromptStyle.SINGLE:
            return self.phrase_for(request, request.headline_ids[0])

        return "\n".join(
            f"{index}. {self.phrase_for(request, headline_id)}"
            for index, headline_id in enumerate(request.headline_ids, start=1)
        )

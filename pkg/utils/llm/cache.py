import json
import os
import tempfile
from typing import Iterator, Optional

from utils.file_io import ensure_dir
from utils.schema import LlmResponse


def format_temperature(temperature: float) -> str:
    return repr(float(temperature))


class ResponseCache:
    """
    One JSON file per response under `<root>/<provider>/<model>/<temperature>/<run>/<prompt_hash>.json`.

    Writes go to a temporary file in the target directory and are moved into place with `os.replace`,
    so concurrent inserts of the same key never leave a partial file behind.
    """

    def __init__(self, root: str):
        self.root = root

    def path_for(self, provider: str, model: str, temperature: float, run_index: int, prompt_hash: str) -> str:
        return os.path.join(
            self.root,
            provider,
            model.replace("/", "_"),
            format_temperature(temperature),
            str(run_index),
            f"{prompt_hash}.json",
        )

    def get(
        self, provider: str, model: str, temperature: float, run_index: int, prompt_hash: str
    ) -> Optional[LlmResponse]:
        path = self.path_for(provider, model, temperature, run_index, prompt_hash)
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as file:
            return LlmResponse.model_validate_json(file.read())

    def put(self, response: LlmResponse) -> str:
        path = self.path_for(
            response.provider, response.model, response.temperature, response.run_index, response.prompt_hash
        )
        dir_path = ensure_dir(os.path.dirname(path))
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", dir=dir_path, suffix=".tmp", delete=False
        ) as file:
            json.dump(response.model_dump(mode="json"), file, indent=4, sort_keys=True, ensure_ascii=False)
            tmp_path = file.name
        os.replace(tmp_path, path)
        return path

    def __iter__(self) -> Iterator[LlmResponse]:
        if not os.path.isdir(self.root):
            return
        for root, _, files in sorted(os.walk(self.root)):
            for file_name in sorted(files):
                if file_name.endswith(".json"):
                    with open(os.path.join(root, file_name), "r", encoding="utf-8") as file:
                        yield LlmResponse.model_validate_json(file.read())

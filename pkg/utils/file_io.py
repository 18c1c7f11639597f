import json
import os
from typing import Iterable, Iterator, List, Tuple

import pandas as pd


def ensure_dir(dir_path: str) -> str:
    if dir_path and not os.path.exists(dir_path):
        os.makedirs(dir_path, exist_ok=True)
    return dir_path


def read_json(file_path: str) -> dict:
    with open(file_path, "r", encoding="utf-8") as file:
        return json.load(file)


def write_to_json(file_path: str, data: dict):
    ensure_dir(os.path.dirname(file_path))
    with open(file_path, "w", encoding="utf-8") as file:
        json.dump(data, file, indent=4, sort_keys=True, ensure_ascii=False)
        file.write("\n")


def iter_jsonl(file_path: str) -> Iterator[Tuple[int, str]]:
    """
    Yields (line_number, line) for every non-blank line of a JSONL file.

    Decoding is left to the caller so it can report the line number of a bad record.
    """
    with open(file_path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if line.strip():
                yield line_number, line


def read_jsonl(file_path: str) -> List[dict]:
    return [json.loads(line) for _, line in iter_jsonl(file_path)]


def write_jsonl(file_path: str, records: Iterable[dict]):
    ensure_dir(os.path.dirname(file_path))
    with open(file_path, "w", encoding="utf-8") as file:
        for record in records:
            file.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
            file.write("\n")


def write_csv(file_path: str, frame: pd.DataFrame):
    ensure_dir(os.path.dirname(file_path))
    frame.to_csv(file_path, index=False, lineterminator="\n")

# Native Python packages
import re
from typing import Dict, List, NamedTuple, Optional, Sequence

# Custom packages
from utils.logger import get_console_logger

POSITIVE = 1
NEUTRAL = 0
NEGATIVE = -1

_TOKEN = re.compile(r"[a-z]+")
_NUMBER = re.compile(r"[0-9]+(?:\.[0-9]+)?|\.[0-9]+")
_INDEX_LINE = re.compile(r"^\s*([0-9]+)\s*[.):](?![0-9])\s*(.*)$")


class ParsedLabel(NamedTuple):
    label: int
    confidence: Optional[float]


class Mention(NamedTuple):
    kind: int
    negated: bool
    start: int
    end: int


class BatchSplit(NamedTuple):
    """
    Fragments of a batch response keyed by headline id, plus a coverage report.

    Attributes:
        fragments (Dict[str, str]): fragment per expected headline id; empty when its index is missing.
        missing (List[int]): expected indexes with no line.
        duplicates (List[int]): indexes seen more than once (first occurrence kept).
        out_of_range (List[int]): indexes outside 1..len(expected).
    """

    fragments: Dict[str, str]
    missing: List[int]
    duplicates: List[int]
    out_of_range: List[int]


class SentimentParser:
    """
    Rule-based sentiment label extraction from free-form model output.

    Precedence: "not negative" gives +1, then "not positive" gives -1, then a bare "positive" gives +1,
    then a bare "negative" gives -1, and everything else gives 0. A negation counts when one of the
    negation tokens appears within `negation_window` tokens before the sentiment word, with no other
    sentiment word in between ("not at all negative" is negated). A fragment with both bare
    "positive" and bare "negative" is ambiguous and gets 0.
    """

    DEFAULT_NEGATIONS = ["not"]
    DEFAULT_NEGATION_WINDOW = 3

    def __init__(self, negations: Optional[List[str]] = None, negation_window: Optional[int] = None):
        if negations is None:
            negations = self.DEFAULT_NEGATIONS

        if negation_window is None:
            negation_window = self.DEFAULT_NEGATION_WINDOW

        self.negations = frozenset(n.lower() for n in negations)
        self.negation_window = negation_window

    @staticmethod
    def _sentiment_kind(token: str) -> Optional[str]:
        if token.startswith("positiv"):
            return "positive"
        if token.startswith("negativ"):
            return "negative"
        if token == "neutral":
            return "neutral"
        return None

    def _find_mentions(self, text: str) -> List[Mention]:
        """
        Finds sentiment words in lowercased text and marks the negated ones.

        Args:
            text (str): lowercased fragment.

        Returns:
            List[Mention]: mentions in text order. `kind` is +1, -1 or 0 (neutral).
        """
        kinds = {"positive": POSITIVE, "negative": NEGATIVE, "neutral": NEUTRAL}
        tokens = list(_TOKEN.finditer(text))
        mentions = []
        last_sentiment_index = -1

        for index, match in enumerate(tokens):
            kind = self._sentiment_kind(match.group())
            if kind is None:
                continue

            window_start = max(last_sentiment_index + 1, index - self.negation_window)
            negated = any(tokens[i].group() in self.negations for i in range(window_start, index))
            mentions.append(Mention(kinds[kind], negated, match.start(), match.end()))
            last_sentiment_index = index

        return mentions

    @staticmethod
    def _confidence_after(text: str, position: int) -> Optional[float]:
        for match in _NUMBER.finditer(text, position):
            value = float(match.group())
            if 0.0 <= value <= 1.0:
                return value
        return None

    def extract_label(self, fragment: str) -> ParsedLabel:
        """
        Extracts a label in {-1, 0, +1} and an optional confidence from any string.

        The confidence is the first number in [0, 1] after the sentiment word that decided the label
        (or after "neutral" when nothing else matched). Ambiguous fragments have no confidence.
        """
        text = fragment.lower()
        mentions = self._find_mentions(text)

        not_negative = [m for m in mentions if m.kind == NEGATIVE and m.negated]
        not_positive = [m for m in mentions if m.kind == POSITIVE and m.negated]
        bare_positive = [m for m in mentions if m.kind == POSITIVE and not m.negated]
        bare_negative = [m for m in mentions if m.kind == NEGATIVE and not m.negated]
        neutral = [m for m in mentions if m.kind == NEUTRAL]

        if not_negative:
            label, anchor = POSITIVE, not_negative[0]
        elif not_positive:
            label, anchor = NEGATIVE, not_positive[0]
        elif bare_positive and bare_negative:
            return ParsedLabel(NEUTRAL, None)
        elif bare_positive:
            label, anchor = POSITIVE, bare_positive[0]
        elif bare_negative:
            label, anchor = NEGATIVE, bare_negative[0]
        elif neutral:
            label, anchor = NEUTRAL, neutral[0]
        else:
            return ParsedLabel(NEUTRAL, None)

        return ParsedLabel(label, self._confidence_after(text, anchor.end))

    def split_batch(self, raw_text: str, expected: Sequence[str]) -> BatchSplit:
        """
        Splits a batch response into per-headline fragments by the indexes given in the prompt.

        Lines starting with "<n>.", "<n>)" or "<n>:" assign their remainder to the n-th expected id.
        Indexes outside 1..len(expected) are ignored; the first line for an index wins.

        Raises:
            ValueError: if `expected` is empty.
        """
        if not expected:
            raise ValueError("split_batch needs at least one expected headline id")

        logger = get_console_logger(__name__)
        by_index: Dict[int, str] = {}
        duplicates = []
        out_of_range = []

        for line in raw_text.splitlines():
            match = _INDEX_LINE.match(line)
            if not match:
                continue
            index = int(match.group(1))
            if not 1 <= index <= len(expected):
                out_of_range.append(index)
                continue
            if index in by_index:
                duplicates.append(index)
                logger.warning(f"Duplicate batch index. Index: {index}. Keeping the first occurrence.")
                continue
            by_index[index] = match.group(2).strip()

        missing = [i for i in range(1, len(expected) + 1) if i not in by_index]
        fragments = {
            headline_id: by_index.get(position, "")
            for position, headline_id in enumerate(expected, start=1)
        }
        return BatchSplit(fragments, missing, duplicates, out_of_range)


_DEFAULT_PARSER = SentimentParser()


def extract_label(fragment: str) -> ParsedLabel:
    return _DEFAULT_PARSER.extract_label(fragment)


def split_batch(raw_text: str, expected: Sequence[str]) -> BatchSplit:
    return _DEFAULT_PARSER.split_batch(raw_text, expected)

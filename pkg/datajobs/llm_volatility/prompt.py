# native Python packages
import re
from typing import List, Optional, Sequence, Tuple

# custom packages
from utils.errors import TemplateError
from utils.schema import Headline, PromptJob, PromptStyle

SINGLE_PLACEHOLDER = "{HEADLINE}"
BATCH_PLACEHOLDER = "{HEADLINE_i}"
BATCH_FOOTER = "Sentiment for each(label and score only):"
DEFAULT_BATCH_SIZE = 50

# Same text as templates/llama_single.txt and templates/gpt_batch.txt.
DEFAULT_SINGLE_TEMPLATE = (
    "<s>[INST] {{ You are a helpful assistant who only replies according to instructions. "
    "Decide the text's sentiment is positive, neutral, or negative. Indicate your confidence "
    "using a float between 0 and 1. Text: {HEADLINE} (instruction) Please answer in the form "
    "of SENTIMENT_LABEL (CONFIDENCE). }} [/INST]\nAns: "
)
DEFAULT_BATCH_TEMPLATE = (
    "Decide whether each piece of text's sentiment is positive, neutral, or negative. "
    "Indicate your confidence for each piece using a float number between 0 and 1.\n"
    "Text:\n"
    "{HEADLINE_i}\n"
    "Sentiment for each(label and score only):"
)

_NEWLINES = re.compile(r"[ \t]*[\r\n]+[ \t]*")


def load_template(file_path: str) -> str:
    """Reads a template file verbatim, minus one trailing newline."""
    with open(file_path, "r", encoding="utf-8") as file:
        text = file.read()
    if text.endswith("\n"):
        text = text[:-1]
    return text


def flatten_text(text: str) -> str:
    """Replaces every newline run (and the spaces around it) with a single space."""
    return _NEWLINES.sub(" ", text).strip()


def _split_on_placeholder(template: str, placeholder: str) -> Tuple[str, str]:
    count = template.count(placeholder)
    if count != 1:
        raise TemplateError(
            f"Template must contain exactly one {placeholder} placeholder, found {count}."
        )
    prefix, suffix = template.split(placeholder)
    return prefix, suffix


def render_single(headline: Headline, template: str = DEFAULT_SINGLE_TEMPLATE) -> PromptJob:
    """
    Renders one headline into a single-headline prompt.

    The placeholder is replaced once and verbatim; the template bytes around it are unchanged,
    and placeholder-like text inside the headline is left alone.

    Raises:
        TemplateError: if the template does not contain exactly one `{HEADLINE}`.
    """
    prefix, suffix = _split_on_placeholder(template, SINGLE_PLACEHOLDER)
    return PromptJob(
        prompt_text=f"{prefix}{headline.text}{suffix}",
        headline_ids=(headline.id,),
        style=PromptStyle.SINGLE,
    )


def render_batch(
    headlines: Sequence[Headline],
    batch_size: int = DEFAULT_BATCH_SIZE,
    template: str = DEFAULT_BATCH_TEMPLATE,
) -> List[PromptJob]:
    """
    Chunks headlines in order and renders each chunk as a numbered batch prompt.

    Within a chunk, headlines become lines "1. <text>" through "n. <text>" with newlines flattened.
    The final chunk may be short. The batch footer is appended when the template lacks it.

    Args:
        headlines (Sequence[Headline]): headlines in batching order.
        batch_size (int): maximum headlines per prompt.
        template (str): template with exactly one `{HEADLINE_i}` line.

    Returns:
        List[PromptJob]: one job per chunk; empty for an empty headline list.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")

    prefix, suffix = _split_on_placeholder(template, BATCH_PLACEHOLDER)
    if BATCH_FOOTER not in suffix:
        suffix = f"{suffix}\n{BATCH_FOOTER}"

    jobs = []
    for start in range(0, len(headlines), batch_size):
        chunk = headlines[start : start + batch_size]
        block = "\n".join(
            f"{index}. {flatten_text(headline.text)}" for index, headline in enumerate(chunk, start=1)
        )
        jobs.append(
            PromptJob(
                prompt_text=f"{prefix}{block}{suffix}",
                headline_ids=tuple(h.id for h in chunk),
                style=PromptStyle.BATCH,
            )
        )
    return jobs


def order_for_batching(headlines: Sequence[Headline]) -> List[Headline]:
    return sorted(headlines, key=lambda h: (h.effective_date, h.id))


def render_jobs(
    headlines: Sequence[Headline],
    style: PromptStyle,
    template_path: Optional[str] = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> List[PromptJob]:
    """Renders every headline with the configured style, using the shipped default template when none is given."""
    ordered = order_for_batching(headlines)
    if style == PromptStyle.SINGLE:
        template = load_template(template_path) if template_path else DEFAULT_SINGLE_TEMPLATE
        return [render_single(headline, template) for headline in ordered]

    template = load_template(template_path) if template_path else DEFAULT_BATCH_TEMPLATE
    return render_batch(ordered, batch_size, template)

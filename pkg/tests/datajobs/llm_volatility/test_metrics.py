import random
from datetime import date
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from datajobs.llm_volatility.artifacts import StageArtifacts
from datajobs.llm_volatility.corpus import ingest
from datajobs.llm_volatility.gateway import query
from datajobs.llm_volatility.metrics import (
    ENSEMBLE_RUN,
    compute_metrics,
    corpus_volatility_report,
    edit_distance,
    ensemble_ticker_day_scores,
    feed_range,
    feed_semantic_stats,
    lexical_stats,
    lexical_volatility,
    read_ticker_day_scores,
    read_volatility_report,
    ticker_day_scores,
    ticker_semantic_stats,
    write_ticker_day_scores,
)
from datajobs.llm_volatility.parse import parse
from utils.errors import InsufficientRunsError, JoinError, MissingArtifactError
from utils.schema import FeedSentiment, TickerDayScore


def levenshtein_oracle(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def distance(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            distance(i - 1, j) + 1,
            distance(i, j - 1) + 1,
            distance(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )

    return distance(len(a), len(b))


def lexical_oracle(outputs):
    terms = []
    for a, b in combinations(outputs, 2):
        d = levenshtein_oracle(a, b)
        terms.append(Fraction(d, max(len(a), 1)) + Fraction(d, max(len(b), 1)))
    return sum(terms) / len(terms)


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("", "", 0),
        ("", "abc", 3),
        ("kitten", "sitting", 3),
        ("sturgeon", "urgently", 6),
        ("POSITIVE (0.9)", "Positive", 13),
        ("\U0001F600", "\U0001F601", 1),
    ],
)
def test_edit_distance(a, b, expected):
    assert edit_distance(a, b) == expected == levenshtein_oracle(a, b)


def test_lexical_matches_oracle_on_random_triples():
    rng = random.Random(2024)
    for _ in range(200):
        triple = ["".join(rng.choice("abc") for _ in range(rng.randint(1, 8))) for _ in range(3)]
        assert lexical_volatility(triple) == pytest.approx(float(lexical_oracle(triple)), abs=1e-12)


@given(st.lists(st.text(max_size=12), min_size=2, max_size=4))
def test_lexical_is_symmetric_and_non_negative(outputs):
    value = lexical_volatility(outputs)
    assert value >= 0
    assert value == pytest.approx(lexical_volatility(list(reversed(outputs))), abs=1e-12)


@given(st.text(min_size=1, max_size=20))
def test_self_concatenation(text):
    assert lexical_volatility([text, text + text]) == pytest.approx(1.5, abs=1e-12)


def test_identical_outputs_have_zero_volatility():
    assert lexical_volatility(["POSITIVE (0.9)"] * 3) == 0.0
    assert lexical_volatility(["", ""]) == 0.0


def test_needs_two_outputs():
    with pytest.raises(InsufficientRunsError):
        lexical_volatility(["only one"])
    with pytest.raises(InsufficientRunsError):
        feed_range([1])


def test_feed_range():
    assert feed_range([1, -1, 0]) == 2.0
    assert feed_range([0, 0, 0]) == 0.0


def sentiment(headline_id, label, run_index=0, temperature=0.0, fragment=None):
    return FeedSentiment(
        headline_id=headline_id,
        temperature=temperature,
        run_index=run_index,
        label=label,
        raw_fragment=fragment if fragment is not None else str(label),
    )


class TestTickerDayScores:
    def test_mean_per_ticker_day(self, make_headline):
        day = date(2024, 1, 2)
        a = make_headline("AAPL up", tickers=("AAPL",), effective_date=day)
        b = make_headline("AAPL and MSFT deal", tickers=("AAPL", "MSFT"), effective_date=day)
        c = make_headline("MSFT down", tickers=("MSFT",), effective_date=date(2024, 1, 3))
        feed = [sentiment(a.id, 1), sentiment(b.id, 0), sentiment(c.id, -1)]

        scores = {(s.ticker, s.date): s.score for s in ticker_day_scores(feed, [a, b, c])}
        assert scores == {
            ("AAPL", day): 0.5,
            ("MSFT", day): 0.0,
            ("MSFT", date(2024, 1, 3)): -1.0,
        }

    def test_two_ticker_headlines_count_for_both(self, make_headline):
        rng = random.Random(5)
        headlines = [
            make_headline(f"story {i}", tickers=rng.sample(["A", "B", "C"], rng.randint(1, 2)), effective_date=date(2024, 1, 2))
            for i in range(30)
        ]
        feed = [sentiment(h.id, rng.choice([-1, 0, 1])) for h in headlines]
        scores = ticker_day_scores(feed, headlines)

        label_by_id = {s.headline_id: s.label for s in feed}
        for score in scores:
            tagged = [label_by_id[h.id] for h in headlines if score.ticker in h.tickers]
            assert score.score == pytest.approx(sum(tagged) / len(tagged))

    def test_runs_are_kept_apart(self, make_headline):
        h = make_headline("AAPL up")
        scores = ticker_day_scores([sentiment(h.id, 1, 0), sentiment(h.id, -1, 1)], [h])
        assert [(s.run_index, s.score) for s in scores] == [(0, 1.0), (1, -1.0)]

    def test_unknown_headline(self, make_headline):
        with pytest.raises(JoinError):
            ticker_day_scores([sentiment("missing", 1)], [make_headline("x")])


def test_ensemble_scores():
    day = date(2024, 1, 2)
    scores = [
        TickerDayScore(ticker="A", date=day, temperature=1.0, run_index=k, score=v)
        for k, v in enumerate([1.0, 0.0, -0.5])
    ]
    (ensemble,) = ensemble_ticker_day_scores(scores)
    assert ensemble.run_index == ENSEMBLE_RUN
    assert ensemble.score == pytest.approx(1 / 6)


class TestVolatilityStats:
    def test_feed_level(self):
        feed = [sentiment("h1", label, k, fragment=text) for k, (label, text) in enumerate([(1, "pos"), (1, "pos"), (-1, "neg")])]
        feed.append(sentiment("h2", 0, 0))
        lexical, skipped = lexical_stats(feed)
        semantic, semantic_skipped = feed_semantic_stats(feed)

        assert skipped == semantic_skipped == 1
        assert lexical[0].headline_id == "h1"
        assert lexical[0].mean_pair_distance == pytest.approx(lexical_volatility(["pos", "pos", "neg"]))
        assert semantic[0].range == 2.0

    def test_ticker_level_ignores_ensemble(self):
        day = date(2024, 1, 2)
        scores = [
            TickerDayScore(ticker="A", date=day, temperature=0.0, run_index=k, score=v)
            for k, v in [(0, 0.5), (1, -0.5), (ENSEMBLE_RUN, 0.0)]
        ]
        stats, skipped = ticker_semantic_stats(scores)
        assert skipped == 0
        assert stats[0].key == "A|2024-01-02"
        assert stats[0].range == 1.0

    def test_corpus_report(self):
        feed = []
        for temperature, labels in [(0.0, [1, 1]), (1.0, [1, -1])]:
            feed += [sentiment("h1", label, k, temperature) for k, label in enumerate(labels)]
        lexical, _ = lexical_stats(feed)
        semantic, _ = feed_semantic_stats(feed)
        ticker = [
            TickerDayScore(ticker="A", date=date(2024, 1, 2), temperature=t, run_index=k, score=v)
            for t, values in [(0.0, [1.0, 1.0]), (1.0, [1.0, -1.0])]
            for k, v in enumerate(values)
        ]
        ticker_stats, _ = ticker_semantic_stats(ticker)

        rows = corpus_volatility_report(lexical, semantic + ticker_stats, [0.0, 1.0, 2.0])
        values = {(r.temperature, r.metric, r.level): r.value for r in rows}
        assert len(rows) == 6
        assert values[(0.0, "semantic_range_mean", "feed")] == 0.0
        assert values[(1.0, "semantic_range_mean", "feed")] == 2.0
        assert values[(1.0, "semantic_range_mean", "ticker")] == 2.0
        assert values[(0.0, "lexical_mean", "feed")] == 0.0
        assert values[(1.0, "lexical_mean", "feed")] > 0.0


def test_ticker_day_scores_file_round_trip(tmp_path):
    scores = [
        TickerDayScore(ticker="AAPL", date=date(2024, 1, 2), temperature=0.25, run_index=1, score=1 / 3),
        TickerDayScore(ticker="MSFT", date=date(2024, 1, 3), temperature=0.25, run_index=ENSEMBLE_RUN, score=-0.5),
    ]
    path = str(tmp_path / "scores.csv")
    write_ticker_day_scores(path, scores)
    assert read_ticker_day_scores(path) == scores


def test_metrics_before_parse_names_parse(experiment_config):
    ingest(experiment_config)
    with pytest.raises(MissingArtifactError, match="`parse`"):
        compute_metrics(experiment_config)


def test_metrics_stage(experiment_config):
    ingest(experiment_config)
    query(experiment_config)
    parse(experiment_config)
    metadata = compute_metrics(experiment_config)
    artifacts = StageArtifacts(experiment_config.paths.output)

    rows = read_volatility_report(artifacts.volatility_report)
    values = {(r.temperature, r.metric, r.level): r.value for r in rows}
    assert len(rows) == 6
    assert values[(0.0, "lexical_mean", "feed")] == 0.0
    assert values[(0.0, "semantic_range_mean", "ticker")] == 0.0
    assert values[(1.0, "lexical_mean", "feed")] > 0.0
    assert metadata["skipped_for_insufficient_runs"] == {"lexical": 0, "feed": 0, "ticker": 0}

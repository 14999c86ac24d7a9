"""Entropy computation, uncertain-token selection, clarification rendering."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clarimap.model.decoding import Hypothesis
from clarimap.uncertainty import (
    EmptyHypothesis,
    EmptyToken,
    NotADistribution,
    char_entropy_rows,
    least_certain_token,
    make_clarification,
    propose_alternative,
    render_question,
    step_entropy,
    token_entropies,
)
from clarimap.vocab import EOS

V = 8


def _dist(kind):
    d = np.zeros(V)
    if kind == "sure":
        d[4] = 1.0
    elif kind == "half":
        d[4] = d[5] = 0.5
    elif kind == "uniform":
        d[:] = 1.0 / V
    return d


def fake_hyp(text, uncertain=frozenset()):
    """Char-mode hypothesis: listed positions get ln 2 entropy, the rest 0."""
    rows = [_dist("half" if i in uncertain else "sure") for i in range(len(text))]
    rows.append(_dist("sure"))  # EOS step
    return Hypothesis(
        text=text,
        ids=tuple([4] * len(text)) + (EOS,),
        step_dists=np.array(rows),
        logprob=-1.0,
        attentions=[],
        unit_spans=tuple((i, i + 1) for i in range(len(text))),
    )


WINE = "query(area(keyval('name','paris')),nwr(keyval('shop','wine')),qtype(count))"
WINE_SPAN = (WINE.index("wine"), WINE.index("wine") + 4)


class TestStepEntropy:
    def test_one_hot_is_exactly_zero(self):
        e = step_entropy([0.0, 1.0, 0.0])
        assert e == 0.0
        assert math.copysign(1.0, e) == 1.0  # never -0.0

    def test_uniform_is_log_v(self):
        for v in (2, 3, 10, 100):
            assert abs(step_entropy([1.0 / v] * v) - math.log(v)) < 1e-9

    def test_zero_entries_contribute_nothing(self):
        assert abs(step_entropy([0.5, 0.0, 0.5]) - math.log(2)) < 1e-12

    def test_rejects_empty(self):
        with pytest.raises(NotADistribution):
            step_entropy([])

    def test_rejects_matrix(self):
        with pytest.raises(NotADistribution):
            step_entropy(np.ones((2, 2)) / 4)

    def test_rejects_negative(self):
        with pytest.raises(NotADistribution):
            step_entropy([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(NotADistribution):
            step_entropy([0.5, 0.4])

    def test_tolerates_float_noise(self):
        step_entropy([0.5, 0.5 + 1e-9])

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=16))
    def test_bounded_by_log_v(self, raw):
        p = np.array(raw) / sum(raw)
        e = step_entropy(p)
        assert -1e-12 <= e <= math.log(len(p)) + 1e-9


class TestTokenEntropies:
    def test_one_entry_per_content_token(self):
        uncs = token_entropies(fake_hyp(WINE))
        assert [u.token.text for u in uncs] == [
            "query", "area", "keyval", "name", "paris",
            "nwr", "keyval", "shop", "wine", "qtype", "count",
        ]

    def test_structural_positions_ignored(self):
        text = "query(qtype(count))"
        structural = {i for i, c in enumerate(text) if c in "()"}
        uncs = token_entropies(fake_hyp(text, uncertain=structural))
        assert all(u.mean_entropy == 0.0 for u in uncs)

    def test_mean_over_token_span(self):
        text = "query(qtype(count))"
        start = text.index("count")
        uncs = token_entropies(fake_hyp(text, uncertain={start}))
        count = next(u for u in uncs if u.token.text == "count")
        assert abs(count.mean_entropy - math.log(2) / 5) < 1e-12
        assert count.char_entropies[0] == pytest.approx(math.log(2))
        assert count.char_entropies[1:] == (0.0,) * 4

    def test_empty_text_gives_no_tokens(self):
        assert token_entropies(fake_hyp("")) == []


class TestLeastCertain:
    def test_picks_highest_mean(self):
        hyp = fake_hyp(WINE, uncertain=set(range(*WINE_SPAN)))
        target = least_certain_token(token_entropies(hyp))
        assert target.token.text == "wine"
        assert target.token.span == WINE_SPAN

    def test_tie_breaks_to_earliest_span(self):
        hyp = fake_hyp(WINE)  # every token has entropy 0
        target = least_certain_token(token_entropies(hyp))
        assert target.token.text == "query"

    def test_empty_list_rejected(self):
        with pytest.raises(EmptyHypothesis):
            least_certain_token([])


class TestProposeAlternative:
    def _target(self, hyp, text):
        return next(u for u in token_entropies(hyp) if u.token.text == text)

    def test_aligned_token_differs(self):
        beam1 = fake_hyp(WINE)
        beam2 = fake_hyp(WINE.replace("'wine'", "'beer'"))
        assert propose_alternative(beam1, beam2, self._target(beam1, "wine")) == "beer"

    def test_identical_beams_give_none(self):
        beam1, beam2 = fake_hyp(WINE), fake_hyp(WINE)
        assert propose_alternative(beam1, beam2, self._target(beam1, "wine")) is None

    def test_structural_difference_gives_none(self):
        beam1 = fake_hyp(WINE)
        beam2 = fake_hyp(WINE[:-1])  # drops a paren, same content tokens
        assert propose_alternative(beam1, beam2, self._target(beam1, "wine")) is None

    def test_falls_back_to_first_differing_token(self):
        beam1 = fake_hyp(WINE)
        beam2 = fake_hyp(WINE.replace("'paris'", "'lyon'"))
        # target is 'wine' but the beams disagree on the city instead
        assert propose_alternative(beam1, beam2, self._target(beam1, "wine")) == "lyon"

    def test_never_proposes_the_target_itself(self):
        beam1 = fake_hyp(WINE.replace("'wine'", "'beer'"))
        beam2 = fake_hyp(WINE)
        target = self._target(beam1, "beer")
        assert propose_alternative(beam1, beam2, target) == "wine"


class TestRenderQuestion:
    def test_with_alternative(self):
        assert render_question("wine", "beer") == "Did you mean wine or beer?"

    def test_without_alternative(self):
        assert render_question("wine") == "Did you mean wine?"

    def test_empty_token_rejected(self):
        with pytest.raises(EmptyToken):
            render_question("")


class TestMakeClarification:
    def test_two_beam_pipeline(self):
        beam1 = fake_hyp(WINE, uncertain=set(range(*WINE_SPAN)))
        beam2 = fake_hyp(WINE.replace("'wine'", "'beer'"))
        clar = make_clarification([beam1, beam2])
        assert clar.question == "Did you mean wine or beer?"
        assert clar.token == "wine"
        assert clar.alternative == "beer"
        assert clar.span == WINE_SPAN

    def test_single_beam_has_no_alternative(self):
        beam1 = fake_hyp(WINE, uncertain=set(range(*WINE_SPAN)))
        clar = make_clarification([beam1])
        assert clar.question == "Did you mean wine?"
        assert clar.alternative is None

    def test_no_content_tokens_gives_none(self):
        assert make_clarification([fake_hyp("()")]) is None


class TestCharEntropyRows:
    def test_rows_align_with_text(self):
        text = "query(qtype(count))"
        start = text.index("count")
        rows = char_entropy_rows(fake_hyp(text, uncertain={start}))
        assert len(rows) == len(text)
        assert [r[0] for r in rows] == list(text)
        assert [r[1] for r in rows] == list(range(len(text)))
        assert rows[start][2] == pytest.approx(math.log(2))
        assert rows[0][2] == 0.0

"""Entropy-based uncertainty over decoder outputs and clarification rendering.

Per-step entropies are computed in nats over the recorded output
distributions.  A token's entropy is the arithmetic mean of the entropies
of the characters it spans; structural characters (parentheses, commas,
quotes) never become clarification candidates.  The clarification question
always uses one of two fixed templates:

    Did you mean {token}?
    Did you mean {token} or {alternative}?
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import mrl
from .model.decoding import Hypothesis

__all__ = [
    "NotADistribution",
    "EmptyHypothesis",
    "EmptyToken",
    "TokenUncertainty",
    "Clarification",
    "step_entropy",
    "token_entropies",
    "least_certain_token",
    "propose_alternative",
    "render_question",
    "make_clarification",
    "char_entropy_rows",
]


class NotADistribution(ValueError):
    pass


class EmptyHypothesis(ValueError):
    pass


class EmptyToken(ValueError):
    pass


@dataclass(frozen=True)
class TokenUncertainty:
    token: mrl.MrlToken
    mean_entropy: float
    char_entropies: tuple[float, ...]


@dataclass(frozen=True)
class Clarification:
    question: str
    token: str
    alternative: str | None
    span: tuple[int, int]


def step_entropy(dist: Sequence[float]) -> float:
    """Shannon entropy -sum p ln p in nats, with 0 ln 0 := 0."""
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NotADistribution("expected a non-empty probability vector")
    if (p < 0).any():
        raise NotADistribution("negative probability entries")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise NotADistribution(f"probabilities sum to {total}, not 1")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) + 0.0


def token_entropies(hyp: Hypothesis) -> list[TokenUncertainty]:
    """Mean char entropy for every non-structural token of the hypothesis."""
    if not hyp.text:
        return []
    steps = hyp.char_steps()
    ents = [step_entropy(d) for d in hyp.step_dists]
    out = []
    for tok in mrl.tokenize_mrl(hyp.text):
        if tok.is_structural:
            continue
        ch = tuple(ents[steps[i]] for i in range(tok.start, tok.end))
        out.append(TokenUncertainty(tok, sum(ch) / len(ch), ch))
    return out


def least_certain_token(uncs: list[TokenUncertainty]) -> TokenUncertainty:
    """Highest mean entropy; ties resolve to the earliest span."""
    if not uncs:
        raise EmptyHypothesis("no content tokens to choose from")
    return max(uncs, key=lambda u: (u.mean_entropy, -u.token.start))


def propose_alternative(beam1: Hypothesis, beam2: Hypothesis,
                        target: TokenUncertainty) -> str | None:
    """Mine beam 2 for a replacement of the uncertain token.

    Content tokens of both beams are aligned by index.  If beam 2 has a
    token at the uncertain token's index that differs, that is the
    alternative; otherwise the first differing content token of beam 2
    serves as fallback.  Structural tokens and the uncertain token itself
    are never proposed.
    """
    t1 = [t.text for t in mrl.content_tokens(beam1.text)]
    t2 = [t.text for t in mrl.content_tokens(beam2.text)]
    try:
        idx = next(i for i, t in enumerate(mrl.content_tokens(beam1.text))
                   if t.span == target.token.span)
    except StopIteration:
        idx = None
    if idx is not None and idx < len(t2) and t2[idx] != target.token.text:
        return t2[idx]
    for i, tok in enumerate(t2):
        ref = t1[i] if i < len(t1) else None
        if tok != ref and tok != target.token.text:
            return tok
    return None


def render_question(token: str, alternative: str | None = None) -> str:
    if not token:
        raise EmptyToken("clarification token is empty")
    if alternative:
        return f"Did you mean {token} or {alternative}?"
    return f"Did you mean {token}?"


def make_clarification(beams: list[Hypothesis]) -> Clarification | None:
    """Full clarification for a beam list (best hypothesis first).

    Returns None when the best hypothesis has no content tokens.
    """
    uncs = token_entropies(beams[0])
    if not uncs:
        return None
    target = least_certain_token(uncs)
    alternative = propose_alternative(beams[0], beams[1], target) if len(beams) > 1 else None
    return Clarification(
        question=render_question(target.token.text, alternative),
        token=target.token.text,
        alternative=alternative,
        span=target.token.span,
    )


def char_entropy_rows(hyp: Hypothesis) -> list[tuple[str, int, float]]:
    """(char, position, entropy) rows for plotting."""
    steps = hyp.char_steps()
    ents = [step_entropy(d) for d in hyp.step_dists]
    return [(c, i, ents[steps[i]]) for i, c in enumerate(hyp.text)]

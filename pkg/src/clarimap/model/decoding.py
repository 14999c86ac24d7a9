"""Greedy and beam decoding.

Both decoders record, for every emitted symbol (final EOS included), the
full probability distribution the symbol was drawn from and the attention
weights over every source.  Beam scores are pure sums of log probabilities
with no length normalization; ties break toward the earlier beam and the
lower symbol id, which makes ``beam_search(k=1)`` reproduce greedy decoding
symbol for symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..vocab import BOS, EOS
from .network import Batch, Seq2SeqModel, decode_step, init_decode, make_batch

__all__ = ["Hypothesis", "decode_greedy", "decode_greedy_batch", "beam_search"]

_FALLBACK_MAX_LEN = 256


@dataclass(frozen=True)
class Hypothesis:
    """One decoded sequence with its per-step evidence.

    ``ids`` are the emitted symbol ids, including the final EOS when the
    hypothesis finished; ``text`` excludes reserved symbols.  ``step_dists``
    has one row per emitted id.  ``unit_spans`` maps each text-producing
    step to its character span in ``text``.
    """

    text: str
    ids: tuple[int, ...]
    step_dists: np.ndarray
    logprob: float
    attentions: list[np.ndarray]
    unit_spans: tuple[tuple[int, int], ...]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.text)

    def char_steps(self) -> np.ndarray:
        """Index of the decode step that produced each character of text."""
        out = np.empty(len(self.text), dtype=np.int64)
        for step, (start, end) in enumerate(self.unit_spans):
            out[start:end] = step
        return out


def _assemble(model: Seq2SeqModel, ids: list[int], dists: list[np.ndarray],
              atts: list[list[np.ndarray]], score: float, truncated: bool) -> Hypothesis:
    vocab = model.target_vocab
    parts = []
    spans = []
    pos = 0
    for i in ids:
        if i == EOS:
            continue
        sym = vocab.symbols[i]
        parts.append(sym)
        spans.append((pos, pos + len(sym)))
        pos += len(sym)
    n_enc = model.config.n_encoders
    attentions = [np.array([row[e] for row in atts]) if atts else np.zeros((0, 0))
                  for e in range(n_enc)]
    return Hypothesis(
        text="".join(parts),
        ids=tuple(ids),
        step_dists=np.array(dists) if dists else np.zeros((0, len(vocab))),
        logprob=float(score),
        attentions=attentions,
        unit_spans=tuple(spans),
        truncated=truncated,
    )


def _max_len(model: Seq2SeqModel) -> int:
    return model.config.max_decode_len or _FALLBACK_MAX_LEN


def decode_greedy_batch(model: Seq2SeqModel, sources_list: list[tuple[str, ...]]) -> list[Hypothesis]:
    batch = make_batch(model, [(s,) for s in sources_list])
    state = init_decode(model, batch)
    bsz = batch.size
    y = np.full(bsz, BOS, dtype=np.int64)
    alive = np.ones(bsz, dtype=bool)
    ids: list[list[int]] = [[] for _ in range(bsz)]
    dists: list[list[np.ndarray]] = [[] for _ in range(bsz)]
    atts: list[list[list[np.ndarray]]] = [[] for _ in range(bsz)]
    scores = np.zeros(bsz)
    for _ in range(_max_len(model)):
        logprobs, state, alphas = decode_step(model, state, y)
        choice = np.argmax(logprobs, axis=1)
        for b in range(bsz):
            if not alive[b]:
                continue
            ids[b].append(int(choice[b]))
            dists[b].append(np.exp(logprobs[b]))
            atts[b].append([alphas[e][b] for e in range(len(alphas))])
            scores[b] += logprobs[b, choice[b]]
            if choice[b] == EOS:
                alive[b] = False
        y = np.where(alive, choice, np.int64(EOS))
        if not alive.any():
            break
    return [
        _assemble(model, ids[b], dists[b], atts[b], scores[b], truncated=bool(alive[b]))
        for b in range(bsz)
    ]


def decode_greedy(model: Seq2SeqModel, sources: tuple[str, ...]) -> Hypothesis:
    return decode_greedy_batch(model, [sources])[0]


class _Beam:
    __slots__ = ("ids", "score", "dists", "atts")

    def __init__(self, ids, score, dists, atts):
        self.ids = ids
        self.score = score
        self.dists = dists
        self.atts = atts


def beam_search(model: Seq2SeqModel, sources: tuple[str, ...], k: int) -> list[Hypothesis]:
    """Top-k decoding; returns up to k hypotheses sorted by score, best first."""
    if k < 1:
        raise ValueError("beam size must be >= 1")
    batch = make_batch(model, [(sources,)])
    base_state = init_decode(model, batch)

    live = [_Beam((), 0.0, [], [])]
    state = base_state
    finished: list[Hypothesis] = []
    vt = len(model.target_vocab)
    for _ in range(_max_len(model)):
        y = np.array([b.ids[-1] if b.ids else BOS for b in live], dtype=np.int64)
        logprobs, new_state, alphas = decode_step(model, state, y)
        cand = np.array([b.score for b in live])[:, None] + logprobs
        # Stable sort on the flattened candidates: ties resolve to the lower
        # (beam, symbol) pair, matching greedy's argmax.
        order = np.argsort(-cand.ravel(), kind="stable")[: k - len(finished)]
        next_live: list[_Beam] = []
        next_rows: list[int] = []
        for flat in order:
            parent, sym = divmod(int(flat), vt)
            beam = _Beam(
                live[parent].ids + (sym,),
                float(cand[parent, sym]),
                live[parent].dists + [np.exp(logprobs[parent])],
                live[parent].atts + [[alphas[e][parent] for e in range(len(alphas))]],
            )
            if sym == EOS:
                finished.append(_assemble(model, list(beam.ids), beam.dists, beam.atts,
                                          beam.score, truncated=False))
            else:
                next_live.append(beam)
                next_rows.append(parent)
        if len(finished) >= k or not next_live:
            break
        live = next_live
        state = new_state.select(np.array(next_rows, dtype=np.int64))
    else:
        # length bound hit: fill the remaining slots with truncated beams
        for beam in live[: k - len(finished)]:
            finished.append(_assemble(model, list(beam.ids), beam.dists, beam.atts,
                                      beam.score, truncated=True))
    finished.sort(key=lambda h: -h.logprob)
    return finished[:k]

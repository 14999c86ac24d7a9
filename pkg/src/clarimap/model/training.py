"""Supervised training and marking-weighted fine-tuning.

Plain SGD with global gradient-norm clipping.  Everything is deterministic
given (seed, config, corpus order): parameter init, batch shuffling and
dropout all draw from generators seeded off ``config.seed``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..vocab import Vocab, build_vocab, source_units, target_units
from .config import ModelConfig
from .decoding import decode_greedy_batch
from .network import (
    EmptyCorpus,
    LengthMismatch,
    NonFiniteLoss,
    Seq2SeqModel,
    loss_and_grads,
    make_batch,
)

__all__ = [
    "CharReward",
    "TraceRow",
    "build_vocabs",
    "exact_match",
    "train_supervised",
    "train_weighted",
    "write_trace_csv",
]

_ALLOWED_DELTAS = (0.5, -0.5, 0.0)


@dataclass(frozen=True)
class CharReward:
    """Per-character feedback weights, each +0.5 (right), -0.5 (wrong) or 0."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        for v in self.values:
            if v not in _ALLOWED_DELTAS:
                raise ValueError(f"reward {v} not in {{+0.5, -0.5, 0}}")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    split: str
    loss: float
    exact_match: float | None


def write_trace_csv(path: str | Path, rows: list[TraceRow]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "loss", "exact_match"])
        for row in rows:
            em = "" if row.exact_match is None else f"{row.exact_match:.6f}"
            writer.writerow([row.epoch, row.split, f"{row.loss:.6f}", em])


def build_vocabs(corpus: list[tuple], config: ModelConfig) -> tuple[list[Vocab], Vocab]:
    """One vocabulary per source position plus the target vocabulary."""
    per_source: list[list[list[str]]] = [[] for _ in range(config.n_encoders)]
    targets: list[list[str]] = []
    for sources, target in corpus:
        for i in range(config.n_encoders):
            per_source[i].append(source_units(sources[i], config.unit))
        targets.append(target_units(target, config.unit))
    sep = "" if config.unit == "char" else " "
    source_vocabs = [build_vocab(units, sep=sep) for units in per_source]
    # Token-mode target symbols concatenate back without separators because
    # the canonical MRL form has no whitespace outside quoted spans.
    target_vocab = build_vocab(targets, sep="")
    return source_vocabs, target_vocab


def exact_match(model: Seq2SeqModel, corpus: list[tuple]) -> float:
    """Fraction of examples whose greedy decode equals the target string."""
    if not corpus:
        return 0.0
    hyps = decode_greedy_batch(model, [tuple(sources) for sources, _ in corpus])
    hits = sum(1 for hyp, (_, target) in zip(hyps, corpus) if hyp.text == target)
    return hits / len(corpus)


def _clip_grads(grads: dict[str, np.ndarray], clip_norm: float) -> None:
    if clip_norm <= 0:
        return
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > clip_norm:
        scale = clip_norm / total
        for g in grads.values():
            g *= scale

def _sgd_epoch(model: Seq2SeqModel, items: list[tuple], lr: float, batch_size: int,
               rng: np.random.Generator, dropout_rng: np.random.Generator | None) -> float:
    order = rng.permutation(len(items))
    total = 0.0
    for start in range(0, len(items), batch_size):
        chunk = [items[i] for i in order[start : start + batch_size]]
        loss, grads = loss_and_grads(model, make_batch(model, chunk), dropout_rng)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss diverged to {loss}")
        _clip_grads(grads, model.config.clip_norm)
        for name, g in grads.items():
            model.params[name] -= lr * g
        total += loss * len(chunk)
    return total / len(items)


def train_supervised(corpus: list[tuple[tuple[str, ...], str]], config: ModelConfig,
                     dev: list[tuple] | None = None,
                     trace_path: str | Path | None = None) -> Seq2SeqModel:
    """Train a fresh model on (sources, target) pairs; returns it with a
    ``trace`` attribute holding per-epoch loss/exact-match rows."""
    if not corpus:
        raise EmptyCorpus("training corpus is empty")
    source_vocabs, target_vocab = build_vocabs(corpus, config)
    if config.max_decode_len is None:
        longest = max(len(target_units(t, config.unit)) for _, t in corpus)
        config.max_decode_len = int(1.5 * (longest + 1))
    model = Seq2SeqModel.build(config, source_vocabs, target_vocab)

    rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng(config.seed + 1) if config.dropout > 0 else None
    trace: list[TraceRow] = []
    for epoch in range(1, config.epochs + 1):
        train_loss = _sgd_epoch(model, corpus, config.learning_rate, config.batch_size,
                                rng, dropout_rng)
        em = None
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            em = exact_match(model, corpus)
        trace.append(TraceRow(epoch, "train", train_loss, em))
        if dev:
            dev_loss = float(np.mean([
                loss_and_grads(model, make_batch(model, [item]))[0] for item in dev
            ]))
            trace.append(TraceRow(epoch, "dev", dev_loss, exact_match(model, dev)))
        if em is not None and config.stop_at_train_em is not None and em >= config.stop_at_train_em:
            break
    model.trace = trace
    if trace_path is not None:
        write_trace_csv(trace_path, trace)
    return model


def train_weighted(model: Seq2SeqModel, data: list[tuple],
                   learning_rate: float | None = None, epochs: int = 1,
                   batch_size: int | None = None, seed: int = 0) -> Seq2SeqModel:
    """Fine-tune on (sources, hypothesis, CharReward) triples in place.

    Gradient steps follow the reward-weighted log-likelihood of the model's
    own hypotheses; symbols with zero reward contribute nothing.
    """
    if not data:
        raise EmptyCorpus("no feedback data")
    items = []
    for sources, hyp, reward in data:
        text = getattr(hyp, "text", hyp)
        values = reward.values if isinstance(reward, CharReward) else tuple(reward)
        if len(values) != len(text):
            raise LengthMismatch(f"reward length {len(values)} != hypothesis length {len(text)}")
        items.append((tuple(sources), text, list(values)))
    lr = model.config.learning_rate if learning_rate is None else learning_rate
    bsz = batch_size or model.config.batch_size
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(len(items))
        for start in range(0, len(items), bsz):
            chunk = [items[i] for i in order[start : start + bsz]]
            loss, grads = loss_and_grads(model, make_batch(model, chunk))
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged to {loss}")
            _clip_grads(grads, model.config.clip_norm)
            for name, g in grads.items():
                model.params[name] -= lr * g
    return model

"""Offline fine-tuning on marking feedback.

Feedback records are joined to their stored annotation tasks, marks are
spread onto characters, and the model takes reward-weighted gradient
steps on its own hypotheses.  Additional encoders consume the stored
hypothesis, the clarification joined with the logged answer, and the
bare answer, in that order, up to the model's arity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..dialogue import DIALOGUE_SEP, AnnotationTask, MarkingFeedback, distribute_rewards
from ..metrics import EvalReport, f1_report
from ..model.decoding import decode_greedy_batch
from ..model.network import Seq2SeqModel
from ..model.training import train_weighted

__all__ = [
    "EmptyFeedback",
    "JoinFailure",
    "FinetuneReport",
    "eval_model",
    "feedback_sources",
    "finetune_on_feedback",
]


class EmptyFeedback(ValueError):
    pass


class JoinFailure(KeyError):
    pass


@dataclass(frozen=True)
class FinetuneReport:
    before: EvalReport | None
    after: EvalReport | None
    examples: int


def eval_model(model: Seq2SeqModel, rows: Sequence[tuple[tuple[str, ...], str]]) -> EvalReport:
    """Greedy-decode the rows and score them against their targets."""
    hyps = decode_greedy_batch(model, [tuple(sources) for sources, _ in rows])
    return f1_report([h.text for h in hyps], [target for _, target in rows])


def feedback_sources(task: AnnotationTask, fb: MarkingFeedback, n_encoders: int) -> tuple[str, ...]:
    """Encoder inputs for one feedback record, truncated to the model arity."""
    if task.clarification is not None:
        dialogue = f"{task.clarification.question}{DIALOGUE_SEP}{fb.answer}"
    else:
        dialogue = fb.answer
    return (task.question, task.hypothesis, dialogue, fb.answer)[:n_encoders]


def finetune_on_feedback(model: Seq2SeqModel, feedback: Sequence[MarkingFeedback],
                         tasks: Sequence[AnnotationTask],
                         heldout: Sequence[tuple[tuple[str, ...], str]] = (),
                         learning_rate: float = 0.1, epochs: int = 10,
                         batch_size: int | None = None, seed: int = 0) -> FinetuneReport:
    """Fine-tune the model in place; returns before/after held-out reports."""
    if not feedback:
        raise EmptyFeedback("no feedback records to train on")
    by_id = {t.id: t for t in tasks}
    data = []
    for fb in feedback:
        task = by_id.get(fb.hypothesis_id)
        if task is None:
            raise JoinFailure(f"feedback references unknown hypothesis {fb.hypothesis_id!r}")
        sources = feedback_sources(task, fb, model.config.n_encoders)
        data.append((sources, task.hypothesis, distribute_rewards(task.hypothesis, fb)))
    before = eval_model(model, heldout) if heldout else None
    train_weighted(model, data, learning_rate=learning_rate, epochs=epochs,
                   batch_size=batch_size, seed=seed)
    after = eval_model(model, heldout) if heldout else None
    return FinetuneReport(before=before, after=after, examples=len(data))

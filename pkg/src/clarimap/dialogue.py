"""Synthetic dialogues, marking feedback, and annotation-task filtering.

A dialogue record carries up to four encoder inputs for one example: the
question, the model's best hypothesis, the clarification question joined
with its answer, and the bare answer.  Answers are synthesized from the
gold parse: affirm the uncertain token if the gold contains it, correct to
the alternative if the gold contains that instead, otherwise skip the
example (there is nothing to train on).

Marking feedback maps per-token correct/incorrect judgements onto
per-character rewards of +0.5 / -0.5, leaving unmarked and structural
characters at 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import mrl
from .corpus import Example, SplitSet
from .model.decoding import Hypothesis, beam_search, decode_greedy_batch
from .model.network import Seq2SeqModel
from .model.training import CharReward
from .uncertainty import Clarification, make_clarification, token_entropies

__all__ = [
    "DIALOGUE_SEP",
    "SpanOutOfRange",
    "OverlappingSpans",
    "DialogueRecord",
    "Mark",
    "MarkingFeedback",
    "AnnotationTask",
    "synth_answer",
    "build_dialogue_corpus",
    "write_dialogue_jsonl",
    "load_dialogue_jsonl",
    "write_feedback_jsonl",
    "load_feedback_jsonl",
    "distribute_rewards",
    "filter_annotation_tasks",
    "default_entropy_threshold",
]

DIALOGUE_SEP = " | "


class SpanOutOfRange(ValueError):
    pass


class OverlappingSpans(ValueError):
    pass


@dataclass(frozen=True)
class DialogueRecord:
    id: str
    question: str
    hypothesis: str
    dialogue: str
    logged_answer: str | None
    target: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "hypothesis": self.hypothesis,
            "dialogue": self.dialogue,
            "logged_answer": self.logged_answer,
            "target": self.target,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DialogueRecord":
        return cls(
            id=str(obj["id"]),
            question=obj["question"],
            hypothesis=obj["hypothesis"],
            dialogue=obj["dialogue"],
            logged_answer=obj.get("logged_answer"),
            target=obj["target"],
        )


@dataclass(frozen=True)
class Mark:
    start: int
    end: int
    mark: str

    def __post_init__(self):
        if self.mark not in ("correct", "incorrect"):
            raise ValueError(f"mark must be correct|incorrect, got {self.mark!r}")
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span ({self.start}, {self.end})")


@dataclass(frozen=True)
class MarkingFeedback:
    hypothesis_id: str
    marks: tuple[Mark, ...]
    answer: str
    ts: str

    def to_json(self) -> dict:
        return {
            "hypothesis_id": self.hypothesis_id,
            "marks": [{"start": m.start, "end": m.end, "mark": m.mark} for m in self.marks],
            "answer": self.answer,
            "ts": self.ts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MarkingFeedback":
        return cls(
            hypothesis_id=str(obj["hypothesis_id"]),
            marks=tuple(Mark(m["start"], m["end"], m["mark"]) for m in obj["marks"]),
            answer=obj.get("answer", ""),
            ts=str(obj.get("ts", "")),
        )


@dataclass(frozen=True)
class AnnotationTask:
    """One unit of annotator work: a hypothesis plus its clarification."""

    id: str
    question: str
    hypothesis: str
    keyvals: tuple[dict, ...]
    clarification: Clarification | None
    max_token_entropy: float
    mistake: bool


def synth_answer(gold: mrl.MrlAst, token: str, alternative: str | None) -> str | None:
    """Answer the clarification from the gold parse, or None to skip.

    Containment is tested on whole content tokens of the linearized gold,
    so 'wine' does not match inside 'winery'.
    """
    gold_tokens = {t.text for t in mrl.content_tokens(mrl.linearize(gold))}
    if token in gold_tokens:
        return f"yes, {token}"
    if alternative and alternative in gold_tokens:
        return f"no, I meant {alternative}"
    return None


def _record_for(model: Seq2SeqModel, ex: Example) -> DialogueRecord | None:
    beams = beam_search(model, (ex.question,), 2)
    hyp = beams[0]
    try:
        mrl.parse_mrl(hyp.text)
    except mrl.MrlError:
        return None
    clar = make_clarification(beams)
    if clar is None:
        return None
    answer = synth_answer(mrl.parse_mrl(ex.gold), clar.token, clar.alternative)
    if answer is None:
        return None
    return DialogueRecord(
        id=ex.id,
        question=ex.question,
        hypothesis=hyp.text,
        dialogue=f"{clar.question}{DIALOGUE_SEP}{answer}",
        logged_answer=answer,
        target=ex.gold,
    )


def build_dialogue_corpus(model: Seq2SeqModel, splits: SplitSet) -> SplitSet:
    """Dialogue records for every example whose answer can be synthesized.

    Examples whose hypothesis fails to parse, produces no clarification,
    or yields no answer are skipped; callers keep the original splits for
    question-only baselines.
    """
    def run(examples: Sequence[Example]) -> tuple[DialogueRecord, ...]:
        out = []
        for ex in examples:
            rec = _record_for(model, ex)
            if rec is not None:
                out.append(rec)
        return tuple(out)

    return SplitSet(train=run(splits.train), dev=run(splits.dev), test=run(splits.test))


def write_dialogue_jsonl(records: Iterable[DialogueRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


def load_dialogue_jsonl(path: str | Path) -> list[DialogueRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(DialogueRecord.from_json(json.loads(line)))
    return out


def write_feedback_jsonl(items: Iterable[MarkingFeedback], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for fb in items:
            f.write(json.dumps(fb.to_json(), ensure_ascii=False) + "\n")


def load_feedback_jsonl(path: str | Path) -> list[MarkingFeedback]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(MarkingFeedback.from_json(json.loads(line)))
    return out


def distribute_rewards(hyp: Hypothesis | str, fb: MarkingFeedback) -> CharReward:
    """Spread token marks onto characters: +0.5 correct, -0.5 incorrect, else 0."""
    text = hyp.text if isinstance(hyp, Hypothesis) else hyp
    n = len(text)
    ordered = sorted(fb.marks, key=lambda m: m.start)
    prev_end = 0
    for m in ordered:
        if m.end > n:
            raise SpanOutOfRange(f"span ({m.start}, {m.end}) exceeds text length {n}")
        if m.start < prev_end:
            raise OverlappingSpans(f"span ({m.start}, {m.end}) overlaps a previous mark")
        prev_end = m.end
    values = [0.0] * n
    for m in ordered:
        delta = 0.5 if m.mark == "correct" else -0.5
        for i in range(m.start, m.end):
            values[i] = delta
    return CharReward(values=tuple(values))


def _max_token_entropy(hyp: Hypothesis) -> float:
    uncs = token_entropies(hyp)
    return max((u.mean_entropy for u in uncs), default=0.0)


def filter_annotation_tasks(model: Seq2SeqModel, examples: Sequence[Example],
                            threshold: float) -> list[AnnotationTask]:
    """Keep examples whose parse is wrong or whose uncertainty tops the threshold."""
    tasks = []
    greedy = decode_greedy_batch(model, [(ex.question,) for ex in examples])
    for ex, hyp in zip(examples, greedy):
        mistake = hyp.text != ex.gold
        max_ent = _max_token_entropy(hyp)
        if not mistake and max_ent <= threshold:
            continue
        beams = beam_search(model, (ex.question,), 2)
        tasks.append(AnnotationTask(
            id=ex.id,
            question=ex.question,
            hypothesis=hyp.text,
            keyvals=tuple(mrl.keyval_spans(hyp.text)),
            clarification=make_clarification(beams),
            max_token_entropy=max_ent,
            mistake=mistake,
        ))
    return tasks


def default_entropy_threshold(model: Seq2SeqModel, dev: Sequence[Example]) -> float:
    """90th percentile of per-example max token entropy on a held-out set."""
    if not dev:
        return 0.0
    hyps = decode_greedy_batch(model, [(ex.question,) for ex in dev])
    maxes = [_max_token_entropy(h) for h in hyps]
    return float(np.percentile(maxes, 90))

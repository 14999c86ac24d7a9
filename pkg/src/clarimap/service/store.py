"""Task file and append-only feedback log.

Tasks ship as JSON lines, one annotation task per line, and never change
once written; all session state is reconstructed from the feedback log,
so a restarted service resumes exactly where it stopped.  Feedback lines
are appended under a lock in one write call each, which keeps the log
readable even if the process dies mid-session.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..dialogue import AnnotationTask, Mark, MarkingFeedback, load_feedback_jsonl
from ..uncertainty import Clarification

__all__ = [
    "UnknownTask",
    "AlreadyAnswered",
    "BadFeedback",
    "TaskStore",
    "task_to_json",
    "task_from_json",
    "write_tasks_jsonl",
    "load_tasks_jsonl",
    "utc_clock",
]


class UnknownTask(KeyError):
    pass


class AlreadyAnswered(ValueError):
    pass


class BadFeedback(ValueError):
    pass


def utc_clock() -> str:
    return datetime.now(timezone.utc).isoformat()


def task_to_json(task: AnnotationTask) -> dict:
    clar = None
    if task.clarification is not None:
        clar = {
            "question": task.clarification.question,
            "token": task.clarification.token,
            "alternative": task.clarification.alternative,
            "span": list(task.clarification.span),
        }
    return {
        "id": task.id,
        "question": task.question,
        "hypothesis": task.hypothesis,
        "keyvals": [dict(kv) for kv in task.keyvals],
        "clarification": clar,
        "max_token_entropy": task.max_token_entropy,
        "mistake": task.mistake,
    }


def _keyval_from_json(kv: dict) -> dict:
    out = dict(kv)
    for span_key in ("key_span", "value_span"):
        if span_key in out:
            out[span_key] = tuple(out[span_key])
    return out


def task_from_json(obj: dict) -> AnnotationTask:
    clar = obj.get("clarification")
    clarification = None
    if clar is not None:
        clarification = Clarification(
            question=clar["question"],
            token=clar["token"],
            alternative=clar.get("alternative"),
            span=tuple(clar["span"]),
        )
    return AnnotationTask(
        id=str(obj["id"]),
        question=obj["question"],
        hypothesis=obj["hypothesis"],
        keyvals=tuple(_keyval_from_json(kv) for kv in obj.get("keyvals", ())),
        clarification=clarification,
        max_token_entropy=float(obj.get("max_token_entropy", 0.0)),
        mistake=bool(obj.get("mistake", False)),
    )


def write_tasks_jsonl(tasks: Iterable[AnnotationTask], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for task in tasks:
            f.write(json.dumps(task_to_json(task), ensure_ascii=False) + "\n")


def load_tasks_jsonl(path: str | Path) -> list[AnnotationTask]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(task_from_json(json.loads(line)))
    return out


class TaskStore:
    """Sequential annotator queue over a task file plus a feedback log.

    Tasks are served in file order; a task is done once the log holds a
    record for it.  The clock is injectable so logs can be byte-stable
    in tests.
    """

    def __init__(self, tasks: Sequence[AnnotationTask], feedback_path: str | Path,
                 clock: Callable[[], str] = utc_clock):
        ids = [t.id for t in tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task ids")
        self._tasks = list(tasks)
        self._by_id = {t.id: t for t in tasks}
        self._feedback_path = Path(feedback_path)
        self._clock = clock
        self._lock = threading.Lock()
        self._answered: set[str] = set()
        if self._feedback_path.exists():
            for fb in load_feedback_jsonl(self._feedback_path):
                self._answered.add(fb.hypothesis_id)

    @classmethod
    def from_files(cls, tasks_path: str | Path, feedback_path: str | Path,
                   clock: Callable[[], str] = utc_clock) -> "TaskStore":
        return cls(load_tasks_jsonl(tasks_path), feedback_path, clock)

    def get(self, task_id: str) -> AnnotationTask:
        try:
            return self._by_id[task_id]
        except KeyError:
            raise UnknownTask(task_id) from None

    def next_task(self) -> AnnotationTask | None:
        with self._lock:
            for task in self._tasks:
                if task.id not in self._answered:
                    return task
        return None

    def status(self, task_id: str) -> str:
        self.get(task_id)
        return "answered" if task_id in self._answered else "pending"

    def record_feedback(self, task_id: str, marks: Sequence[Mark], answer: str) -> MarkingFeedback:
        """Validate, append one log line, and mark the task answered."""
        task = self.get(task_id)
        n = len(task.hypothesis)
        ordered = sorted(marks, key=lambda m: m.start)
        prev_end = 0
        for m in ordered:
            if m.end > n:
                raise BadFeedback(f"span ({m.start}, {m.end}) exceeds hypothesis length {n}")
            if m.start < prev_end:
                raise BadFeedback(f"span ({m.start}, {m.end}) overlaps a previous mark")
            prev_end = m.end
        with self._lock:
            if task_id in self._answered:
                raise AlreadyAnswered(task_id)
            fb = MarkingFeedback(
                hypothesis_id=task_id,
                marks=tuple(ordered),
                answer=answer,
                ts=self._clock(),
            )
            line = json.dumps(fb.to_json(), ensure_ascii=False) + "\n"
            with open(self._feedback_path, "a", encoding="utf-8") as f:
                f.write(line)
            self._answered.add(task_id)
        return fb

    def stats(self) -> dict:
        with self._lock:
            answered = len(self._answered & set(self._by_id))
        total = len(self._tasks)
        return {"total": total, "answered": answered, "pending": total - answered}

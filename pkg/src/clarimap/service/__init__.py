"""Annotation service: task store, HTTP API, fine-tuning, and the CLI."""

from .store import (
    AlreadyAnswered,
    UnknownTask,
    TaskStore,
    load_tasks_jsonl,
    write_tasks_jsonl,
)
from .finetune import EmptyFeedback, JoinFailure, FinetuneReport, eval_model, finetune_on_feedback

__all__ = [
    "AlreadyAnswered",
    "UnknownTask",
    "TaskStore",
    "load_tasks_jsonl",
    "write_tasks_jsonl",
    "EmptyFeedback",
    "JoinFailure",
    "FinetuneReport",
    "eval_model",
    "finetune_on_feedback",
]

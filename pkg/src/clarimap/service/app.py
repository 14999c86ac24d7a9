"""HTTP API for parsing with clarification and for the annotation loop.

All endpoints live under /v1 and speak JSON.  The parse endpoint is pure
given a fixed checkpoint; task state lives entirely in the feedback log,
which the store appends to one line at a time.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .. import mrl
from ..dialogue import Mark
from ..model.checkpoint import load_model
from ..model.decoding import beam_search
from ..model.network import Seq2SeqModel
from ..uncertainty import make_clarification, token_entropies
from .store import AlreadyAnswered, BadFeedback, TaskStore, UnknownTask, utc_clock

__all__ = ["create_app"]


class ParseBody(BaseModel):
    query: str = Field(min_length=1)


class MarkBody(BaseModel):
    start: int
    end: int
    mark: str


class FeedbackBody(BaseModel):
    marks: list[MarkBody] = Field(default_factory=list)
    answer: str = ""


def _clarification_json(clar) -> dict | None:
    if clar is None:
        return None
    return {
        "question": clar.question,
        "token": clar.token,
        "alternative": clar.alternative,
        "span": list(clar.span),
    }


def _task_json(task, status: str) -> dict:
    return {
        "id": task.id,
        "question": task.question,
        "hypothesis": task.hypothesis,
        "keyvals": [
            {
                "key": kv["key"],
                "value": kv["value"],
                "key_span": list(kv["key_span"]),
                "value_span": list(kv["value_span"]),
            }
            for kv in task.keyvals
        ],
        "clarification": _clarification_json(task.clarification),
        "status": status,
    }


def create_app(model: Seq2SeqModel | str | Path | None = None,
               store: TaskStore | None = None,
               tasks_path: str | Path | None = None,
               feedback_path: str | Path | None = None,
               clock: Callable[[], str] = utc_clock) -> FastAPI:
    """Wire the service; model and store are both optional.

    Without a model, /v1/parse answers 503; without tasks, the task
    endpoints answer 404/204 as appropriate.
    """
    if isinstance(model, (str, Path)):
        model = load_model(model)
    if store is None and tasks_path is not None:
        if feedback_path is None:
            raise ValueError("tasks_path requires feedback_path")
        store = TaskStore.from_files(tasks_path, feedback_path, clock)

    app = FastAPI(title="clarimap", version="1")
    # The annotator UI is a static page that may be served from another
    # origin than the API.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.post("/v1/parse")
    def parse(body: ParseBody):
        if model is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        beams = beam_search(model, (body.query,), 2)
        hyp = beams[0]
        clar = make_clarification(beams)
        return {
            "parse": hyp.text,
            "keyvals": [
                {
                    "key": kv["key"],
                    "value": kv["value"],
                    "key_span": list(kv["key_span"]),
                    "value_span": list(kv["value_span"]),
                }
                for kv in mrl.keyval_spans(hyp.text)
            ],
            "clarification": _clarification_json(clar),
            "token_entropies": [
                {
                    "token": u.token.text,
                    "start": u.token.start,
                    "end": u.token.end,
                    "mean_entropy": u.mean_entropy,
                }
                for u in token_entropies(hyp)
            ],
        }

    @app.get("/v1/tasks/next")
    def next_task():
        if store is None:
            return Response(status_code=204)
        task = store.next_task()
        if task is None:
            return Response(status_code=204)
        return _task_json(task, "pending")

    @app.get("/v1/tasks/stats")
    def stats():
        if store is None:
            return {"total": 0, "answered": 0, "pending": 0}
        return store.stats()

    @app.post("/v1/tasks/{task_id}/feedback")
    def feedback(task_id: str, body: FeedbackBody):
        if store is None:
            return JSONResponse(status_code=404, content={"detail": "no tasks loaded"})
        try:
            marks = tuple(Mark(m.start, m.end, m.mark) for m in body.marks)
            fb = store.record_feedback(task_id, marks, body.answer)
        except UnknownTask:
            return JSONResponse(status_code=404, content={"detail": f"unknown task {task_id}"})
        except AlreadyAnswered:
            return JSONResponse(status_code=409, content={"detail": f"task {task_id} already answered"})
        except (BadFeedback, ValueError) as e:
            return JSONResponse(status_code=400, content={"detail": str(e)})
        return {"status": "ok", "task_id": task_id, "ts": fb.ts}

    return app

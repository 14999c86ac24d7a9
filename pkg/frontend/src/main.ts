/** Browser entry point: wires the api client, the session reducer, and
 * the renderer to a root element.  All interaction flows through
 * data-action attributes so the markup stays a pure function of state.
 */

import { ApiError, createClient } from "./api.js";
import {
  AnswerChoice,
  buildFeedback,
  canSubmit,
  initialState,
  reduce,
  SessionEvent,
  SessionState,
} from "./session.js";
import { renderApp } from "./render.js";

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  return param ?? "";
}

const client = createClient(apiBase());
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
const mount: HTMLElement = root;

let state: SessionState = initialState();

function dispatch(event: SessionEvent): SessionState {
  state = reduce(state, event);
  mount.innerHTML = renderApp(state);
  return state;
}

function failureEvent(
  type: "LOAD_FAILED" | "SUBMIT_FAILED",
  error: unknown,
): SessionEvent {
  if (error instanceof ApiError) {
    const kind =
      error.kind === "bad-request"
        ? "validation"
        : error.kind === "not-found"
          ? "server"
          : error.kind;
    return { type, kind, message: error.message };
  }
  return { type, kind: "server", message: String(error) };
}

async function refreshStats(): Promise<void> {
  try {
    dispatch({ type: "STATS_LOADED", stats: await client.stats() });
  } catch {
    /* stats are cosmetic; never block the loop on them */
  }
}

async function loadNext(): Promise<void> {
  const started = dispatch({ type: "LOAD_START" });
  if (started.phase !== "loading") {
    return; // a task is already on screen or in flight
  }
  try {
    const task = await client.nextTask();
    if (task === null) {
      dispatch({ type: "QUEUE_EMPTY" });
      void refreshStats();
    } else {
      dispatch({ type: "TASK_LOADED", task });
    }
  } catch (e) {
    dispatch(failureEvent("LOAD_FAILED", e));
  }
}

async function submit(): Promise<void> {
  if (state.phase !== "annotating" || state.view === null) {
    return;
  }
  const view = state.view;
  const started = dispatch({ type: "SUBMIT_START" });
  if (started.phase !== "submitting") {
    return; // gating failed; the reducer refused the transition
  }
  try {
    const result = await client.submitFeedback(view.task.id, buildFeedback(view));
    dispatch(
      result === "ok"
        ? { type: "SUBMIT_OK" }
        : { type: "SUBMIT_ALREADY_ANSWERED" },
    );
    void refreshStats();
    await loadNext();
  } catch (e) {
    dispatch(failureEvent("SUBMIT_FAILED", e));
  }
}

mount.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement)) {
    return;
  }
  switch (target.dataset.action) {
    case "retry":
      void loadNext();
      break;
    case "mark": {
      const row = Number(target.dataset.row);
      const mark = target.dataset.mark;
      if (Number.isInteger(row) && (mark === "correct" || mark === "incorrect")) {
        dispatch({ type: "SET_MARK", row, mark });
      }
      break;
    }
    case "choose": {
      const choice = target.dataset.choice;
      if (choice === "token" || choice === "alternative" || choice === "free") {
        dispatch({ type: "CHOOSE_ANSWER", choice: choice as AnswerChoice });
      }
      break;
    }
    case "submit":
      void submit();
      break;
  }
});

mount.addEventListener("input", (event) => {
  const target = event.target as HTMLElement;
  if (target instanceof HTMLInputElement && target.dataset.action === "free-text") {
    // Re-rendering on every keystroke would drop the caret; update the
    // state silently and re-render on the next structural event.
    state = reduce(state, { type: "SET_FREE_TEXT", text: target.value });
    const submitButton = mount.querySelector<HTMLButtonElement>("button.submit");
    if (submitButton !== null && state.view !== null && state.phase === "annotating") {
      submitButton.disabled = !canSubmit(state.view);
    }
  }
});

void refreshStats();
void loadNext();

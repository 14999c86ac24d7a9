/** Pure annotation-session state machine.
 *
 * All UI behavior is a fold over SessionEvent values; the DOM layer only
 * dispatches events and re-renders.  Keeping this pure is what makes the
 * two load-bearing guarantees testable:
 *
 *  - submit is enabled only when every key-value row is marked and, if a
 *    clarification question is shown, an answer option is chosen;
 *  - a submission in flight ignores further submit events, so a double
 *    click can never produce two POSTs from this client.
 */

import {
  FeedbackBody,
  Mark,
  MarkLabel,
  TaskPayload,
  TaskStats,
} from "./types.js";

export type RowMark = MarkLabel | "unset";

/** Which of the three answer affordances the annotator picked. */
export type AnswerChoice = "token" | "alternative" | "free";

export interface TaskView {
  readonly task: TaskPayload;
  readonly rowMarks: readonly RowMark[];
  readonly answerChoice: AnswerChoice | null;
  readonly freeText: string;
}

export type BannerKind =
  | "network"
  | "model-loading"
  | "malformed"
  | "validation"
  | "already-answered"
  | "server";

export interface Banner {
  readonly kind: BannerKind;
  readonly message: string;
}

export type Phase = "idle" | "loading" | "annotating" | "submitting" | "done";

export interface SessionState {
  readonly phase: Phase;
  readonly view: TaskView | null;
  readonly banner: Banner | null;
  /** Submissions acknowledged by the service with a 200. */
  readonly completed: number;
  readonly stats: TaskStats | null;
}

export type SessionEvent =
  | { type: "LOAD_START" }
  | { type: "TASK_LOADED"; task: TaskPayload }
  | { type: "QUEUE_EMPTY" }
  | { type: "LOAD_FAILED"; kind: BannerKind; message: string }
  | { type: "SET_MARK"; row: number; mark: MarkLabel }
  | { type: "CHOOSE_ANSWER"; choice: AnswerChoice }
  | { type: "SET_FREE_TEXT"; text: string }
  | { type: "SUBMIT_START" }
  | { type: "SUBMIT_OK" }
  | { type: "SUBMIT_ALREADY_ANSWERED" }
  | { type: "SUBMIT_FAILED"; kind: BannerKind; message: string }
  | { type: "STATS_LOADED"; stats: TaskStats };

export function initialState(): SessionState {
  return { phase: "idle", view: null, banner: null, completed: 0, stats: null };
}

function freshView(task: TaskPayload): TaskView {
  return {
    task,
    rowMarks: task.keyvals.map(() => "unset" as RowMark),
    answerChoice: null,
    freeText: "",
  };
}

/** True when the invariants for submission hold. */
export function canSubmit(view: TaskView): boolean {
  if (view.rowMarks.some((m) => m === "unset")) {
    return false;
  }
  const clar = view.task.clarification;
  if (clar === null) {
    return true; // nothing was asked, so no answer is required
  }
  switch (view.answerChoice) {
    case "token":
      return true;
    case "alternative":
      return clar.alternative !== null;
    case "free":
      return view.freeText.trim().length > 0;
    case null:
      return false;
  }
}

/** The answer string in the same shape the dialogue corpus uses. */
export function composeAnswer(view: TaskView): string {
  const clar = view.task.clarification;
  if (clar === null || view.answerChoice === null) {
    return "";
  }
  switch (view.answerChoice) {
    case "token":
      return `yes, ${clar.token}`;
    case "alternative":
      return `no, I meant ${clar.alternative ?? ""}`;
    case "free":
      return `no, I meant ${view.freeText.trim()}`;
  }
}

/** Feedback body for the current view.
 *
 * Every span is copied verbatim from the served payload — the UI never
 * invents spans.  A row marked correct confirms both its key span and
 * its value span; a row marked incorrect flags only the value span (the
 * part a clarification alternative would replace) and leaves the key
 * unmarked rather than asserting anything about it.
 */
export function buildFeedback(view: TaskView): FeedbackBody {
  if (!canSubmit(view)) {
    throw new Error("feedback requested before the view was complete");
  }
  const marks: Mark[] = [];
  view.task.keyvals.forEach((kv, i) => {
    const rowMark = view.rowMarks[i];
    if (rowMark === "correct") {
      marks.push({ start: kv.key_span[0], end: kv.key_span[1], mark: "correct" });
      marks.push({ start: kv.value_span[0], end: kv.value_span[1], mark: "correct" });
    } else if (rowMark === "incorrect") {
      marks.push({ start: kv.value_span[0], end: kv.value_span[1], mark: "incorrect" });
    }
  });
  marks.sort((a, b) => a.start - b.start);
  return { marks, answer: composeAnswer(view) };
}

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.type) {
    case "LOAD_START":
      if (state.phase === "annotating" || state.phase === "submitting") {
        return state; // never drop a task that is on screen or in flight
      }
      return { ...state, phase: "loading", view: null, banner: null };

    case "TASK_LOADED":
      if (state.phase !== "loading") {
        return state;
      }
      return { ...state, phase: "annotating", view: freshView(event.task) };

    case "QUEUE_EMPTY":
      if (state.phase !== "loading") {
        return state;
      }
      return { ...state, phase: "done", view: null };

    case "LOAD_FAILED":
      if (state.phase !== "loading") {
        return state;
      }
      return {
        ...state,
        phase: "idle",
        view: null,
        banner: { kind: event.kind, message: event.message },
      };

    case "SET_MARK": {
      if (state.phase !== "annotating" || state.view === null) {
        return state;
      }
      if (event.row < 0 || event.row >= state.view.rowMarks.length) {
        return state;
      }
      const rowMarks = state.view.rowMarks.map((m, i) =>
        i === event.row ? event.mark : m,
      );
      return { ...state, view: { ...state.view, rowMarks } };
    }

    case "CHOOSE_ANSWER": {
      if (state.phase !== "annotating" || state.view === null) {
        return state;
      }
      const clar = state.view.task.clarification;
      if (clar === null) {
        return state; // no question was asked
      }
      if (event.choice === "alternative" && clar.alternative === null) {
        return state; // that option does not exist for this task
      }
      return { ...state, view: { ...state.view, answerChoice: event.choice } };
    }

    case "SET_FREE_TEXT":
      if (state.phase !== "annotating" || state.view === null) {
        return state;
      }
      return { ...state, view: { ...state.view, freeText: event.text } };

    case "SUBMIT_START":
      // The double-submit guard: anything but a complete, on-screen,
      // not-yet-submitting view leaves the state untouched.
      if (state.phase !== "annotating" || state.view === null || !canSubmit(state.view)) {
        return state;
      }
      return { ...state, phase: "submitting", banner: null };

    case "SUBMIT_OK":
      if (state.phase !== "submitting") {
        return state;
      }
      return {
        ...state,
        phase: "loading",
        view: null,
        banner: null,
        completed: state.completed + 1,
      };

    case "SUBMIT_ALREADY_ANSWERED":
      if (state.phase !== "submitting") {
        return state;
      }
      return {
        ...state,
        phase: "loading",
        view: null,
        banner: {
          kind: "already-answered",
          message: "This task was already answered; moving on.",
        },
      };

    case "SUBMIT_FAILED":
      if (state.phase !== "submitting") {
        return state;
      }
      // Keep the view so the annotator's marks survive a failed POST.
      return {
        ...state,
        phase: "annotating",
        banner: { kind: event.kind, message: event.message },
      };

    case "STATS_LOADED":
      return { ...state, stats: event.stats };
  }
}

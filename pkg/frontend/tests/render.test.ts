import { describe, expect, it } from "vitest";

import { escapeHtml, renderApp } from "../src/render.js";
import { initialState, reduce, SessionEvent, SessionState } from "../src/session.js";
import { TaskPayload } from "../src/types.js";

const TASK: TaskPayload = {
  id: "1",
  question: "pub in bradford",
  hypothesis:
    "query(area(keyval('name','bradford')),nwr(keyval('amenity','pub')),qtype(latlong))",
  keyvals: [
    { key: "name", value: "bradford", key_span: [19, 23], value_span: [26, 34] },
    { key: "amenity", value: "pub", key_span: [50, 57], value_span: [60, 63] },
  ],
  clarification: {
    question: "Did you mean bradford or glasgow?",
    token: "bradford",
    alternative: "glasgow",
    span: [26, 34],
  },
  status: "pending",
};

function play(events: SessionEvent[]): SessionState {
  let state = initialState();
  for (const event of events) {
    state = reduce(state, event);
  }
  return state;
}

function annotating(task: TaskPayload = TASK): SessionState {
  return play([{ type: "LOAD_START" }, { type: "TASK_LOADED", task }]);
}

describe("purity", () => {
  it("the same state renders the identical markup", () => {
    const state = annotating();
    expect(renderApp(state)).toBe(renderApp(state));
  });

  it("rendering does not mutate the state", () => {
    const state = annotating();
    const snapshot = JSON.stringify(state);
    renderApp(state);
    expect(JSON.stringify(state)).toBe(snapshot);
  });
});

describe("task screen", () => {
  it("shows question, parse, key-value rows, and the clarification", () => {
    const html = renderApp(annotating());
    expect(html).toContain("pub in bradford");
    expect(html).toContain("query(area(keyval(&#39;name&#39;,&#39;bradford&#39;))");
    expect((html.match(/class="kv-row/g) ?? []).length).toBe(2);
    expect(html).toContain("Did you mean bradford or glasgow?");
    expect(html).toContain("yes, bradford");
    expect(html).toContain("no, I meant glasgow");
  });

  it("disables submit until the view is complete", () => {
    let state = annotating();
    expect(renderApp(state)).toContain('data-action="submit" disabled');
    state = reduce(state, { type: "SET_MARK", row: 0, mark: "correct" });
    state = reduce(state, { type: "SET_MARK", row: 1, mark: "correct" });
    state = reduce(state, { type: "CHOOSE_ANSWER", choice: "token" });
    expect(renderApp(state)).toContain('data-action="submit">');
    expect(renderApp(state)).not.toContain('data-action="submit" disabled');
  });

  it("reflects a chosen mark on its row", () => {
    const state = reduce(annotating(), { type: "SET_MARK", row: 1, mark: "incorrect" });
    const html = renderApp(state);
    expect(html).toContain('data-row="1" data-mark="incorrect" aria-pressed="true"');
    expect(html).toContain('data-row="0" data-mark="incorrect" aria-pressed="false"');
  });

  it("omits the alternative option when the service sent none", () => {
    const task: TaskPayload = {
      ...TASK,
      clarification: { ...TASK.clarification!, alternative: null },
    };
    const html = renderApp(annotating(task));
    expect(html).toContain("yes, bradford");
    expect(html).not.toContain('data-choice="alternative"');
    expect(html).toContain('data-choice="free"');
  });

  it("renders a placeholder card when there is no clarification", () => {
    const html = renderApp(annotating({ ...TASK, clarification: null }));
    expect(html).toContain("No clarification question");
    expect(html).not.toContain('data-choice="token"');
  });

  it("escapes hostile payload text", () => {
    const task: TaskPayload = {
      ...TASK,
      question: '<script>alert("x")</script>',
    };
    const html = renderApp(annotating(task));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("a submission in flight shows a disabled submitting button", () => {
    const ready = play([
      { type: "LOAD_START" },
      { type: "TASK_LOADED", task: TASK },
      { type: "SET_MARK", row: 0, mark: "correct" },
      { type: "SET_MARK", row: 1, mark: "correct" },
      { type: "CHOOSE_ANSWER", choice: "token" },
      { type: "SUBMIT_START" },
    ]);
    const html = renderApp(ready);
    expect(html).toContain("Submitting&hellip;");
    expect(html).toContain('data-action="submit" disabled');
  });
});

describe("other screens", () => {
  it("idle shows the start control", () => {
    expect(renderApp(initialState())).toContain("Load first task");
  });

  it("loading shows a loading line", () => {
    expect(renderApp(play([{ type: "LOAD_START" }]))).toContain("Loading&hellip;");
  });

  it("done shows the completion screen with the answered count", () => {
    const state = play([
      { type: "STATS_LOADED", stats: { total: 12, answered: 12, pending: 0 } },
      { type: "LOAD_START" },
      { type: "QUEUE_EMPTY" },
    ]);
    const html = renderApp(state);
    expect(html).toContain("All tasks complete");
    expect(html).toContain("12 task(s) answered");
  });

  it("a network banner offers a retry control", () => {
    const state = play([
      { type: "LOAD_START" },
      { type: "LOAD_FAILED", kind: "network", message: "connection refused" },
    ]);
    const html = renderApp(state);
    expect(html).toContain("connection refused");
    expect(html).toContain('data-action="retry"');
  });

  it("a model-loading banner names the state without its own retry button", () => {
    const state = play([
      { type: "LOAD_START" },
      { type: "LOAD_FAILED", kind: "model-loading", message: "model not loaded" },
    ]);
    const html = renderApp(state);
    expect(html).toContain("Model loading");
    const banner = html.slice(html.indexOf('<div class="banner'), html.indexOf("</div>"));
    expect(banner).not.toContain("data-action");
  });

  it("a validation banner repeats the server detail", () => {
    const state = play([
      { type: "LOAD_START" },
      { type: "TASK_LOADED", task: TASK },
      { type: "SET_MARK", row: 0, mark: "correct" },
      { type: "SET_MARK", row: 1, mark: "correct" },
      { type: "CHOOSE_ANSWER", choice: "token" },
      { type: "SUBMIT_START" },
      { type: "SUBMIT_FAILED", kind: "validation", message: "span outside hypothesis" },
    ]);
    expect(renderApp(state)).toContain("span outside hypothesis");
  });
});

describe("escapeHtml", () => {
  it("covers the five special characters", () => {
    expect(escapeHtml(`&<>"'`)).toBe("&amp;&lt;&gt;&quot;&#39;");
  });
});

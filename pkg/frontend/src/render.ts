/** Pure HTML rendering of a session state.
 *
 * renderApp is a function of the state alone: the same state always
 * yields the identical markup string, and the state is never mutated.
 * Interactive elements carry data-action attributes; the DOM layer
 * routes clicks and input through those back into session events.
 */

import { canSubmit, SessionState, TaskView } from "./session.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function bannerHtml(state: SessionState): string {
  const banner = state.banner;
  if (banner === null) {
    return "";
  }
  const retry =
    banner.kind === "network" || banner.kind === "server"
      ? '<button type="button" data-action="retry">Retry</button>'
      : "";
  const label = banner.kind === "model-loading" ? "Model loading" : banner.kind;
  return `<div class="banner banner-${banner.kind}" role="alert">` +
    `<strong>${escapeHtml(label)}</strong> ${escapeHtml(banner.message)} ${retry}</div>`;
}

function progressHtml(state: SessionState): string {
  const stats = state.stats;
  const total = stats === null ? "" : ` of ${stats.total}`;
  return `<div class="progress">completed ${state.completed}${total}</div>`;
}

function markButton(row: number, mark: "correct" | "incorrect", current: string): string {
  const pressed = current === mark ? "true" : "false";
  const label = mark === "correct" ? "&#10003;" : "&#10007;";
  return (
    `<button type="button" data-action="mark" data-row="${row}" data-mark="${mark}" ` +
    `aria-pressed="${pressed}" class="mark-${mark}${current === mark ? " selected" : ""}">` +
    `${label}</button>`
  );
}

function keyvalRows(view: TaskView): string {
  return view.task.keyvals
    .map((kv, i) => {
      const current = view.rowMarks[i] ?? "unset";
      return (
        `<tr class="kv-row kv-${current}">` +
        `<td class="kv-key">${escapeHtml(kv.key)}</td>` +
        `<td class="kv-value">${escapeHtml(kv.value)}</td>` +
        `<td class="kv-marks">${markButton(i, "correct", current)}${markButton(i, "incorrect", current)}</td>` +
        `</tr>`
      );
    })
    .join("");
}

function answerOption(
  choice: "token" | "alternative" | "free",
  label: string,
  selected: boolean,
): string {
  return (
    `<label class="answer-option${selected ? " selected" : ""}">` +
    `<input type="radio" name="answer" data-action="choose" data-choice="${choice}"` +
    `${selected ? " checked" : ""}> ${label}</label>`
  );
}

function clarificationHtml(view: TaskView): string {
  const clar = view.task.clarification;
  if (clar === null) {
    return '<section class="card card-clarification"><p>No clarification question for this task.</p></section>';
  }
  const options = [
    answerOption("token", `yes, ${escapeHtml(clar.token)}`, view.answerChoice === "token"),
  ];
  if (clar.alternative !== null) {
    options.push(
      answerOption(
        "alternative",
        `no, I meant ${escapeHtml(clar.alternative)}`,
        view.answerChoice === "alternative",
      ),
    );
  }
  options.push(
    answerOption("free", "no, I meant:", view.answerChoice === "free") +
      `<input type="text" data-action="free-text" value="${escapeHtml(view.freeText)}"` +
      ' placeholder="your correction">',
  );
  return (
    '<section class="card card-clarification">' +
    `<h2>${escapeHtml(clar.question)}</h2>` +
    `<div class="answers">${options.join("")}</div>` +
    "</section>"
  );
}

function taskHtml(view: TaskView, submitting: boolean): string {
  const ready = canSubmit(view) && !submitting;
  return (
    '<section class="card card-question">' +
    `<h2>Question</h2><p class="question-text">${escapeHtml(view.task.question)}</p>` +
    "</section>" +
    '<section class="card card-parse">' +
    `<h2>Parse</h2><code class="parse-text">${escapeHtml(view.task.hypothesis)}</code>` +
    "</section>" +
    '<section class="card card-keyvals">' +
    "<h2>Keys and values</h2>" +
    `<table class="kv-table"><thead><tr><th>key</th><th>value</th><th>mark</th></tr></thead>` +
    `<tbody>${keyvalRows(view)}</tbody></table>` +
    "</section>" +
    clarificationHtml(view) +
    `<button type="button" class="submit" data-action="submit"${ready ? "" : " disabled"}>` +
    `${submitting ? "Submitting&hellip;" : "Submit feedback"}</button>`
  );
}

export function renderApp(state: SessionState): string {
  let body: string;
  switch (state.phase) {
    case "idle":
      body = '<button type="button" class="start" data-action="retry">Load first task</button>';
      break;
    case "loading":
      body = '<p class="loading">Loading&hellip;</p>';
      break;
    case "annotating":
      body = state.view === null ? "" : taskHtml(state.view, false);
      break;
    case "submitting":
      body = state.view === null ? "" : taskHtml(state.view, true);
      break;
    case "done": {
      const answered = state.stats === null ? state.completed : state.stats.answered;
      body =
        '<section class="card card-done"><h2>All tasks complete</h2>' +
        `<p>${answered} task(s) answered. Thank you!</p></section>`;
      break;
    }
  }
  return (
    `<header><h1>Annotation</h1>${progressHtml(state)}</header>` +
    bannerHtml(state) +
    `<main>${body}</main>`
  );
}

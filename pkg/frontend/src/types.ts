/** Types mirroring the /v1 HTTP+JSON API, plus runtime shape guards.
 *
 * The guards exist because a malformed task payload must surface as an
 * error banner, never as a crash deep inside the rendering code.
 */

/** Half-open [start, end) character range into the hypothesis string. */
export type Span = readonly [number, number];

export type MarkLabel = "correct" | "incorrect";

/** One key-value pair of the parse, with its spans in the hypothesis. */
export interface ServedKeyVal {
  readonly key: string;
  readonly value: string;
  readonly key_span: Span;
  readonly value_span: Span;
}

export interface ServedClarification {
  readonly question: string;
  readonly token: string;
  readonly alternative: string | null;
  readonly span: Span;
}

/** GET /v1/tasks/next 200 body. */
export interface TaskPayload {
  readonly id: string;
  readonly question: string;
  readonly hypothesis: string;
  readonly keyvals: readonly ServedKeyVal[];
  readonly clarification: ServedClarification | null;
  readonly status: string;
}

/** One span mark inside POST /v1/tasks/{id}/feedback. */
export interface Mark {
  readonly start: number;
  readonly end: number;
  readonly mark: MarkLabel;
}

/** POST /v1/tasks/{id}/feedback request body. */
export interface FeedbackBody {
  readonly marks: readonly Mark[];
  readonly answer: string;
}

/** GET /v1/tasks/stats 200 body. */
export interface TaskStats {
  readonly total: number;
  readonly answered: number;
  readonly pending: number;
}

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function isSpan(x: unknown): x is Span {
  return (
    Array.isArray(x) &&
    x.length === 2 &&
    x.every((n) => typeof n === "number" && Number.isInteger(n))
  );
}

function isKeyVal(x: unknown): x is ServedKeyVal {
  return (
    isRecord(x) &&
    typeof x.key === "string" &&
    typeof x.value === "string" &&
    isSpan(x.key_span) &&
    isSpan(x.value_span)
  );
}

function isClarification(x: unknown): x is ServedClarification {
  return (
    isRecord(x) &&
    typeof x.question === "string" &&
    typeof x.token === "string" &&
    (x.alternative === null || typeof x.alternative === "string") &&
    isSpan(x.span)
  );
}

export function isTaskPayload(x: unknown): x is TaskPayload {
  return (
    isRecord(x) &&
    typeof x.id === "string" &&
    typeof x.question === "string" &&
    typeof x.hypothesis === "string" &&
    Array.isArray(x.keyvals) &&
    x.keyvals.every(isKeyVal) &&
    (x.clarification === null || isClarification(x.clarification)) &&
    typeof x.status === "string"
  );
}

export function isTaskStats(x: unknown): x is TaskStats {
  return (
    isRecord(x) &&
    typeof x.total === "number" &&
    typeof x.answered === "number" &&
    typeof x.pending === "number"
  );
}

/** Thin typed client for the annotation service; no math happens here. */

import type {
  EstimateReport,
  ImportResponse,
  JudgmentsDoc,
  SessionSummary,
  SubmitResponse,
  TriplePayload,
  Verdict,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parse<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = (await resp.json()) as { error_code?: string; message?: string };
    if (body.error_code) code = body.error_code;
    if (body.message) message = body.message;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const body = await parse<{ sessions: SessionSummary[] }>(
      await fetch(this.url("/sessions")),
    );
    return body.sessions;
  }

  async createSession(batchText: string, filename = "batch.jsonl"): Promise<SessionSummary> {
    // hand-rolled multipart body: works identically in browsers and node,
    // unlike mixing one environment's FormData with the other's fetch
    const boundary = `----linkaudit${Math.random().toString(36).slice(2)}`;
    const safeName = filename.replaceAll('"', "");
    const body =
      `--${boundary}\r\n` +
      `Content-Disposition: form-data; name="batch"; filename="${safeName}"\r\n` +
      `Content-Type: application/octet-stream\r\n\r\n` +
      `${batchText}\r\n--${boundary}--\r\n`;
    return parse(
      await fetch(this.url("/sessions"), {
        method: "POST",
        headers: { "Content-Type": `multipart/form-data; boundary=${boundary}` },
        body,
      }),
    );
  }

  async getSession(sessionId: string): Promise<SessionSummary> {
    return parse(await fetch(this.url(`/sessions/${sessionId}`)));
  }

  async getTriple(sessionId: string, index: number): Promise<TriplePayload> {
    return parse(await fetch(this.url(`/sessions/${sessionId}/triples/${index}`)));
  }

  async submitJudgment(
    sessionId: string,
    tripleId: string,
    verdict: Verdict,
    elapsedSeconds: number,
    annotatorId: string,
  ): Promise<SubmitResponse> {
    return parse(
      await fetch(this.url(`/sessions/${sessionId}/judgments`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          triple_id: tripleId,
          verdict,
          elapsed_seconds: elapsedSeconds,
          annotator_id: annotatorId,
        }),
      }),
    );
  }

  async getEstimate(sessionId: string): Promise<EstimateReport> {
    return parse(await fetch(this.url(`/sessions/${sessionId}/estimate`)));
  }

  async exportSession(sessionId: string): Promise<JudgmentsDoc> {
    return parse(await fetch(this.url(`/sessions/${sessionId}/export`)));
  }

  async importSession(sessionId: string, doc: JudgmentsDoc): Promise<ImportResponse> {
    return parse(
      await fetch(this.url(`/sessions/${sessionId}/import`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(doc),
      }),
    );
  }
}

/** The annotation interface: panels, navigation, verdicts, live badge.
 * All statistics shown are verbatim server values; the UI never computes
 * estimates itself.
 */

import { ApiClient, ApiError } from "./api.js";
import { splitHighlight } from "./highlight.js";
import { SessionLease } from "./lease.js";
import {
  UiSessionState,
  afterSubmit,
  formatMoeBadge,
  initialState,
  offRecommendedOrder,
  withIndex,
  withProgress,
  withReport,
  withSelection,
} from "./state.js";
import { ElapsedTimer } from "./timer.js";
import type { JudgmentsDoc, SessionSummary, TriplePayload, Verdict } from "./types.js";

const VERDICT_LABELS: Record<Verdict, string> = {
  correct: "Correct (1)",
  wrong_concept: "Wrong concept (2)",
  overly_generic: "Overly generic (3)",
};

function el<T extends HTMLElement>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
}

function escapeHtml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export class App {
  state: UiSessionState | null = null;
  triple: TriplePayload | null = null;
  statusMessage = "";
  pendingRetry: (() => Promise<void>) | null = null;
  private timer: ElapsedTimer;
  private lease: SessionLease | null = null;
  private readonly onKey: (ev: KeyboardEvent) => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly annotatorId: string = "annotator",
    private readonly doc: Document = document,
  ) {
    this.timer = new ElapsedTimer(this.doc);
    this.onKey = (ev) => this.handleKey(ev);
    this.doc.addEventListener("keydown", this.onKey);
  }

  dispose(): void {
    this.doc.removeEventListener("keydown", this.onKey);
    this.timer.dispose();
    this.lease?.release();
  }

  // ---- start screen ------------------------------------------------------

  async showStart(): Promise<void> {
    let sessions: SessionSummary[] = [];
    let listError = "";
    try {
      sessions = await this.api.listSessions();
    } catch (err) {
      listError = describe(err);
    }
    const rows = sessions
      .map(
        (s) => `
        <li>
          <button class="resume" data-session="${s.session_id}">
            ${s.session_id} &middot; ${s.progress.judged}/${s.progress.total} judged
            &middot; ${s.design}
          </button>
        </li>`,
      )
      .join("");
    this.root.innerHTML = `
      <div class="start">
        <h1>linkaudit annotation</h1>
        <section>
          <h2>Start from a batch file</h2>
          <input type="file" id="batch-file" accept=".jsonl" />
        </section>
        <section>
          <h2>Resume a session</h2>
          <ul id="session-list">${rows || "<li>none yet</li>"}</ul>
          ${listError ? `<p class="error">${escapeHtml(listError)}</p>` : ""}
        </section>
        <p id="start-status" class="status">${escapeHtml(this.statusMessage)}</p>
      </div>`;

    el<HTMLInputElement>(this.root, "#batch-file").addEventListener("change", async (ev) => {
      const input = ev.target as HTMLInputElement;
      const file = input.files?.[0];
      if (!file) return;
      try {
        const summary = await this.api.createSession(await file.text(), file.name);
        await this.openSession(summary);
      } catch (err) {
        console.error("session creation failed", err);
        this.statusMessage = describe(err);
        await this.showStart();
      }
    });
    this.root.querySelectorAll<HTMLButtonElement>("button.resume").forEach((btn) =>
      btn.addEventListener("click", async () => {
        const summary = await this.api.getSession(btn.dataset.session!);
        await this.openSession(summary);
      }),
    );
  }

  // ---- session -----------------------------------------------------------

  async openSession(summary: SessionSummary): Promise<void> {
    this.lease?.release();
    this.lease = new SessionLease(summary.session_id);
    const owned = this.lease.acquire();
    this.state = { ...initialState(summary), readOnly: !owned };
    this.state = withReport(this.state, await this.api.getEstimate(summary.session_id));
    await this.showTriple(this.state.index);
  }

  async showTriple(index: number): Promise<void> {
    if (!this.state) return;
    this.triple = await this.api.getTriple(this.state.sessionId, index);
    this.state = withIndex(this.state, index);
    this.state = withProgress(this.state, this.triple.progress);
    if (this.triple.existing_verdict) {
      // show the stored verdict without marking it as unsaved work
      this.state = { ...this.state, selectedVerdict: this.triple.existing_verdict };
    }
    this.statusMessage = "";
    this.pendingRetry = null;
    this.timer.restart();
    this.render();
  }

  // ---- actions -----------------------------------------------------------

  selectVerdict(verdict: Verdict): void {
    if (!this.state || this.state.readOnly) return;
    this.state = withSelection(this.state, verdict);
    this.render();
  }

  async submit(): Promise<void> {
    const state = this.state;
    const triple = this.triple;
    if (!state || !triple || state.readOnly) return;
    const verdict = state.selectedVerdict;
    if (!verdict) {
      this.statusMessage = "pick a verdict first";
      this.render();
      return;
    }
    const elapsed = this.timer.elapsedSeconds();
    const attempt = async () => {
      const resp = await this.api.submitJudgment(
        state.sessionId,
        triple.triple_id,
        verdict,
        elapsed,
        this.annotatorId,
      );
      this.state = afterSubmit(
        withReport(withProgress(this.state!, resp.progress), resp.report),
      );
      this.pendingRetry = null;
      this.statusMessage = "";
      const next = Math.min(this.state.index + 1, this.state.total - 1);
      if (next !== this.state.index) {
        await this.showTriple(next);
      } else {
        await this.showTriple(this.state.index); // last triple: stay put
      }
    };
    try {
      await attempt();
    } catch (err) {
      // the selection stays local so nothing is lost; offer a retry
      this.statusMessage = `submit failed: ${describe(err)}`;
      this.pendingRetry = attempt;
      this.render();
    }
  }

  async jumpTo(raw: string): Promise<void> {
    if (!this.state) return;
    const index = Number.parseInt(raw, 10) - 1; // dialog speaks 1-based
    if (Number.isNaN(index) || index < 0 || index >= this.state.total) {
      this.statusMessage = `index must be between 1 and ${this.state.total}`;
      this.render();
      return;
    }
    await this.showTriple(index);
  }

  async exportJudgments(): Promise<JudgmentsDoc> {
    if (!this.state) throw new Error("no session");
    const doc = await this.api.exportSession(this.state.sessionId);
    const blob = new Blob([JSON.stringify(doc, null, 2)], { type: "application/json" });
    if (typeof URL.createObjectURL === "function") {
      const a = this.doc.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `judgments-${this.state.sessionId}.json`;
      a.click();
      if (typeof URL.revokeObjectURL === "function") URL.revokeObjectURL(a.href);
    }
    return doc;
  }

  async importJudgments(text: string): Promise<void> {
    if (!this.state) return;
    try {
      const doc = JSON.parse(text) as JudgmentsDoc;
      const resp = await this.api.importSession(this.state.sessionId, doc);
      this.state = withReport(withProgress(this.state, resp.progress), resp.report);
      this.statusMessage = `imported ${resp.imported} judgments`;
      await this.showTriple(this.state.index);
    } catch (err) {
      this.statusMessage = `import failed: ${describe(err)}`;
      this.render();
    }
  }

  private handleKey(ev: KeyboardEvent): void {
    if (!this.state || !this.triple) return;
    const target = ev.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
    if (ev.key === "1") this.selectVerdict("correct");
    else if (ev.key === "2") this.selectVerdict("wrong_concept");
    else if (ev.key === "3") this.selectVerdict("overly_generic");
    else if (ev.key === "Enter") void this.submit();
    else if (ev.key === "ArrowLeft") void this.showTriple(this.state.index - 1);
    else if (ev.key === "ArrowRight" && this.state.index + 1 < this.state.total)
      void this.showTriple(this.state.index + 1);
  }

  // ---- rendering ---------------------------------------------------------

  render(): void {
    const state = this.state;
    const payload = this.triple;
    if (!state || !payload) return;
    const t = payload.triple;
    const parts = splitHighlight(t.context_text, t.start, t.end);
    const verdictButtons = (Object.keys(VERDICT_LABELS) as Verdict[])
      .map(
        (v) => `
        <button class="verdict ${state.selectedVerdict === v ? "selected" : ""}"
                id="verdict-${v}" data-verdict="${v}"
                ${state.readOnly ? "disabled" : ""}>
          ${VERDICT_LABELS[v]}
        </button>`,
      )
      .join("");
    const report = state.report;
    const strataRows = (report?.strata ?? [])
      .map(
        (s) => `
        <tr>
          <td>${escapeHtml(s.name)}</td>
          <td>${s.mu_hat === null ? "n/a" : s.mu_hat.toFixed(3)}</td>
          <td>${s.moe === null ? "n/a" : s.moe.toFixed(3)}</td>
          <td>${s.n_clusters}</td>
        </tr>`,
      )
      .join("");
    const complete = state.judged >= state.total;

    this.root.innerHTML = `
      <div class="annotate">
        <header>
          <span id="moe-badge" class="badge ${report?.converged ? "converged" : ""}">
            ${escapeHtml(formatMoeBadge(report))}
          </span>
          <details id="strata-details">
            <summary>per-stratum</summary>
            <table>
              <thead><tr><th>stratum</th><th>mu</th><th>MoE</th><th>clusters</th></tr></thead>
              <tbody>${strataRows}</tbody>
            </table>
          </details>
          ${
            state.converged
              ? `<div id="convergence-banner"
                      data-announcements="${state.convergenceAnnouncements}">
                   Target margin of error reached: further annotations are not
                   needed for the global estimate.
                 </div>`
              : ""
          }
          ${
            state.readOnly
              ? `<div id="readonly-banner">Another tab owns this session; read-only.</div>`
              : ""
          }
        </header>

        <section id="panel-progress" class="panel">
          <button id="prev-btn" ${state.index === 0 ? "disabled" : ""}>&larr; Prev</button>
          <span id="progress-label">
            triple ${state.index + 1} / ${state.total} &middot;
            ${state.judged} judged
          </span>
          <button id="next-btn" title="double-click to jump"
                  ${state.index + 1 >= state.total ? "disabled" : ""}>Next &rarr;</button>
          <span id="jump-box" class="hidden">
            <input id="jump-input" size="6" placeholder="index" />
            <button id="jump-go">go</button>
          </span>
          <button id="export-btn">Export</button>
          ${offRecommendedOrder(state) ? `<span id="off-order-marker">off recommended order</span>` : ""}
          ${complete ? `<span id="complete-marker">all triples judged</span>` : ""}
        </section>

        <section id="panel-load" class="panel">
          <label>load previous annotations:
            <input type="file" id="import-file" accept=".json" />
          </label>
          <details>
            <summary>or paste JSON</summary>
            <textarea id="import-paste" rows="3"></textarea>
            <button id="import-paste-btn">import</button>
          </details>
        </section>

        <section id="panel-context" class="panel">
          <h3>${t.location} of ${escapeHtml(t.doc_id)}</h3>
          ${parts.valid ? "" : `<span id="warning-badge">offsets outside context</span>`}
          <p id="context-text">${escapeHtml(parts.before)}<mark id="mention-mark">${escapeHtml(
            parts.span,
          )}</mark>${escapeHtml(parts.after)}</p>
        </section>

        <div class="columns">
          <section id="panel-entity" class="panel">
            <h3>entity</h3>
            <dl>
              <dt>mention</dt><dd id="entity-mention">${escapeHtml(t.text_span)}</dd>
              <dt>label</dt><dd id="entity-label">${escapeHtml(t.label)}</dd>
              <dt>location</dt><dd>${t.location}</dd>
              <dt>offsets</dt><dd id="entity-offsets">[${t.start}, ${t.end})</dd>
              <dt>cluster</dt>
              <dd id="entity-cluster">${escapeHtml(payload.cluster_surface)}
                  (${payload.cluster_size} sampled)</dd>
            </dl>
          </section>

          <section id="panel-concept" class="panel">
            <h3>concept</h3>
            <dl>
              <dt>URI</dt>
              <dd><a id="concept-uri" href="${escapeHtml(t.uri)}" target="_blank"
                     rel="noopener">${escapeHtml(t.uri)}</a></dd>
              <dt>resource</dt><dd>${escapeHtml(t.resource)}</dd>
              <dt>names</dt>
              <dd id="concept-names">${
                t.names.length ? t.names.map(escapeHtml).join("; ") : "no name available"
              }</dd>
              <dt>definitions</dt>
              <dd id="concept-definitions">${
                t.definitions.length
                  ? t.definitions.map(escapeHtml).join(" | ")
                  : "no definition available"
              }</dd>
            </dl>
          </section>
        </div>

        <section id="panel-verdict" class="panel">
          ${verdictButtons}
          <button id="submit-btn" ${state.readOnly ? "disabled" : ""}>
            Submit &amp; next (Enter)
          </button>
          ${this.pendingRetry ? `<button id="retry-btn">retry submit</button>` : ""}
          <span id="status" class="status">${escapeHtml(this.statusMessage)}</span>
        </section>
      </div>`;

    this.wire();
  }

  private wire(): void {
    this.root.querySelectorAll<HTMLButtonElement>("button.verdict").forEach((btn) =>
      btn.addEventListener("click", () => this.selectVerdict(btn.dataset.verdict as Verdict)),
    );
    el<HTMLButtonElement>(this.root, "#submit-btn").addEventListener("click", () =>
      void this.submit(),
    );
    const retry = this.root.querySelector<HTMLButtonElement>("#retry-btn");
    if (retry && this.pendingRetry) {
      const attempt = this.pendingRetry;
      retry.addEventListener("click", () =>
        attempt().catch((err) => {
          this.statusMessage = `submit failed: ${describe(err)}`;
          this.render();
        }),
      );
    }
    el<HTMLButtonElement>(this.root, "#prev-btn").addEventListener("click", () =>
      void this.showTriple(this.state!.index - 1),
    );
    const next = el<HTMLButtonElement>(this.root, "#next-btn");
    next.addEventListener("click", () => void this.showTriple(this.state!.index + 1));
    next.addEventListener("dblclick", () => {
      el<HTMLElement>(this.root, "#jump-box").classList.remove("hidden");
      el<HTMLInputElement>(this.root, "#jump-input").focus();
    });
    el<HTMLButtonElement>(this.root, "#jump-go").addEventListener("click", () =>
      void this.jumpTo(el<HTMLInputElement>(this.root, "#jump-input").value),
    );
    el<HTMLButtonElement>(this.root, "#export-btn").addEventListener("click", () =>
      void this.exportJudgments(),
    );
    el<HTMLInputElement>(this.root, "#import-file").addEventListener("change", async (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) await this.importJudgments(await file.text());
    });
    el<HTMLButtonElement>(this.root, "#import-paste-btn").addEventListener("click", () =>
      void this.importJudgments(el<HTMLTextAreaElement>(this.root, "#import-paste").value),
    );
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.errorCode}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

export function mountApp(root: HTMLElement, api: ApiClient, annotatorId?: string): App {
  const app = new App(root, api, annotatorId);
  void app.showStart();
  return app;
}

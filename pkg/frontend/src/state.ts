/** Pure session-state transitions; every statistic is a verbatim server value. */

import type { EstimateReport, Progress, SessionSummary, Verdict } from "./types.js";

export interface UiSessionState {
  sessionId: string;
  total: number;
  index: number;
  judged: number;
  report: EstimateReport | null;
  converged: boolean;
  /** incremented each time converged flips false -> true */
  convergenceAnnouncements: number;
  selectedVerdict: Verdict | null;
  unsavedChanges: boolean;
  readOnly: boolean;
}

export function initialState(summary: SessionSummary): UiSessionState {
  return {
    sessionId: summary.session_id,
    total: summary.progress.total,
    index: Math.min(summary.progress.cursor, Math.max(summary.progress.total - 1, 0)),
    judged: summary.progress.judged,
    report: null,
    converged: false,
    convergenceAnnouncements: 0,
    selectedVerdict: null,
    unsavedChanges: false,
    readOnly: false,
  };
}

export function withProgress(state: UiSessionState, progress: Progress): UiSessionState {
  // the judged counter never goes backwards, whatever arrives
  return { ...state, total: progress.total, judged: Math.max(state.judged, progress.judged) };
}

export function withReport(state: UiSessionState, report: EstimateReport): UiSessionState {
  const flipped = report.converged && !state.converged;
  return {
    ...state,
    report,
    converged: report.converged,
    convergenceAnnouncements: state.convergenceAnnouncements + (flipped ? 1 : 0),
  };
}

export function withIndex(state: UiSessionState, index: number): UiSessionState {
  if (index < 0 || index >= state.total) return state;
  return { ...state, index, selectedVerdict: null, unsavedChanges: false };
}

export function withSelection(state: UiSessionState, verdict: Verdict): UiSessionState {
  return { ...state, selectedVerdict: verdict, unsavedChanges: true };
}

export function afterSubmit(state: UiSessionState): UiSessionState {
  return { ...state, selectedVerdict: null, unsavedChanges: false };
}

/** The recommended next position is right after the already-judged prefix. */
export function offRecommendedOrder(state: UiSessionState): boolean {
  return state.index !== Math.min(state.judged, state.total - 1);
}

export function formatMoeBadge(report: EstimateReport | null): string {
  if (!report || report.mu_ss === null) {
    return "estimate: n/a (no complete clusters yet)";
  }
  const mu = report.mu_ss.toFixed(3);
  if (report.moe === null) {
    return `estimate: ${mu} ± n/a (${report.n_clusters_judged} clusters)`;
  }
  return (
    `estimate: ${mu} ± ${report.moe.toFixed(4)} ` +
    `(${report.n_clusters_judged} clusters)`
  );
}

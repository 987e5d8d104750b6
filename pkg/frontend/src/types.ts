/** Wire types for the annotation service API. */

export type Verdict = "correct" | "wrong_concept" | "overly_generic";

export const VERDICTS: Verdict[] = ["correct", "wrong_concept", "overly_generic"];

export interface Progress {
  judged: number;
  total: number;
  cursor: number;
}

export interface SessionSummary {
  session_id: string;
  corpus_hash: string;
  design: string;
  epsilon: number;
  alpha: number;
  created_at: string;
  last_saved_at: string;
  progress: Progress;
}

export interface TripleRecord {
  triple_id: string;
  doc_id: string;
  text_span: string;
  label: string;
  location: "title" | "abstract";
  start: number;
  end: number;
  uri: string;
  resource: string;
  names: string[];
  definitions: string[];
  context_text: string;
}

export interface TriplePayload {
  index: number;
  triple_id: string;
  stratum: string;
  cluster_surface: string;
  cluster_size: number;
  triple: TripleRecord;
  progress: Progress;
  existing_verdict: Verdict | null;
}

export interface StratumReport {
  index: number;
  name: string;
  n_clusters: number;
  n_triples: number;
  mu_hat: number | null;
  variance: number | null;
  moe: number | null;
  weight: number;
}

export interface EstimateReport {
  design: string;
  mu_ss: number | null;
  moe: number | null;
  ci_low: number | null;
  ci_high: number | null;
  converged: boolean;
  epsilon: number;
  alpha: number;
  z: number;
  n_triples_judged: number;
  n_clusters_judged: number;
  strata: StratumReport[];
}

export interface SubmitResponse {
  accepted: boolean;
  triple_id: string;
  progress: Progress;
  converged: boolean;
  report: EstimateReport;
}

export interface JudgmentRecord {
  triple_id: string;
  verdict: Verdict;
  elapsed_seconds: number;
  annotator_id: string;
  submitted_at: string;
}

export interface JudgmentsDoc {
  session_id: string;
  corpus_hash: string;
  judgments: JudgmentRecord[];
}

export interface ImportResponse {
  imported: number;
  progress: Progress;
  report: EstimateReport;
}

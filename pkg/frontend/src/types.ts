/** Payload shapes of the study service API (the single source of truth:
 * the UI renders these verbatim and never derives statistics locally). */

export type PairLabel = "Support" | "Refute" | "NotEnoughInfo";
export type Verdict = "Fake" | "Legit";

export const PAIR_LABELS: readonly PairLabel[] = [
  "Support",
  "Refute",
  "NotEnoughInfo",
];
export const VERDICTS: readonly Verdict[] = ["Fake", "Legit"];

export interface ArticleView {
  id: string;
  title: string;
  content: string;
  url: string;
  source_domain: string;
}

export interface EvidenceView {
  url: string;
  title: string;
  content: string;
  language: string;
  position: number;
  source_domain: string;
  /** present when the study was created with a rank table attached */
  source_rank?: number;
}

export interface TaskPayload {
  task_id: string;
  article: ArticleView;
  evidence: EvidenceView;
  translation: string | null;
}

export type NextStep =
  | { kind: "pair"; task: TaskPayload }
  | { kind: "verdict"; article: ArticleView }
  | { kind: "done" };

export interface ProgressPayload {
  completed: number;
  total: number;
  per_annotator: Record<
    string,
    {
      labels_done: number;
      labels_total: number;
      verdicts_done: number;
      verdicts_total: number;
    }
  >;
}

export type AnswerCounts = Record<PairLabel, number>;

export interface StatsPayload {
  alpha: number | null;
  accuracy: number | null;
  distributions: Record<string, Record<string, AnswerCounts>>;
  majority: Record<
    string,
    { pairs: Record<string, string>; verdict: string | null }
  >;
  n_label_records: number;
  n_verdict_records: number;
}

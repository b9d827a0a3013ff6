import type { StudyApiClient } from "./api.js";
import type {
  ArticleView,
  PairLabel,
  TaskPayload,
  Verdict,
} from "./types.js";

export type Phase = "idle" | "loading" | "pair" | "verdict" | "done" | "error";

export interface SessionState {
  phase: Phase;
  task: TaskPayload | null;
  article: ArticleView | null;
  selection: PairLabel | null;
  verdictSelection: Verdict | null;
  submitting: boolean;
  error: string | null;
  labelsSubmitted: number;
  verdictsSubmitted: number;
}

const initialState: SessionState = {
  phase: "idle",
  task: null,
  article: null,
  selection: null,
  verdictSelection: null,
  submitting: false,
  error: null,
  labelsSubmitted: 0,
  verdictsSubmitted: 0,
};

/**
 * One annotator's task queue: fetch the next step, hold the current
 * selection, submit, advance.  Submission is disabled until a label is
 * chosen and while a request is in flight, so a double click cannot post
 * twice; the (task, annotator) keying on the server makes a replay
 * harmless anyway.
 */
export class AnnotatorSession {
  private state: SessionState = { ...initialState };
  private listeners: Array<(state: SessionState) => void> = [];

  constructor(
    private readonly client: StudyApiClient,
    readonly annotatorId: string,
  ) {}

  getState(): SessionState {
    return this.state;
  }

  onChange(listener: (state: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private set(update: Partial<SessionState>): void {
    this.state = { ...this.state, ...update };
    for (const listener of this.listeners) listener(this.state);
  }

  async start(): Promise<void> {
    await this.advance();
  }

  private async advance(): Promise<void> {
    this.set({
      phase: "loading",
      task: null,
      article: null,
      selection: null,
      verdictSelection: null,
      submitting: false,
      error: null,
    });
    try {
      const step = await this.client.nextTask(this.annotatorId);
      if (step.kind === "pair") {
        this.set({ phase: "pair", task: step.task });
      } else if (step.kind === "verdict") {
        this.set({ phase: "verdict", article: step.article });
      } else {
        this.set({ phase: "done" });
      }
    } catch (error) {
      this.set({ phase: "error", error: String(error) });
    }
  }

  select(label: PairLabel): void {
    if (this.state.phase !== "pair" || this.state.submitting) return;
    this.set({ selection: label });
  }

  selectVerdict(verdict: Verdict): void {
    if (this.state.phase !== "verdict" || this.state.submitting) return;
    this.set({ verdictSelection: verdict });
  }

  get canSubmit(): boolean {
    if (this.state.submitting) return false;
    if (this.state.phase === "pair") return this.state.selection !== null;
    if (this.state.phase === "verdict")
      return this.state.verdictSelection !== null;
    return false;
  }

  /** Post the current selection; on success the next task loads. */
  async submit(): Promise<void> {
    if (!this.canSubmit) return;
    const { phase, task, article, selection, verdictSelection } = this.state;
    this.set({ submitting: true, error: null });
    try {
      if (phase === "pair" && task && selection) {
        await this.client.submitLabel(task.task_id, this.annotatorId, selection);
        this.set({ labelsSubmitted: this.state.labelsSubmitted + 1 });
      } else if (phase === "verdict" && article && verdictSelection) {
        await this.client.submitVerdict(
          article.id,
          this.annotatorId,
          verdictSelection,
        );
        this.set({ verdictsSubmitted: this.state.verdictsSubmitted + 1 });
      } else {
        this.set({ submitting: false });
        return;
      }
      await this.advance();
    } catch (error) {
      // keep the current task on screen so the annotator can retry
      this.set({ submitting: false, error: String(error) });
    }
  }

  async retry(): Promise<void> {
    if (this.state.phase === "error") {
      await this.advance();
    } else {
      await this.submit();
    }
  }

  /** Scripted completion used by tests and demos: label every pair with
   * `chooseLabel` and close each article with `chooseVerdict`. */
  async runScripted(
    chooseLabel: (task: TaskPayload) => PairLabel,
    chooseVerdict: (article: ArticleView) => Verdict,
    maxSteps = 10_000,
  ): Promise<void> {
    await this.start();
    for (let step = 0; step < maxSteps; step++) {
      const state = this.state;
      if (state.phase === "pair" && state.task) {
        this.select(chooseLabel(state.task));
        await this.submit();
      } else if (state.phase === "verdict" && state.article) {
        this.selectVerdict(chooseVerdict(state.article));
        await this.submit();
      } else if (state.phase === "done") {
        return;
      } else {
        throw new Error(`session stuck in phase ${state.phase}: ${state.error}`);
      }
    }
    throw new Error("scripted session exceeded step budget");
  }
}

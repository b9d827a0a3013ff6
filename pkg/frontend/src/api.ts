import type {
  NextStep,
  PairLabel,
  ProgressPayload,
  StatsPayload,
  Verdict,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ClientOptions {
  /** retries per request on network failure (not on HTTP error statuses) */
  retries?: number;
  fetchImpl?: typeof fetch;
}

/** Thin typed client for the study service. */
export class StudyApiClient {
  private readonly base: string;
  private readonly retries: number;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl: string, studyId: string, options: ClientOptions = {}) {
    this.base = `${baseUrl.replace(/\/+$/, "")}/study/${studyId}`;
    this.retries = options.retries ?? 1;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      let response: Response;
      try {
        response = await this.fetchImpl(`${this.base}${path}`, init);
      } catch (error) {
        lastError = error; // network failure: retry
        continue;
      }
      if (!response.ok) {
        let detail = "";
        try {
          detail = ((await response.json()) as { error?: string }).error ?? "";
        } catch {
          // non-JSON error body
        }
        throw new ApiError(
          detail || `request failed with status ${response.status}`,
          response.status,
        );
      }
      return (await response.json()) as T;
    }
    throw new ApiError(`network failure: ${String(lastError)}`);
  }

  nextTask(annotatorId: string): Promise<NextStep> {
    return this.request<NextStep>(
      `/next-task?annotator=${encodeURIComponent(annotatorId)}`,
    );
  }

  submitLabel(
    taskId: string,
    annotatorId: string,
    label: PairLabel,
  ): Promise<{ ok: boolean; task_id: string }> {
    return this.request(`/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        task_id: taskId,
        annotator_id: annotatorId,
        label,
      }),
    });
  }

  submitVerdict(
    articleId: string,
    annotatorId: string,
    verdict: Verdict,
  ): Promise<{ ok: boolean; article_id: string }> {
    return this.request(`/verdicts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        article_id: articleId,
        annotator_id: annotatorId,
        verdict,
      }),
    });
  }

  stats(): Promise<StatsPayload> {
    return this.request<StatsPayload>(`/stats`);
  }

  progress(): Promise<ProgressPayload> {
    return this.request<ProgressPayload>(`/progress`);
  }
}

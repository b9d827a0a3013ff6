import { describe, expect, it } from "vitest";

import { AnnotatorSession } from "../src/session.js";
import type { StudyApiClient } from "../src/api.js";
import type { NextStep, PairLabel, TaskPayload, Verdict } from "../src/types.js";

function makeTask(articleId: string, lang: string, pos: number): TaskPayload {
  return {
    task_id: `${articleId}:${lang}:${pos}`,
    article: {
      id: articleId,
      title: `Article ${articleId}`,
      content: "",
      url: `https://o.example/${articleId}`,
      source_domain: "o.example",
    },
    evidence: {
      url: `https://e.example/${lang}/${pos}`,
      title: `Evidence ${lang} ${pos}`,
      content: "",
      language: lang,
      position: pos,
      source_domain: "e.example",
    },
    translation: lang === "en" ? null : "translated",
  };
}

/** In-memory stand-in mirroring the service's queue semantics. */
class FakeClient {
  labels = new Map<string, PairLabel>();
  verdicts = new Map<string, Verdict>();
  submitCalls = 0;
  failNextSubmit = false;
  private readonly articles = ["s1", "s2"];
  private readonly tasks: TaskPayload[] = this.articles.flatMap((a) =>
    ["en", "fr"].flatMap((lang) =>
      [1, 2].map((pos) => makeTask(a, lang, pos)),
    ),
  );

  async nextTask(annotator: string): Promise<NextStep> {
    for (const articleId of this.articles) {
      for (const task of this.tasks.filter((t) => t.article.id === articleId)) {
        if (!this.labels.has(`${task.task_id}:${annotator}`)) {
          return { kind: "pair", task };
        }
      }
      if (!this.verdicts.has(`${articleId}:${annotator}`)) {
        const article = this.tasks.find((t) => t.article.id === articleId);
        if (!article) throw new Error("missing article");
        return { kind: "verdict", article: article.article };
      }
    }
    return { kind: "done" };
  }

  async submitLabel(taskId: string, annotator: string, label: PairLabel) {
    this.submitCalls += 1;
    if (this.failNextSubmit) {
      this.failNextSubmit = false;
      throw new Error("transient failure");
    }
    this.labels.set(`${taskId}:${annotator}`, label);
    return { ok: true, task_id: taskId };
  }

  async submitVerdict(articleId: string, annotator: string, verdict: Verdict) {
    this.verdicts.set(`${articleId}:${annotator}`, verdict);
    return { ok: true, article_id: articleId };
  }

  asClient(): StudyApiClient {
    return this as unknown as StudyApiClient;
  }
}

describe("AnnotatorSession", () => {
  it("walks pairs, unlocks the verdict after all pairs, then advances", async () => {
    const fake = new FakeClient();
    const session = new AnnotatorSession(fake.asClient(), "ann1");
    await session.start();

    const phases: string[] = [];
    for (let i = 0; i < 4; i++) {
      const state = session.getState();
      phases.push(state.phase);
      expect(state.phase).toBe("pair");
      expect(state.task?.article.id).toBe("s1");
      session.select("Support");
      await session.submit();
    }
    // four pairs of s1 labeled; the verdict form unlocks before s2 tasks
    expect(session.getState().phase).toBe("verdict");
    expect(session.getState().article?.id).toBe("s1");
    session.selectVerdict("Legit");
    await session.submit();
    expect(session.getState().phase).toBe("pair");
    expect(session.getState().task?.article.id).toBe("s2");
  });

  it("will not submit without a selection", async () => {
    const fake = new FakeClient();
    const session = new AnnotatorSession(fake.asClient(), "ann1");
    await session.start();
    expect(session.canSubmit).toBe(false);
    await session.submit();
    expect(fake.submitCalls).toBe(0);
    session.select("Refute");
    expect(session.canSubmit).toBe(true);
  });

  it("guards against double submission of the same task", async () => {
    const fake = new FakeClient();
    const session = new AnnotatorSession(fake.asClient(), "ann1");
    await session.start();
    session.select("Support");
    await Promise.all([session.submit(), session.submit()]);
    expect(fake.submitCalls).toBe(1);
  });

  it("keeps the task on screen after a failed submit and can retry", async () => {
    const fake = new FakeClient();
    const session = new AnnotatorSession(fake.asClient(), "ann1");
    await session.start();
    const taskId = session.getState().task?.task_id;
    fake.failNextSubmit = true;
    session.select("Support");
    await session.submit();
    const state = session.getState();
    expect(state.phase).toBe("pair");
    expect(state.task?.task_id).toBe(taskId);
    expect(state.error).toContain("transient failure");
    await session.retry();
    expect(session.getState().task?.task_id).not.toBe(taskId);
  });

  it("completes a scripted run and reports counts", async () => {
    const fake = new FakeClient();
    const session = new AnnotatorSession(fake.asClient(), "ann2");
    await session.runScripted(
      (task) => (task.article.id === "s1" ? "Support" : "Refute"),
      (article) => (article.id === "s1" ? "Legit" : "Fake"),
    );
    const state = session.getState();
    expect(state.phase).toBe("done");
    expect(state.labelsSubmitted).toBe(8);
    expect(state.verdictsSubmitted).toBe(2);
    expect(fake.verdicts.get("s1:ann2")).toBe("Legit");
    expect(fake.verdicts.get("s2:ann2")).toBe("Fake");
  });
});

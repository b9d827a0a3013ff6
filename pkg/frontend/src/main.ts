import { StudyApiClient } from "./api.js";
import { AnnotatorSession } from "./session.js";
import type { PairLabel, Verdict } from "./types.js";
import { renderApp, renderProgress, renderStats } from "./views.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

export function bootstrap(): void {
  const api = param("api", window.location.origin);
  const studyId = param("study", "study");
  const annotator = param("annotator", "");
  const app = document.getElementById("app");
  const side = document.getElementById("side");
  if (!app) throw new Error("missing #app container");
  if (!annotator) {
    app.innerHTML =
      "<p>Pass <code>?annotator=&lt;id&gt;</code> (and optionally " +
      "<code>study</code>, <code>api</code>) in the URL.</p>";
    return;
  }

  const client = new StudyApiClient(api, studyId);
  const session = new AnnotatorSession(client, annotator);

  const refreshSide = async () => {
    if (!side) return;
    try {
      const [progress, stats] = await Promise.all([
        client.progress(),
        client.stats(),
      ]);
      side.innerHTML = renderProgress(progress) + renderStats(stats);
    } catch {
      side.innerHTML = "<p>progress unavailable</p>";
    }
  };

  session.onChange((state) => {
    app.innerHTML = renderApp(state);
    if (state.phase === "pair" || state.phase === "done") void refreshSide();
  });

  app.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset["action"];
    if (action === "submit-label" || action === "submit-verdict") {
      void session.submit();
    } else if (action === "retry") {
      void session.retry();
    }
  });
  app.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset["action"] === "select-label") {
      session.select(target.value as PairLabel);
      app.innerHTML = renderApp(session.getState());
    } else if (target.dataset["action"] === "select-verdict") {
      session.selectVerdict(target.value as Verdict);
      app.innerHTML = renderApp(session.getState());
    }
  });

  void session.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}

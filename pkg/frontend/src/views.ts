import type { SessionState } from "./session.js";
import type {
  AnswerCounts,
  PairLabel,
  ProgressPayload,
  StatsPayload,
  TaskPayload,
} from "./types.js";
import { PAIR_LABELS, VERDICTS } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const LABEL_CAPTIONS: Record<PairLabel, string> = {
  Support: "Supports the original news",
  Refute: "Refutes or contradicts it",
  NotEnoughInfo: "Not enough information",
};

function sourceLine(task: TaskPayload): string {
  const rank =
    task.evidence.source_rank !== undefined
      ? ` · rank ${task.evidence.source_rank}`
      : "";
  return `<a href="${escapeHtml(task.evidence.url)}" target="_blank" rel="noopener">open source</a>
    <span class="domain">${escapeHtml(task.evidence.source_domain)}${rank}</span>`;
}

export function renderPair(state: SessionState): string {
  const task = state.task;
  if (!task) return "";
  const translation =
    task.translation !== null
      ? `<p class="translation"><strong>English translation:</strong> ${escapeHtml(task.translation)}</p>`
      : "";
  const options = PAIR_LABELS.map((label) => {
    const checked = state.selection === label ? " checked" : "";
    return `<label class="option"><input type="radio" name="pair-label" value="${label}"${checked} data-action="select-label"> ${LABEL_CAPTIONS[label]}</label>`;
  }).join("\n");
  const disabled = state.selection === null || state.submitting;
  return `
<section class="original">
  <h2>Original news</h2>
  <p class="title">${escapeHtml(task.article.title)}</p>
  <p class="body">${escapeHtml(task.article.content)}</p>
  <a href="${escapeHtml(task.article.url)}" target="_blank" rel="noopener">source: ${escapeHtml(task.article.source_domain)}</a>
</section>
<section class="evidence" data-task-id="${escapeHtml(task.task_id)}">
  <h2>Search result (${escapeHtml(task.evidence.language)} #${task.evidence.position})</h2>
  <p class="title">${escapeHtml(task.evidence.title)}</p>
  ${translation}
  <p class="body">${escapeHtml(task.evidence.content)}</p>
  ${sourceLine(task)}
</section>
<form class="labels">
${options}
<button type="button" data-action="submit-label"${disabled ? " disabled" : ""}>Submit label</button>
</form>`;
}

export function renderVerdict(state: SessionState): string {
  const article = state.article;
  if (!article) return "";
  const options = VERDICTS.map((verdict) => {
    const checked = state.verdictSelection === verdict ? " checked" : "";
    return `<label class="option"><input type="radio" name="verdict" value="${verdict}"${checked} data-action="select-verdict"> ${verdict}</label>`;
  }).join("\n");
  const disabled = state.verdictSelection === null || state.submitting;
  return `
<section class="verdict" data-article-id="${escapeHtml(article.id)}">
  <h2>All pairs labeled. Is the original news fake or legit?</h2>
  <p class="title">${escapeHtml(article.title)}</p>
  <form>
${options}
<button type="button" data-action="submit-verdict"${disabled ? " disabled" : ""}>Submit verdict</button>
  </form>
</section>`;
}

export function renderDone(state: SessionState): string {
  return `<section class="done"><h2>All assignments complete</h2>
<p>${state.labelsSubmitted} labels and ${state.verdictsSubmitted} verdicts submitted this session.</p></section>`;
}

export function renderError(state: SessionState): string {
  return `<section class="error"><h2>Something went wrong</h2>
<p>${escapeHtml(state.error ?? "unknown error")}</p>
<button type="button" data-action="retry">Retry</button></section>`;
}

export function renderApp(state: SessionState): string {
  switch (state.phase) {
    case "pair":
      return renderPair(state);
    case "verdict":
      return renderVerdict(state);
    case "done":
      return renderDone(state);
    case "error":
      return renderError(state);
    default:
      return `<section class="loading"><p>Loading…</p></section>`;
  }
}

export function renderProgress(progress: ProgressPayload): string {
  const rows = Object.entries(progress.per_annotator)
    .map(
      ([annotator, p]) =>
        `<tr><td>${escapeHtml(annotator)}</td><td>${p.labels_done}/${p.labels_total}</td><td>${p.verdicts_done}/${p.verdicts_total}</td></tr>`,
    )
    .join("\n");
  return `
<table class="progress">
  <thead><tr><th>Annotator</th><th>Labels</th><th>Verdicts</th></tr></thead>
  <tbody>
${rows}
  </tbody>
</table>
<p class="total">Overall: ${progress.completed}/${progress.total}</p>`;
}

function answerCells(counts: AnswerCounts): string {
  return PAIR_LABELS.map((label) => `<td>${counts[label] ?? 0}</td>`).join("");
}

/** Per-language answer distribution table split by gold class, rendered
 * exactly as the service reports it. */
export function renderStats(stats: StatsPayload): string {
  const alpha =
    stats.alpha === null ? "not yet computable" : stats.alpha.toFixed(3);
  const accuracy =
    stats.accuracy === null ? "no verdicts yet" : stats.accuracy.toFixed(3);
  const sections = Object.entries(stats.distributions)
    .map(([gold, languages]) => {
      const rows = Object.entries(languages)
        .map(
          ([lang, counts]) =>
            `<tr><td>${escapeHtml(lang)}</td>${answerCells(counts)}</tr>`,
        )
        .join("\n");
      return `
<h3>${escapeHtml(gold)} articles</h3>
<table class="distribution" data-gold="${escapeHtml(gold)}">
  <thead><tr><th>Language</th><th>Support</th><th>Refute</th><th>NotEnoughInfo</th></tr></thead>
  <tbody>
${rows}
  </tbody>
</table>`;
    })
    .join("\n");
  return `
<section class="stats">
  <p>Krippendorff's alpha: <strong>${alpha}</strong></p>
  <p>Annotator verdict accuracy: <strong>${accuracy}</strong></p>
${sections}
</section>`;
}

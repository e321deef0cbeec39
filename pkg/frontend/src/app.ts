/** Wires the static page to the API client. Exported separately from
 * the entry point so tests can drive a document of their own. */

import { isAbortError, type QueryApi } from "./api.js";
import { renderError, renderResults } from "./render.js";

function required<T extends HTMLElement>(doc: Document, id: string): T {
  const element = doc.getElementById(id);
  if (element === null) {
    throw new Error(`missing required element #${id}`);
  }
  return element as T;
}

export function setupApp(doc: Document, api: QueryApi): void {
  const form = required<HTMLFormElement>(doc, "query-form");
  const question = required<HTMLInputElement>(doc, "question");
  const topK = required<HTMLSelectElement>(doc, "top-k");
  const dateFrom = required<HTMLInputElement>(doc, "date-from");
  const dateTo = required<HTMLInputElement>(doc, "date-to");
  const results = required<HTMLElement>(doc, "results");
  const errorBanner = required<HTMLElement>(doc, "error-banner");
  const status = required<HTMLElement>(doc, "status");

  async function runQuery(): Promise<void> {
    const text = question.value.trim();
    if (!text) return;
    status.textContent = "Searching…";
    try {
      const response = await api.query({
        question: text,
        topK: Number.parseInt(topK.value, 10),
        dateFrom: dateFrom.value || undefined,
        dateTo: dateTo.value || undefined,
      });
      renderResults(results, response);
      renderError(errorBanner, null);
      const count = response.documents.length;
      status.textContent = `${count} document${count === 1 ? "" : "s"}`;
    } catch (error) {
      // A superseded request: the newer one owns the UI.
      if (isAbortError(error)) return;
      const message = error instanceof Error
        ? error.message
        : "The request failed.";
      renderError(errorBanner, message);
      status.textContent = "";
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void runQuery();
  });

  void api
    .health()
    .then((health) => {
      status.textContent =
        `Ready: ${health.corpus_size} passages, status ${health.status}.`;
    })
    .catch(() => {
      status.textContent = "The service is not reachable.";
    });
}

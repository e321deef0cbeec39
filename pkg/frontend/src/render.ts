/** DOM construction for query results. Everything is built with text
 * nodes, never markup injection, and highlight ranges are applied
 * exactly as the server sent them; the client re-ranks nothing. */

import type { DocumentResult, Highlight, QueryResponse } from "./api.js";

export function highlightedSnippet(
  doc: Document,
  snippet: string,
  highlights: Highlight[],
): DocumentFragment {
  const fragment = doc.createDocumentFragment();
  const ordered = [...highlights].sort((a, b) => a.start - b.start);
  let cursor = 0;
  for (const highlight of ordered) {
    const start = Math.max(cursor, highlight.start);
    const end = Math.min(snippet.length, highlight.end);
    if (end <= start) continue;
    if (start > cursor) {
      fragment.append(doc.createTextNode(snippet.slice(cursor, start)));
    }
    const mark = doc.createElement("mark");
    mark.className = "answer-highlight";
    mark.textContent = snippet.slice(start, end);
    mark.title = `confidence ${highlight.confidence.toFixed(2)}`;
    fragment.append(mark);
    cursor = end;
  }
  if (cursor < snippet.length) {
    fragment.append(doc.createTextNode(snippet.slice(cursor)));
  }
  return fragment;
}

function metaLine(result: DocumentResult): string {
  const date = result.publish_date ?? "undated";
  return result.journal ? `${result.journal} · ${date}` : date;
}

export function documentCard(
  doc: Document,
  result: DocumentResult,
): HTMLElement {
  const card = doc.createElement("article");
  card.className = "card collapsed";
  card.dataset["chunkId"] = result.chunk_id;

  const header = doc.createElement("button");
  header.type = "button";
  header.className = "card-header";
  const title = doc.createElement("span");
  title.className = "card-title";
  title.textContent = result.title || result.chunk_id;
  const meta = doc.createElement("span");
  meta.className = "card-meta";
  meta.textContent = metaLine(result);
  header.append(title, meta);
  if (typeof result.doc_confidence === "number") {
    const confidence = doc.createElement("span");
    confidence.className = "card-confidence";
    confidence.textContent = result.doc_confidence.toFixed(2);
    header.append(confidence);
  }
  header.addEventListener("click", () => {
    card.classList.toggle("collapsed");
  });

  const body = doc.createElement("div");
  body.className = "card-body";
  const snippet = doc.createElement("p");
  snippet.className = "snippet";
  snippet.append(highlightedSnippet(doc, result.snippet, result.highlights));
  body.append(snippet);

  card.append(header, body);
  return card;
}

export function renderResults(
  container: HTMLElement,
  response: QueryResponse,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (response.date_filter_relaxed) {
    const banner = doc.createElement("p");
    banner.className = "relaxed-banner";
    banner.textContent =
      "No documents matched the requested date range; showing " +
      "results from the whole corpus instead.";
    container.append(banner);
  }
  if (response.documents.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-note";
    empty.textContent = "No documents found.";
    container.append(empty);
    return;
  }
  for (const result of response.documents) {
    container.append(documentCard(doc, result));
  }
}

export function renderError(
  banner: HTMLElement,
  message: string | null,
): void {
  if (message === null) {
    banner.hidden = true;
    banner.textContent = "";
  } else {
    banner.hidden = false;
    banner.textContent = message;
  }
}

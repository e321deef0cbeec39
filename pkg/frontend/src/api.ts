/** Typed client for the QA service. Only two endpoints exist:
 * POST /api/query and GET /api/health. The client keeps at most one
 * query in flight; submitting a new one aborts its predecessor. */

export interface Highlight {
  start: number;
  end: number;
  text: string;
  confidence: number;
}

export interface RetrievalInfo {
  dense_rank?: number;
  dense_score?: number;
  bm25_rank?: number;
  bm25_score?: number;
  cluster?: number;
}

export interface DocumentResult {
  chunk_id: string;
  title: string;
  journal: string;
  publish_date?: string;
  snippet: string;
  highlights: Highlight[];
  doc_confidence?: number;
  retrieval: RetrievalInfo;
  error?: string;
}

export interface QueryResponse {
  documents: DocumentResult[];
  date_filter_relaxed: boolean;
  stage_timings_ms?: Record<string, number>;
}

export interface HealthResponse {
  status: string;
  corpus_size: number;
  notes: string[];
}

export interface QueryParams {
  question: string;
  topK: number;
  dateFrom?: string;
  dateTo?: string;
}

export interface QueryApi {
  query(params: QueryParams): Promise<QueryResponse>;
  health(): Promise<HealthResponse>;
}

export function isAbortError(error: unknown): boolean {
  // DOMException does not extend Error in every runtime, so the check
  // goes by name alone.
  return (
    typeof error === "object" &&
    error !== null &&
    (error as { name?: unknown }).name === "AbortError"
  );
}

async function errorDetail(response: Response): Promise<string> {
  let detail = `request failed with status ${response.status}`;
  try {
    const data: unknown = await response.json();
    if (
      typeof data === "object" && data !== null &&
      typeof (data as { detail?: unknown }).detail === "string"
    ) {
      detail = (data as { detail: string }).detail;
    }
  } catch {
    // Non-JSON error body; the status line is all we have.
  }
  return detail;
}

export class ApiClient implements QueryApi {
  private inFlight: AbortController | null = null;

  constructor(private readonly baseUrl: string = "") {}

  async query(params: QueryParams): Promise<QueryResponse> {
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const body: Record<string, unknown> = {
      question: params.question,
      top_k: params.topK,
    };
    if (params.dateFrom) body["date_from"] = params.dateFrom;
    if (params.dateTo) body["date_to"] = params.dateTo;
    const response = await fetch(`${this.baseUrl}/api/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal: controller.signal,
    });
    if (this.inFlight === controller) {
      this.inFlight = null;
    }
    if (!response.ok) {
      throw new Error(await errorDetail(response));
    }
    return (await response.json()) as QueryResponse;
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(`${this.baseUrl}/api/health`);
    if (!response.ok) {
      throw new Error(await errorDetail(response));
    }
    return (await response.json()) as HealthResponse;
  }
}

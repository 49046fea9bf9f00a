/** Thin client for the corpus service; it consumes only the /api endpoints. */

import { encodeQueryParam } from "./query.js";
import type { Query, SearchResponse, SpeechDetail, TopTermsResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface ExportResult {
  /** Exact bytes as sent by the service; saved to disk unmodified. */
  bytes: Uint8Array;
  recordCount: number;
  truncated: boolean;
}

async function errorFrom(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) detail = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as T;
  }

  search(query: Query): Promise<SearchResponse> {
    return this.getJson<SearchResponse>(`/api/search?q=${encodeQueryParam(query)}`);
  }

  speech(id: string): Promise<SpeechDetail> {
    return this.getJson<SpeechDetail>(`/api/speech/${encodeURIComponent(id)}`);
  }

  topTerms(n: number): Promise<TopTermsResponse> {
    return this.getJson<TopTermsResponse>(`/api/stats/top-terms?n=${n}`);
  }

  /** Download a subcorpus bundle, keeping the wire bytes untouched. */
  async exportBundle(query: Query, opts: { cap?: number; truncate?: boolean } = {}): Promise<ExportResult> {
    const resp = await fetch(`${this.baseUrl}/api/export`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query, ...opts }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    const bytes = new Uint8Array(await resp.arrayBuffer());
    const bundle = JSON.parse(new TextDecoder().decode(bytes)) as {
      records: unknown[];
      truncated?: boolean;
    };
    return {
      bytes,
      recordCount: bundle.records.length,
      truncated: bundle.truncated === true,
    };
  }
}

/** Discards stale responses: only the most recently issued search may
 * update the view. */
export class SearchSequencer {
  private counter = 0;

  issue(): number {
    this.counter += 1;
    return this.counter;
  }

  isCurrent(seq: number): boolean {
    return seq === this.counter;
  }
}

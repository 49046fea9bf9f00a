import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, SearchSequencer } from "../src/api.js";
import type { Query } from "../src/types.js";

const QUERY: Query = {
  clauses: [
    { op: "AND", field: "legislative_period", value: "19" },
    { op: "NOT", field: "party", value: "CDU" },
  ],
  sort: "relevance",
  page: 1,
  page_size: 20,
};

afterEach(() => {
  vi.unstubAllGlobals();
});

function stubFetch(handler: (url: string, init?: RequestInit) => Response | Promise<Response>) {
  const spy = vi.fn(handler);
  vi.stubGlobal("fetch", spy);
  return spy;
}

describe("ApiClient.search", () => {
  it("sends the serialized query verbatim in the q parameter", async () => {
    const spy = stubFetch(() =>
      new Response(JSON.stringify({ total: 0, page: 1, page_size: 20, hits: [] })),
    );
    await new ApiClient().search(QUERY);
    const url = spy.mock.calls[0]![0] as string;
    const encoded = url.split("?q=")[1]!;
    expect(JSON.parse(decodeURIComponent(encoded))).toEqual(QUERY);
  });

  it("raises ApiError with the server detail", async () => {
    stubFetch(() => new Response(JSON.stringify({ error: "unknown field" }), { status: 400 }));
    await expect(new ApiClient().search(QUERY)).rejects.toThrowError(ApiError);
    stubFetch(() => new Response("oops", { status: 503, statusText: "Service Unavailable" }));
    await expect(new ApiClient().search(QUERY)).rejects.toMatchObject({ status: 503 });
  });
});

describe("ApiClient.exportBundle", () => {
  const bundleBytes = new TextEncoder().encode(
    JSON.stringify({ format_version: 1, query: QUERY, generated_at: "t", records: [{ id: "a" }, { id: "b" }] }),
  );

  it("returns the exact wire bytes plus parsed metadata", async () => {
    stubFetch(() => new Response(bundleBytes.slice().buffer as ArrayBuffer));
    const result = await new ApiClient().exportBundle(QUERY);
    expect(Array.from(result.bytes)).toEqual(Array.from(bundleBytes));
    expect(result.recordCount).toBe(2);
    expect(result.truncated).toBe(false);
  });

  it("posts query, cap, and truncate flags", async () => {
    const spy = stubFetch(() => new Response(bundleBytes.slice().buffer as ArrayBuffer));
    await new ApiClient().exportBundle(QUERY, { cap: 5, truncate: true });
    const init = spy.mock.calls[0]![1]!;
    expect(JSON.parse(init.body as string)).toEqual({ query: QUERY, cap: 5, truncate: true });
  });

  it("surfaces the truncation marker", async () => {
    const truncated = new TextEncoder().encode(
      JSON.stringify({ format_version: 1, query: QUERY, generated_at: "t", truncated: true, records: [{ id: "a" }] }),
    );
    stubFetch(() => new Response(truncated.slice().buffer as ArrayBuffer));
    const result = await new ApiClient().exportBundle(QUERY, { truncate: true });
    expect(result.truncated).toBe(true);
    expect(result.recordCount).toBe(1);
  });

  it("maps 413 to ApiError", async () => {
    stubFetch(() => new Response(JSON.stringify({ error: "cap exceeded" }), { status: 413 }));
    await expect(new ApiClient().exportBundle(QUERY)).rejects.toMatchObject({ status: 413 });
  });
});

describe("SearchSequencer", () => {
  it("only the latest issue is current", () => {
    const seq = new SearchSequencer();
    const first = seq.issue();
    const second = seq.issue();
    expect(seq.isCurrent(first)).toBe(false);
    expect(seq.isCurrent(second)).toBe(true);
  });
});

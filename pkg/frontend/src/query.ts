/** Query construction.
 *
 * The UI never invents query semantics of its own: the serialized
 * clause list is exactly the visible rows, positionally. All boolean
 * behavior lives server-side.
 */

import type { Operator, Query, QueryClause, SortMode } from "./types.js";

export interface ClauseRow {
  op: Operator;
  field: string;
  value: string;
}

export const OPERATORS: Operator[] = ["AND", "OR", "NOT"];

export const FIELDS = [
  "all",
  "full_text",
  "speaker",
  "party",
  "legislative_period",
  "topic",
  "date",
  "role",
  "session_number",
  "agenda_number",
  "has_call_to_order",
  "has_interjection",
] as const;

export const DEFAULT_PAGE_SIZE = 20;

export function emptyRow(): ClauseRow {
  return { op: "AND", field: "full_text", value: "" };
}

/** Rows map one-to-one onto clauses, preserving order and content. */
export function serializeRows(
  rows: ClauseRow[],
  sort: SortMode,
  page = 1,
  pageSize = DEFAULT_PAGE_SIZE,
): Query {
  const clauses: QueryClause[] = rows.map((row) => ({
    op: row.op,
    field: row.field,
    value: row.value,
  }));
  return { clauses, sort, page, page_size: pageSize };
}

/** Basic search: one clause against every indexed field; empty input
 * means match-all. */
export function basicQuery(
  input: string,
  sort: SortMode,
  page = 1,
  pageSize = DEFAULT_PAGE_SIZE,
): Query {
  const trimmed = input.trim();
  const clauses: QueryClause[] = trimmed === "" ? [] : [{ op: "AND", field: "all", value: trimmed }];
  return { clauses, sort, page, page_size: pageSize };
}

/** Submission is blocked while any row has an empty value. */
export function rowsSubmittable(rows: ClauseRow[]): boolean {
  return rows.every((row) => row.value.trim() !== "");
}

export function encodeQueryParam(query: Query): string {
  return encodeURIComponent(JSON.stringify(query));
}

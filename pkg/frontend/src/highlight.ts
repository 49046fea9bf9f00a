/** Span-to-segment conversion for annotated text display.
 *
 * Server span offsets count Unicode code points; JavaScript strings
 * index UTF-16 units. Every offset is converted explicitly, so
 * highlights stay exact even past the basic multilingual plane. The UI
 * performs no re-analysis: segments carry the served spans verbatim.
 */

import type { RecordAnnotation } from "./types.js";

/** Map a code-point offset to the corresponding UTF-16 index. */
export function codePointToUtf16(text: string, cpOffset: number): number {
  let cp = 0;
  let utf16 = 0;
  for (const ch of text) {
    if (cp >= cpOffset) break;
    cp += 1;
    utf16 += ch.length;
  }
  return utf16;
}

export function sliceByCodePoints(text: string, start: number, end: number): string {
  return Array.from(text).slice(start, end).join("");
}

export interface Segment {
  /** Code-point range [start, end) this segment covers. */
  start: number;
  end: number;
  text: string;
  /** Served spans covering the whole segment (may be several). */
  spans: RecordAnnotation[];
}

/** Split text into contiguous segments at span boundaries.
 *
 * Overlapping spans (a party mention inside an entity span, say) are
 * all attached to the segments they cover. Concatenating segment texts
 * reproduces the input exactly.
 */
export function buildSegments(text: string, spans: RecordAnnotation[]): Segment[] {
  const totalCp = Array.from(text).length;
  const boundaries = new Set<number>([0, totalCp]);
  for (const span of spans) {
    boundaries.add(Math.max(0, Math.min(span.start, totalCp)));
    boundaries.add(Math.max(0, Math.min(span.end, totalCp)));
  }
  const ordered = Array.from(boundaries).sort((a, b) => a - b);

  // Single monotone walk converting every boundary to a UTF-16 index.
  const utf16At = new Map<number, number>();
  let cp = 0;
  let utf16 = 0;
  let next = 0;
  for (const ch of text) {
    while (next < ordered.length && ordered[next] === cp) {
      utf16At.set(cp, utf16);
      next += 1;
    }
    cp += 1;
    utf16 += ch.length;
  }
  while (next < ordered.length) {
    utf16At.set(ordered[next] as number, utf16);
    next += 1;
  }

  const segments: Segment[] = [];
  for (let i = 0; i + 1 < ordered.length; i += 1) {
    const start = ordered[i] as number;
    const end = ordered[i + 1] as number;
    if (start === end) continue;
    const covering = spans.filter((s) => s.start <= start && end <= s.end);
    segments.push({
      start,
      end,
      text: text.slice(utf16At.get(start) as number, utf16At.get(end) as number),
      spans: covering,
    });
  }
  return segments;
}

/** The spans shown for one "Speech Text" dropdown choice. */
export function spansForView(annotations: RecordAnnotation[], view: string): RecordAnnotation[] {
  if (view === "plain") return [];
  if (view === "overlay") {
    return annotations.filter((a) => a.kind === "call_to_order" || a.kind === "interjection");
  }
  return annotations.filter((a) => a.kind === "ner_entity" && a.annotator === view);
}

/** Search portal UI: basic bar, advanced clause rows, results with
 * expandable metadata + annotation views, and subcorpus download.
 *
 * State flows one way: handlers update state, render() redraws. At most
 * one search is honored at a time; responses from superseded queries
 * are dropped by sequence number, and errors surface as a banner while
 * prior results stay on screen.
 */

import { ApiClient, ApiError, SearchSequencer } from "./api.js";
import { buildSegments, spansForView } from "./highlight.js";
import {
  ClauseRow,
  FIELDS,
  OPERATORS,
  basicQuery,
  emptyRow,
  rowsSubmittable,
  serializeRows,
} from "./query.js";
import type { Query, SearchResponse, SortMode, SpeechDetail } from "./types.js";

interface AppState {
  mode: "basic" | "advanced";
  basicInput: string;
  rows: ClauseRow[];
  sort: SortMode;
  page: number;
  results: SearchResponse | null;
  activeQuery: Query | null;
  error: string | null;
  notice: string | null;
  openDetail: string | null;
  detailView: string;
}

export class App {
  readonly state: AppState = {
    mode: "basic",
    basicInput: "",
    rows: [emptyRow()],
    sort: "relevance",
    page: 1,
    results: null,
    activeQuery: null,
    error: null,
    notice: null,
    openDetail: null,
    detailView: "plain",
  };

  private readonly sequencer = new SearchSequencer();
  private readonly detailCache = new Map<string, SpeechDetail>();

  constructor(
    readonly root: HTMLElement,
    readonly client: ApiClient,
    readonly saveFile: (bytes: Uint8Array, filename: string) => void = downloadViaAnchor,
  ) {
    this.render();
  }

  /** The query the visible controls describe, serialized positionally. */
  currentQuery(): Query {
    if (this.state.mode === "basic") {
      return basicQuery(this.state.basicInput, this.state.sort, this.state.page);
    }
    return serializeRows(this.state.rows, this.state.sort, this.state.page);
  }

  async runSearch(): Promise<void> {
    const query = this.currentQuery();
    const seq = this.sequencer.issue();
    try {
      const results = await this.client.search(query);
      if (!this.sequencer.isCurrent(seq)) return; // superseded
      this.state.results = results;
      this.state.activeQuery = query;
      this.state.error = null;
    } catch (err) {
      if (!this.sequencer.isCurrent(seq)) return;
      this.state.error = err instanceof ApiError ? err.message : String(err);
      // prior results intentionally retained
    }
    this.render();
  }

  async setSort(sort: SortMode): Promise<void> {
    this.state.sort = sort;
    this.state.page = 1;
    if (this.state.activeQuery) await this.runSearch();
    else this.render();
  }

  async openDetail(id: string): Promise<void> {
    this.state.openDetail = id;
    this.state.detailView = "plain";
    if (!this.detailCache.has(id)) {
      try {
        this.detailCache.set(id, await this.client.speech(id));
      } catch (err) {
        this.state.error = err instanceof ApiError ? err.message : String(err);
      }
    }
    this.render();
  }

  cachedDetail(id: string): SpeechDetail | undefined {
    return this.detailCache.get(id);
  }

  async download(): Promise<void> {
    const query = this.state.activeQuery ?? this.currentQuery();
    try {
      const result = await this.client.exportBundle(query, { truncate: true });
      this.saveFile(result.bytes, "subcorpus.json");
      this.state.notice = result.truncated
        ? `Download enthält ${result.recordCount} Einträge (am Limit gekappt).`
        : `Download enthält ${result.recordCount} Einträge.`;
      this.state.error = null;
    } catch (err) {
      this.state.error = `Export fehlgeschlagen: ${
        err instanceof ApiError ? err.message : String(err)
      }`;
    }
    this.render();
  }

  // -- rendering ----------------------------------------------------------

  render(): void {
    this.root.textContent = "";
    this.root.append(this.renderSearchControls());
    if (this.state.error) {
      const banner = el("div", "banner banner-error");
      banner.textContent = this.state.error;
      const retry = el("button", "retry") as HTMLButtonElement;
      retry.textContent = "Erneut versuchen";
      retry.onclick = () => void this.runSearch();
      banner.append(" ", retry);
      this.root.append(banner);
    }
    if (this.state.notice) {
      const banner = el("div", "banner banner-notice");
      banner.textContent = this.state.notice;
      this.root.append(banner);
    }
    if (this.state.results) this.root.append(this.renderResults(this.state.results));
  }

  private renderSearchControls(): HTMLElement {
    const wrap = el("div", "controls");

    const form = el("form", "basic-form") as HTMLFormElement;
    form.onsubmit = (ev) => {
      ev.preventDefault();
      this.state.page = 1;
      void this.runSearch();
    };
    const input = el("input", "basic-input") as HTMLInputElement;
    input.type = "search";
    input.placeholder = "Suche über alle Felder …";
    input.value = this.state.basicInput;
    input.oninput = () => {
      this.state.basicInput = input.value;
    };
    const submit = el("button", "basic-submit") as HTMLButtonElement;
    submit.type = "submit";
    submit.textContent = "Suchen";
    form.append(input, submit);

    const modeToggle = el("button", "mode-toggle") as HTMLButtonElement;
    modeToggle.type = "button";
    modeToggle.textContent =
      this.state.mode === "basic" ? "Erweiterte Suche" : "Einfache Suche";
    modeToggle.onclick = () => {
      this.state.mode = this.state.mode === "basic" ? "advanced" : "basic";
      this.render();
    };

    const sortWrap = el("div", "sort-toggle");
    for (const [mode, label] of [
      ["relevance", "Relevanz"],
      ["date_asc", "Chronologisch ↑"],
      ["date_desc", "Chronologisch ↓"],
    ] as [SortMode, string][]) {
      const btn = el("button", `sort-${mode}`) as HTMLButtonElement;
      btn.type = "button";
      btn.textContent = label;
      if (this.state.sort === mode) btn.classList.add("active");
      btn.onclick = () => void this.setSort(mode);
      sortWrap.append(btn);
    }

    wrap.append(form, modeToggle, sortWrap);
    if (this.state.mode === "advanced") wrap.append(this.renderRows());
    return wrap;
  }

  private renderRows(): HTMLElement {
    const wrap = el("div", "advanced");
    this.state.rows.forEach((row, i) => {
      const rowEl = el("div", "clause-row");
      rowEl.dataset.row = String(i);

      const opSelect = el("select", "row-op") as HTMLSelectElement;
      for (const op of OPERATORS) opSelect.append(option(op, op));
      opSelect.value = row.op;
      opSelect.onchange = () => {
        row.op = opSelect.value as ClauseRow["op"];
      };

      const fieldSelect = el("select", "row-field") as HTMLSelectElement;
      for (const field of FIELDS) fieldSelect.append(option(field, field));
      fieldSelect.value = row.field;
      fieldSelect.onchange = () => {
        row.field = fieldSelect.value;
      };

      const valueInput = el("input", "row-value") as HTMLInputElement;
      valueInput.value = row.value;
      valueInput.oninput = () => {
        row.value = valueInput.value;
        this.syncSubmittable();
      };

      const remove = el("button", "row-remove") as HTMLButtonElement;
      remove.type = "button";
      remove.textContent = "−";
      remove.onclick = () => {
        this.state.rows.splice(i, 1);
        if (this.state.rows.length === 0) this.state.rows.push(emptyRow());
        this.render();
      };

      rowEl.append(opSelect, fieldSelect, valueInput, remove);
      wrap.append(rowEl);
    });

    const add = el("button", "row-add") as HTMLButtonElement;
    add.type = "button";
    add.textContent = "+ Zeile";
    add.onclick = () => {
      this.state.rows.push(emptyRow());
      this.render();
    };

    const submit = el("button", "advanced-submit") as HTMLButtonElement;
    submit.type = "button";
    submit.textContent = "Erweitert suchen";
    submit.onclick = () => {
      this.state.page = 1;
      void this.runSearch();
    };

    const hint = el("span", "advanced-hint");
    hint.textContent = "Jede Zeile braucht einen Wert.";

    wrap.append(add, submit, hint);
    this.syncSubmittable(wrap);
    return wrap;
  }

  private syncSubmittable(scope: HTMLElement = this.root): void {
    const submit = scope.querySelector<HTMLButtonElement>(".advanced-submit");
    const hint = scope.querySelector<HTMLElement>(".advanced-hint");
    if (!submit || !hint) return;
    const ok = rowsSubmittable(this.state.rows);
    submit.disabled = !ok;
    hint.style.display = ok ? "none" : "inline";
  }

  private renderResults(results: SearchResponse): HTMLElement {
    const wrap = el("div", "results");
    const total = el("div", "total");
    total.textContent = `${results.total} Treffer`;
    const download = el("button", "download") as HTMLButtonElement;
    download.type = "button";
    download.textContent = "Subkorpus als JSON laden";
    download.onclick = () => void this.download();
    wrap.append(total, download);

    for (const hit of results.hits) {
      const item = el("article", "hit");
      item.dataset.id = hit.id;
      const head = el("header", "hit-head");
      head.textContent = `${hit.speaker} ${hit.party ? `(${hit.party})` : ""} — ${hit.date}${
        hit.topic ? ` — ${hit.topic}` : ""
      }`;
      head.onclick = () => void this.openDetail(hit.id);

      const snippet = el("p", "snippet");
      snippet.append(...renderSnippet(hit.snippet.text, hit.snippet.highlights));
      item.append(head, snippet);

      if (this.state.openDetail === hit.id) {
        const detail = this.cachedDetail(hit.id);
        if (detail) item.append(this.renderDetail(detail));
      }
      wrap.append(item);
    }
    return wrap;
  }

  private renderDetail(detail: SpeechDetail): HTMLElement {
    const record = detail.record;
    const panel = el("section", "detail");

    const meta = el("dl", "metadata");
    const entries: [string, string][] = [
      ["Wahlperiode", String(record.legislative_period)],
      ["Sitzung", String(record.session_number)],
      ["Tagesordnungspunkt", `${record.agenda_number} (${record.agenda_type})`],
      ["Beschreibung", record.agenda_description || "—"],
      ["Datum", record.date],
      ["Redner:in", record.speaker.raw_name],
      ["Partei", record.speaker.party.canonical ?? record.speaker.party.raw ?? "—"],
      ["Rolle", record.role],
      ["Thema", record.topic ? record.topic.label : "—"],
      ["Quelle", record.source_uri],
    ];
    for (const [term, value] of entries) {
      const dt = el("dt");
      dt.textContent = term;
      const dd = el("dd");
      dd.textContent = value;
      meta.append(dt, dd);
    }

    const viewSelect = el("select", "view-select") as HTMLSelectElement;
    viewSelect.append(option("plain", "Redetext"));
    for (const annotator of detail.annotators) viewSelect.append(option(annotator, annotator));
    const hasOverlay = record.annotations.some(
      (a) => a.kind === "call_to_order" || a.kind === "interjection",
    );
    if (hasOverlay) viewSelect.append(option("overlay", "Zwischenrufe & Ordnungsrufe"));
    viewSelect.value = this.state.detailView;
    viewSelect.onchange = () => {
      this.state.detailView = viewSelect.value;
      this.render();
    };

    const body = el("div", "speech-text");
    const spans = spansForView(record.annotations, this.state.detailView);
    for (const segment of buildSegments(record.text, spans)) {
      if (segment.spans.length === 0) {
        body.append(document.createTextNode(segment.text));
        continue;
      }
      const mark = el("mark", segment.spans.map((s) => `span-${s.kind}`).join(" "));
      mark.textContent = segment.text;
      mark.dataset.start = String(segment.start);
      mark.dataset.end = String(segment.end);
      const labels = segment.spans
        .map((s) => s.label || s.kind)
        .filter((v, i, all) => all.indexOf(v) === i);
      mark.title = labels.join(", ");
      body.append(mark);
    }

    panel.append(meta, label("Speech Text", viewSelect), body);
    return panel;
  }
}

function renderSnippet(text: string, highlights: [number, number][]): Node[] {
  // Highlight offsets count code points relative to the snippet text.
  const chars = Array.from(text);
  const nodes: Node[] = [];
  let cursor = 0;
  for (const [start, end] of [...highlights].sort((a, b) => a[0] - b[0])) {
    if (start < cursor) continue;
    if (start > cursor) nodes.push(document.createTextNode(chars.slice(cursor, start).join("")));
    const mark = document.createElement("mark");
    mark.textContent = chars.slice(start, end).join("");
    nodes.push(mark);
    cursor = end;
  }
  if (cursor < chars.length) nodes.push(document.createTextNode(chars.slice(cursor).join("")));
  return nodes;
}

function el(tag: string, className = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function option(value: string, text: string): HTMLOptionElement {
  const opt = document.createElement("option");
  opt.value = value;
  opt.textContent = text;
  return opt;
}

function label(text: string, control: HTMLElement): HTMLElement {
  const wrap = el("label", "labeled");
  const span = el("span");
  span.textContent = text;
  wrap.append(span, control);
  return wrap;
}

function downloadViaAnchor(bytes: Uint8Array, filename: string): void {
  const blob = new Blob([bytes as BlobPart], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

export function mountApp(root: HTMLElement, client: ApiClient): App {
  return new App(root, client);
}

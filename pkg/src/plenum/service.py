"""HTTP/JSON API over an index snapshot.

Endpoints:

* ``GET /healthz`` — liveness.
* ``GET /api/search?q=<json>`` — evaluate a serialized query; returns
  totals plus per-hit summary metadata and a highlighted snippet.
* ``GET /api/speech/{id}`` — one full record in export schema, plus the
  entity annotator ids available for the view switcher.
* ``POST /api/export`` — stream the full result set of a query as one
  JSON subcorpus bundle.
* ``GET /api/stats/top-terms?n=`` — most searched terms (sanitized).
* ``GET /api/stats/topics`` — topic distribution per legislative period.

All handlers read the snapshot reference exactly once per request, so a
concurrent snapshot swap can never produce torn reads. Before the first
snapshot is loaded, data endpoints answer 503.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from plenum import resources
from plenum.index import (
    IndexSnapshot,
    InvalidQuery,
    Query,
    aggregate_topics,
    german_fold,
    query_from_dict,
    query_to_dict,
    rank_matches,
    scoring_tokens,
    search,
)
from plenum.model import canonical_json, record_to_dict
from plenum.qlog import QueryLog

SNIPPET_RADIUS = 80
_WORD_RE = re.compile(r"\w+", re.UNICODE)


@dataclass
class ServiceConfig:
    port: int = 8080
    index_path: str = "snapshot"
    log_dir: str = "querylog"
    denylist_path: str | None = None
    export_cap: int = 10_000
    retention_days: int | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def load(cls, config_path: str | Path | None = None, env: dict | None = None) -> "ServiceConfig":
        """Single config file plus PLENUM_* environment overrides."""
        data: dict = {}
        if config_path is not None:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        env = dict(os.environ if env is None else env)
        cfg = cls(
            port=int(env.get("PLENUM_PORT", data.get("port", 8080))),
            index_path=env.get("PLENUM_INDEX_PATH", data.get("index_path", "snapshot")),
            log_dir=env.get("PLENUM_LOG_DIR", data.get("log_dir", "querylog")),
            denylist_path=env.get("PLENUM_DENYLIST_PATH", data.get("denylist_path")),
            export_cap=int(env.get("PLENUM_EXPORT_CAP", data.get("export_cap", 10_000))),
        )
        retention = env.get("PLENUM_RETENTION_DAYS", data.get("retention_days"))
        if retention is not None:
            cfg.retention_days = int(retention)
        return cfg


class SnapshotHolder:
    """Atomic swap point between the (single) index writer and readers."""

    def __init__(self, snapshot: IndexSnapshot | None = None):
        self._snapshot = snapshot
        self._topic_cache: tuple[int, dict] | None = None
        self._lock = threading.Lock()

    def get(self) -> IndexSnapshot | None:
        return self._snapshot

    def swap(self, snapshot: IndexSnapshot) -> None:
        with self._lock:
            self._snapshot = snapshot
            self._topic_cache = None

    def topic_aggregate(self, snapshot: IndexSnapshot) -> dict:
        cached = self._topic_cache
        if cached is not None and cached[0] == id(snapshot):
            return cached[1]
        aggregate = {
            str(period): dict(sorted(topics.items()))
            for period, topics in sorted(aggregate_topics(snapshot).items())
        }
        self._topic_cache = (id(snapshot), aggregate)
        return aggregate


def build_snippet(text: str, tokens: list[str]) -> dict:
    """Excerpt around the first query-token match, with highlight offsets.

    Highlights are [start, end) pairs relative to the snippet string, in
    code points; matching compares folded word tokens so offsets always
    point into the original text.
    """
    matches = []
    if tokens:
        wanted = set(tokens)
        for m in _WORD_RE.finditer(text):
            if german_fold(m.group()) in wanted:
                matches.append((m.start(), m.end()))
    if not matches:
        snippet = text[: 2 * SNIPPET_RADIUS]
        return {"text": snippet, "highlights": []}
    first = matches[0]
    lo = max(0, first[0] - SNIPPET_RADIUS)
    hi = min(len(text), first[1] + SNIPPET_RADIUS)
    highlights = [[s - lo, e - lo] for s, e in matches if s >= lo and e <= hi]
    return {"text": text[lo:hi], "highlights": highlights}


def _hit_payload(snapshot: IndexSnapshot, hit, tokens: list[str]) -> dict:
    record = snapshot.doc_store[hit.id]
    speaker = record.speaker
    display = speaker.raw_name or f"{speaker.first_name} {speaker.surname}".strip()
    return {
        "id": hit.id,
        "score": hit.score,
        "date": hit.date,
        "speaker": display,
        "party": speaker.resolved_party_id or speaker.raw_party,
        "role": record.role.value,
        "topic": record.topic.label if record.topic else None,
        "snippet": build_snippet(record.text, tokens),
    }


def create_app(
    holder: SnapshotHolder,
    config: ServiceConfig | None = None,
    query_log: QueryLog | None = None,
) -> FastAPI:
    config = config or ServiceConfig()
    if query_log is None:
        denylist = resources.load_denylist(config.denylist_path)
        query_log = QueryLog(config.log_dir, denylist=denylist)

    app = FastAPI(title="plenum", docs_url=None, redoc_url=None)
    app.state.holder = holder
    app.state.config = config
    app.state.query_log = query_log

    def current_snapshot() -> IndexSnapshot | None:
        return holder.get()

    def unavailable() -> JSONResponse:
        return JSONResponse({"error": "index unavailable"}, status_code=503)

    @app.get("/healthz")
    def healthz():
        snapshot = current_snapshot()
        return {"status": "ok", "documents": snapshot.doc_count if snapshot else 0}

    @app.get("/api/search")
    def api_search(q: str = ""):
        snapshot = current_snapshot()
        if snapshot is None:
            return unavailable()
        try:
            query = _decode_query(q)
        except InvalidQuery as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        query_log.log_query([c.value for c in query.clauses], len(query.clauses))
        try:
            page = search(snapshot, query)
        except InvalidQuery as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        tokens = scoring_tokens(query)
        return {
            "total": page.total,
            "page": page.page,
            "page_size": page.page_size,
            "hits": [_hit_payload(snapshot, h, tokens) for h in page.hits],
        }

    @app.get("/api/speech/{doc_id}")
    def api_speech(doc_id: str):
        snapshot = current_snapshot()
        if snapshot is None:
            return unavailable()
        record = snapshot.doc_store.get(doc_id)
        if record is None:
            return JSONResponse({"error": f"unknown id {doc_id!r}"}, status_code=404)
        annotator_ids = sorted(
            {a.annotator for a in record.annotations if a.kind.value == "ner_entity"}
        )
        return {"record": record_to_dict(record), "annotators": annotator_ids}

    @app.post("/api/export")
    async def api_export(request: Request):
        snapshot = current_snapshot()
        if snapshot is None:
            return unavailable()
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "request body must be JSON"}, status_code=400)
        try:
            query = query_from_dict(body.get("query", {}))
            cap = int(body.get("cap", config.export_cap))
            truncate = bool(body.get("truncate", False))
        except (InvalidQuery, TypeError, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if cap < 1 or cap > config.export_cap:
            return JSONResponse(
                {"error": f"cap must be in [1, {config.export_cap}]"}, status_code=400
            )
        query_log.log_query([c.value for c in query.clauses], len(query.clauses))
        try:
            ordered_ids = _export_ids(snapshot, query)
        except InvalidQuery as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        total = len(ordered_ids)
        truncated = total > cap
        if truncated and not truncate:
            return JSONResponse(
                {"error": f"result set of {total} exceeds cap {cap}", "total": total},
                status_code=413,
            )
        if truncated:
            ordered_ids = ordered_ids[:cap]
        return StreamingResponse(
            _stream_bundle(snapshot, query, ordered_ids, truncated),
            media_type="application/json",
        )

    @app.get("/api/stats/top-terms")
    def api_top_terms(n: int = 10):
        if n < 1 or n > 100:
            return JSONResponse({"error": "n must be in [1, 100]"}, status_code=400)
        ranked = query_log.top_terms(n, config.retention_days)
        return {"terms": [{"term": term, "frequency": freq} for term, freq in ranked]}

    @app.get("/api/stats/topics")
    def api_topics():
        snapshot = current_snapshot()
        if snapshot is None:
            return unavailable()
        return {"periods": holder.topic_aggregate(snapshot)}

    return app


def _decode_query(raw: str) -> Query:
    if not raw.strip():
        return Query()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidQuery(f"query parameter is not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidQuery("query must be a JSON object")
    return query_from_dict(data)


def _export_ids(snapshot: IndexSnapshot, query: Query) -> list[str]:
    # Export follows the query's sort but never paginates.
    return [hit.id for hit in rank_matches(snapshot, query)]


def _stream_bundle(
    snapshot: IndexSnapshot, query: Query, ordered_ids: list[str], truncated: bool
) -> Iterator[bytes]:
    generated_at = datetime.now(timezone.utc).isoformat()
    head = {
        "format_version": 1,
        "query": query_to_dict(query),
        "generated_at": generated_at,
    }
    if truncated:
        head["truncated"] = True
    head_json = canonical_json(head)
    yield (head_json[:-1] + ',"records":[').encode("utf-8")
    for i, doc_id in enumerate(ordered_ids):
        prefix = b"," if i else b""
        record_json = canonical_json(record_to_dict(snapshot.doc_store[doc_id]))
        yield prefix + record_json.encode("utf-8")
    yield b"]}"


def export_bundle_dict(
    snapshot: IndexSnapshot, query: Query, cap: int | None = None, truncate: bool = False
) -> dict:
    """In-process export used by the CLI; same shape as the endpoint."""
    ordered_ids = _export_ids(snapshot, query)
    truncated = cap is not None and len(ordered_ids) > cap
    if truncated and not truncate:
        raise InvalidQuery(f"result set of {len(ordered_ids)} exceeds cap {cap}")
    if truncated:
        ordered_ids = ordered_ids[:cap]
    bundle = {
        "format_version": 1,
        "query": query_to_dict(query),
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "records": [record_to_dict(snapshot.doc_store[i]) for i in ordered_ids],
    }
    if truncated:
        bundle["truncated"] = True
    return bundle

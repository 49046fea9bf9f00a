"""Self-contained inverted index and field-scoped boolean query engine.

Query semantics (documented prominently because they differ from the
precedence rules of common search engines): a query is an ordered list
of (operator, field, value) clauses evaluated as a strict left-to-right
fold with no grouping —

    S0 = eval(clause 1)           # its operator is ignored
    Si = Si-1 ∩ eval(ci)          # AND
       = Si-1 ∪ eval(ci)          # OR
       = Si-1 ∖ eval(ci)          # NOT (difference from the running set)

An empty clause list matches every document. The flat fold mirrors the
row model of the query-builder UI one-to-one.

Value semantics per clause:

* ``full_text``: all tokens must occur; a quoted value ("...") is a
  phrase requiring adjacent token positions in order.
* metadata fields: term matching after folding — all tokens of the
  value must be present among the field's terms (quoted values degrade
  to the same all-tokens check; only full text carries positions).
* ``date``: a single ISO day or a closed range "YYYY-MM-DD..YYYY-MM-DD".
* ``all``: union of the clause evaluated against every indexed field.

Tokenization is identical on the index and query sides: casefold,
German fold (ä→ae, ö→oe, ü→ue, ß→ss), Unicode word characters.

Relevance is BM25 (k1=1.2, b=0.75) over full-text stats, summed over
the tokens of non-NOT clauses targeting full_text or all; documents
matched purely via metadata clauses score 0 and tie-break by date
descending, then id.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from plenum.model import (
    AnnotationKind,
    SpeechContribution,
    canonical_json,
    record_from_dict,
    record_to_dict,
)

FIELDS = (
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
)
ALL_FIELDS = "all"

SORT_MODES = ("relevance", "date_asc", "date_desc")
OPERATORS = ("AND", "OR", "NOT")

BM25_K1 = 1.2
BM25_B = 0.75

SNAPSHOT_FORMAT_VERSION = 1

_WORD_RE = re.compile(r"\w+", re.UNICODE)
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_RANGE_RE = re.compile(r"^(\d{4}-\d{2}-\d{2})\.\.(\d{4}-\d{2}-\d{2})$")


class InvalidQuery(Exception):
    pass


class DuplicateId(Exception):
    pass


class SnapshotFormatError(Exception):
    pass


def german_fold(text: str) -> str:
    return (
        text.casefold()
        .replace("ä", "ae")
        .replace("ö", "oe")
        .replace("ü", "ue")
        .replace("ß", "ss")
    )


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(german_fold(text))


# ---------------------------------------------------------------------------
# Query model

@dataclass(frozen=True)
class QueryClause:
    op: str
    field: str
    value: str


@dataclass(frozen=True)
class Query:
    clauses: tuple[QueryClause, ...] = ()
    sort: str = "relevance"
    page: int = 1
    page_size: int = 20


def query_from_dict(data: Mapping) -> Query:
    """Parse and validate the serialized query form used on the wire."""
    try:
        raw_clauses = data.get("clauses", [])
        clauses = tuple(
            QueryClause(op=str(c["op"]).upper(), field=str(c["field"]), value=str(c["value"]))
            for c in raw_clauses
        )
        sort = data.get("sort", "relevance")
        page = int(data.get("page", 1))
        page_size = int(data.get("page_size", 20))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidQuery(f"malformed query: {exc}") from exc
    query = Query(clauses=clauses, sort=sort, page=page, page_size=page_size)
    validate_query(query)
    return query


def query_to_dict(query: Query) -> dict:
    return {
        "clauses": [{"op": c.op, "field": c.field, "value": c.value} for c in query.clauses],
        "sort": query.sort,
        "page": query.page,
        "page_size": query.page_size,
    }


def validate_query(query: Query) -> None:
    for clause in query.clauses:
        if clause.op not in OPERATORS:
            raise InvalidQuery(f"unknown operator {clause.op!r}")
        if clause.field != ALL_FIELDS and clause.field not in FIELDS:
            raise InvalidQuery(f"unknown field {clause.field!r}")
        if not clause.value.strip():
            raise InvalidQuery("clause value must not be empty")
        if clause.field == "date":
            _parse_date_value(clause.value)  # fail early on malformed dates
    if query.sort not in SORT_MODES:
        raise InvalidQuery(f"unknown sort {query.sort!r}")
    if query.page < 1:
        raise InvalidQuery("page must be >= 1")
    if not 1 <= query.page_size <= 200:
        raise InvalidQuery("page_size must be in [1, 200]")


def _parse_date_value(value: str) -> tuple[str, str]:
    value = value.strip()
    m = _RANGE_RE.match(value)
    if m:
        lo, hi = m.group(1), m.group(2)
        if lo > hi:
            raise InvalidQuery(f"empty date range {value!r}")
        return lo, hi
    if _DATE_RE.match(value):
        return value, value
    raise InvalidQuery(f"malformed date value {value!r} (want YYYY-MM-DD or YYYY-MM-DD..YYYY-MM-DD)")


# ---------------------------------------------------------------------------
# Index construction

@dataclass
class IndexSnapshot:
    """Immutable searchable state; build once, share across readers."""

    postings: dict[str, dict[str, tuple[str, ...]]]
    positions: dict[str, dict[str, tuple[int, ...]]]
    doc_store: dict[str, SpeechContribution]
    doc_count: int
    doc_len: dict[str, int]
    avg_doc_len: float
    doc_date: dict[str, str] = field(default_factory=dict)

    def date_int(self, doc_id: str) -> int:
        return int(self.doc_date[doc_id].replace("-", ""))


def _field_terms(record: SpeechContribution) -> dict[str, set[str]]:
    speaker = record.speaker
    terms: dict[str, set[str]] = {
        "speaker": set(tokenize(speaker.raw_name))
        | set(tokenize(speaker.first_name))
        | set(tokenize(speaker.surname)),
        "party": set(tokenize(speaker.raw_party)) | set(tokenize(speaker.resolved_party_id or "")),
        "legislative_period": {str(record.legislative_period)},
        "session_number": {str(record.session_number)},
        "agenda_number": {str(record.agenda_number)},
        "date": {record.date.isoformat()},
        "role": {record.role.value},
        "has_call_to_order": {
            "true" if any(a.kind is AnnotationKind.CALL_TO_ORDER for a in record.annotations) else "false"
        },
        "has_interjection": {
            "true" if any(a.kind is AnnotationKind.INTERJECTION for a in record.annotations) else "false"
        },
    }
    if speaker.resolved_mp_id:
        terms["speaker"].add(german_fold(speaker.resolved_mp_id))
    terms["topic"] = set(tokenize(record.topic.label)) if record.topic else set()
    return terms


def build_index(records: Iterable[SpeechContribution]) -> IndexSnapshot:
    """Build a fresh snapshot; deterministic for identical input."""
    docs: dict[str, SpeechContribution] = {}
    for record in records:
        if record.id in docs:
            raise DuplicateId(record.id)
        docs[record.id] = record

    ordered = {doc_id: docs[doc_id] for doc_id in sorted(docs)}
    postings: dict[str, dict[str, list[str]]] = {f: {} for f in FIELDS}
    positions: dict[str, dict[str, tuple[int, ...]]] = {}
    doc_len: dict[str, int] = {}
    doc_date: dict[str, str] = {}

    for doc_id, record in ordered.items():
        tokens = tokenize(record.text)
        doc_len[doc_id] = len(tokens)
        doc_date[doc_id] = record.date.isoformat()
        occurrences: dict[str, list[int]] = {}
        for pos, tok in enumerate(tokens):
            occurrences.setdefault(tok, []).append(pos)
        for tok, pos_list in occurrences.items():
            postings["full_text"].setdefault(tok, []).append(doc_id)
            positions.setdefault(tok, {})[doc_id] = tuple(pos_list)
        for fname, terms in _field_terms(record).items():
            for term in sorted(terms):
                postings[fname].setdefault(term, []).append(doc_id)

    frozen = {
        fname: {term: tuple(ids) for term, ids in sorted(terms.items())}
        for fname, terms in postings.items()
    }
    n = len(ordered)
    total_len = sum(doc_len.values())
    return IndexSnapshot(
        postings=frozen,
        positions=positions,
        doc_store=ordered,
        doc_count=n,
        doc_len=doc_len,
        avg_doc_len=(total_len / n) if n else 0.0,
        doc_date=doc_date,
    )


# ---------------------------------------------------------------------------
# Boolean evaluation

def _parse_value(value: str) -> tuple[bool, list[str]]:
    value = value.strip()
    if len(value) >= 2 and value.startswith('"') and value.endswith('"'):
        return True, tokenize(value[1:-1])
    return False, tokenize(value)


def _phrase_docs(index: IndexSnapshot, tokens: list[str]) -> set[str]:
    if not tokens:
        return set()
    candidate_ids = None
    for tok in tokens:
        ids = set(index.positions.get(tok, ()))
        candidate_ids = ids if candidate_ids is None else candidate_ids & ids
        if not candidate_ids:
            return set()
    matched = set()
    for doc_id in candidate_ids:
        starts = set(index.positions[tokens[0]][doc_id])
        for offset, tok in enumerate(tokens[1:], start=1):
            starts &= {p - offset for p in index.positions[tok][doc_id]}
            if not starts:
                break
        if starts:
            matched.add(doc_id)
    return matched


def _date_range_docs(index: IndexSnapshot, lo: str, hi: str) -> set[str]:
    out: set[str] = set()
    # ISO day strings sort chronologically, so a lexicographic scan works.
    for term, ids in index.postings["date"].items():
        if lo <= term <= hi:
            out.update(ids)
    return out


def _eval_field(index: IndexSnapshot, fname: str, value: str) -> set[str]:
    if fname == "date":
        try:
            lo, hi = _parse_date_value(value)
        except InvalidQuery:
            return set()  # reachable only via the "all" pseudo-field
        return _date_range_docs(index, lo, hi)
    is_phrase, tokens = _parse_value(value)
    if not tokens:
        return set()
    if fname == "full_text" and is_phrase:
        return _phrase_docs(index, tokens)
    table = index.postings[fname]
    result: set[str] | None = None
    for tok in tokens:
        ids = set(table.get(tok, ()))
        result = ids if result is None else result & ids
        if not result:
            return set()
    return result or set()


def _eval_clause(index: IndexSnapshot, clause: QueryClause) -> set[str]:
    if clause.field == ALL_FIELDS:
        out: set[str] = set()
        for fname in FIELDS:
            out |= _eval_field(index, fname, clause.value)
        return out
    if clause.field == "date":
        lo, hi = _parse_date_value(clause.value)  # malformed -> InvalidQuery
        return _date_range_docs(index, lo, hi)
    return _eval_field(index, clause.field, clause.value)


def match_set(index: IndexSnapshot, query: Query) -> set[str]:
    """The boolean fold alone, without ranking or pagination."""
    if not query.clauses:
        return set(index.doc_store)
    running = _eval_clause(index, query.clauses[0])
    for clause in query.clauses[1:]:
        evaluated = _eval_clause(index, clause)
        if clause.op == "AND":
            running &= evaluated
        elif clause.op == "OR":
            running |= evaluated
        else:
            running -= evaluated
    return running


# ---------------------------------------------------------------------------
# Ranking

def _bm25(index: IndexSnapshot, token: str, doc_id: str) -> float:
    doc_positions = index.positions.get(token)
    if not doc_positions or doc_id not in doc_positions:
        return 0.0
    tf = len(doc_positions[doc_id])
    df = len(doc_positions)
    idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
    norm = BM25_K1 * (1.0 - BM25_B + BM25_B * index.doc_len[doc_id] / index.avg_doc_len)
    return idf * tf * (BM25_K1 + 1.0) / (tf + norm)


def scoring_tokens(query: Query) -> list[str]:
    """Tokens of non-NOT clauses that target text (full_text or all)."""
    tokens: list[str] = []
    for i, clause in enumerate(query.clauses):
        if i > 0 and clause.op == "NOT":
            continue
        if clause.field not in ("full_text", ALL_FIELDS):
            continue
        if clause.field == ALL_FIELDS and _is_date_like(clause.value):
            continue
        tokens.extend(_parse_value(clause.value)[1])
    return tokens


def _is_date_like(value: str) -> bool:
    value = value.strip()
    return bool(_DATE_RE.match(value) or _RANGE_RE.match(value))


@dataclass(frozen=True)
class Hit:
    id: str
    score: float
    date: str


@dataclass(frozen=True)
class ResultPage:
    total: int
    hits: tuple[Hit, ...]
    page: int
    page_size: int


def rank_matches(index: IndexSnapshot, query: Query) -> list[Hit]:
    """The full match set, scored and ordered by the query's sort mode."""
    matched = match_set(index, query)
    tokens = scoring_tokens(query)
    scored = []
    for doc_id in matched:
        score = sum(_bm25(index, tok, doc_id) for tok in tokens) if tokens else 0.0
        scored.append(Hit(id=doc_id, score=score, date=index.doc_date[doc_id]))

    if query.sort == "date_asc":
        scored.sort(key=lambda h: (h.date, h.id))
    elif query.sort == "date_desc":
        scored.sort(key=lambda h: (_negate_date(h.date), h.id))
    else:
        scored.sort(key=lambda h: (-h.score, _negate_date(h.date), h.id))
    return scored


def search(index: IndexSnapshot, query: Query) -> ResultPage:
    """Evaluate the clause fold, rank, and paginate.

    ``total`` is the exact match count. Raises :class:`InvalidQuery` for
    bad fields, malformed date values, or a page beyond the result set.
    """
    validate_query(query)
    scored = rank_matches(index, query)
    total = len(scored)
    start = (query.page - 1) * query.page_size
    if query.page > 1 and start >= total:
        raise InvalidQuery(f"page {query.page} out of bounds for {total} results")
    hits = tuple(scored[start : start + query.page_size])
    return ResultPage(total=total, hits=hits, page=query.page, page_size=query.page_size)


def _negate_date(iso: str) -> int:
    return -int(iso.replace("-", ""))


# ---------------------------------------------------------------------------
# Aggregation

def aggregate_topics(index: IndexSnapshot) -> dict[int, dict[str, int]]:
    """Exact topic counts per legislative period (labeled documents only)."""
    out: dict[int, dict[str, int]] = {}
    for record in index.doc_store.values():
        if record.topic is None:
            continue
        per_period = out.setdefault(record.legislative_period, {})
        per_period[record.topic.label] = per_period.get(record.topic.label, 0) + 1
    return out


# ---------------------------------------------------------------------------
# On-disk snapshot container

def save_snapshot(index: IndexSnapshot, path: str | Path) -> Path:
    """Write a versioned, checksummed snapshot file.

    The payload stores the document set in canonical serialization; the
    index structures are rebuilt deterministically on load, so saved
    bytes stay identical across rebuilds of identical input.
    """
    path = Path(path)
    if path.is_dir() or path.suffix == "":
        path.mkdir(parents=True, exist_ok=True)
        path = path / "snapshot.json"
    payload = {"records": [record_to_dict(index.doc_store[i]) for i in sorted(index.doc_store)]}
    payload_json = canonical_json(payload)
    checksum = hashlib.sha256(payload_json.encode("utf-8")).hexdigest()
    container = (
        '{"format_version":%d,"doc_count":%d,"checksum":"sha256:%s","payload":%s}'
        % (SNAPSHOT_FORMAT_VERSION, index.doc_count, checksum, payload_json)
    )
    path.write_text(container, encoding="utf-8")
    return path


def load_snapshot(path: str | Path) -> IndexSnapshot:
    path = Path(path)
    if path.is_dir():
        path = path / "snapshot.json"
    try:
        container = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError(f"{path}: not a snapshot container: {exc}") from exc
    version = container.get("format_version")
    if version != SNAPSHOT_FORMAT_VERSION:
        raise SnapshotFormatError(
            f"{path}: format version {version!r} not supported (expected {SNAPSHOT_FORMAT_VERSION})"
        )
    payload = container.get("payload")
    if payload is None:
        raise SnapshotFormatError(f"{path}: container without payload")
    payload_json = canonical_json(payload)
    checksum = "sha256:" + hashlib.sha256(payload_json.encode("utf-8")).hexdigest()
    if container.get("checksum") != checksum:
        raise SnapshotFormatError(f"{path}: checksum mismatch")
    index = build_index(record_from_dict(r) for r in payload["records"])
    if index.doc_count != container.get("doc_count"):
        raise SnapshotFormatError(f"{path}: doc_count header disagrees with payload")
    return index


def iter_documents(index: IndexSnapshot, ids: Sequence[str]) -> Iterator[SpeechContribution]:
    for doc_id in ids:
        yield index.doc_store[doc_id]

"""Sanitized query logging and top-term usage statistics.

Every search is logged append-only as one JSON line per query, rotated
into one file per day. Queries whose raw values contain a denylisted
substring (injection probes and similar noise) are still logged but
flagged excluded, and excluded entries never enter any statistic.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from plenum import resources


@dataclass(frozen=True)
class QueryLogEntry:
    timestamp: datetime
    raw_terms: tuple[str, ...]
    clause_count: int
    excluded: bool


def is_denylisted(terms: Sequence[str], denylist: Sequence[str]) -> bool:
    return any(entry in term.casefold() for term in terms for entry in denylist)


def make_entry(
    raw_terms: Sequence[str],
    clause_count: int,
    denylist: Sequence[str],
    now: datetime | None = None,
) -> QueryLogEntry:
    return QueryLogEntry(
        timestamp=now or datetime.now(timezone.utc),
        raw_terms=tuple(raw_terms),
        clause_count=clause_count,
        excluded=is_denylisted(raw_terms, denylist),
    )


class QueryLog:
    """Append-only JSON-lines log with daily file rotation.

    A single lock serializes writers; producers may call append from any
    number of threads.
    """

    def __init__(self, directory: str | Path, denylist: Sequence[str] | None = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.denylist = tuple(denylist) if denylist is not None else resources.load_denylist()
        self._lock = threading.Lock()

    def log_query(self, raw_terms: Sequence[str], clause_count: int) -> QueryLogEntry:
        entry = make_entry(raw_terms, clause_count, self.denylist)
        self.append(entry)
        return entry

    def append(self, entry: QueryLogEntry) -> None:
        day = entry.timestamp.date().isoformat()
        line = json.dumps(
            {
                "ts": entry.timestamp.isoformat(),
                "terms": list(entry.raw_terms),
                "clauses": entry.clause_count,
                "excluded": entry.excluded,
            },
            ensure_ascii=False,
        )
        with self._lock:
            with open(self.directory / f"qlog-{day}.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def entries(self, retention_days: int | None = None) -> Iterator[QueryLogEntry]:
        cutoff = None
        if retention_days is not None:
            cutoff = datetime.now(timezone.utc) - timedelta(days=retention_days)
        for path in sorted(self.directory.glob("qlog-*.jsonl")):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    ts = datetime.fromisoformat(raw["ts"])
                    if cutoff is not None and ts < cutoff:
                        continue
                    yield QueryLogEntry(
                        timestamp=ts,
                        raw_terms=tuple(raw["terms"]),
                        clause_count=raw["clauses"],
                        excluded=raw["excluded"],
                    )

    def top_terms(self, n: int, retention_days: int | None = None) -> list[tuple[str, int]]:
        return top_terms(self.entries(retention_days), n)


def top_terms(entries: Iterable[QueryLogEntry], n: int) -> list[tuple[str, int]]:
    """Most frequent casefolded terms over non-excluded entries.

    Ties break lexicographically, so identical logs always report the
    identical ranking.
    """
    counts: Counter[str] = Counter()
    for entry in entries:
        if entry.excluded:
            continue
        for term in entry.raw_terms:
            term = term.casefold().strip()
            if term:
                counts[term] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:n]

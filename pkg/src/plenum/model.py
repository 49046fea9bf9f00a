"""Unified data model for annotated speech contributions.

A :class:`SpeechContribution` is the atomic searchable document: one
speaker's uninterrupted turn, with session metadata, sentence ranges,
and typed span annotations. All offsets count Unicode code points into
``text`` (never bytes), so spans highlight identically across every
consumer. All types are immutable after construction and safe to share
across threads.

The canonical serialized form is the export JSON schema shipped in
``data/export_schema.json``; :func:`record_to_dict` and
:func:`record_from_dict` implement it and round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date as Date
from enum import Enum
from typing import Iterable, Iterator, Mapping

from plenum import resources

PRESIDENCY_ACTION = "Presidency Action"

EXPORT_FORMAT_VERSION = 1


class Role(str, Enum):
    PRESIDENT = "president"
    MEMBER = "member"
    GOVERNMENT = "government"
    GUEST = "guest"
    UNKNOWN = "unknown"


class AnnotationKind(str, Enum):
    INTERJECTION = "interjection"
    CALL_TO_ORDER = "call_to_order"
    NER_ENTITY = "ner_entity"
    PARTY_MENTION = "party_mention"


@dataclass(frozen=True)
class Sentence:
    """Half-open code-point range [start, end) of one sentence."""

    index: int
    start: int
    end: int


@dataclass(frozen=True)
class SpanAnnotation:
    """A typed character-range annotation over a contribution's text.

    ``label`` holds the entity class for ner_entity spans and the
    canonical party id for party_mention spans; it is empty otherwise.
    ``annotator`` identifies the producing rule set or model id.
    """

    kind: AnnotationKind
    start: int
    end: int
    label: str = ""
    annotator: str = ""


@dataclass(frozen=True)
class TopicLabel:
    label: str
    confidence: float


@dataclass(frozen=True)
class SpeakerRef:
    """Speaker as found in the source, plus resolution results.

    ``resolved_mp_id`` is set only when master-data disambiguation found
    exactly one candidate; ``ambiguous`` records that two or more
    candidates existed and none could be singled out.
    """

    raw_name: str
    first_name: str
    surname: str
    raw_party: str
    resolved_mp_id: str | None = None
    resolved_party_id: str | None = None
    ambiguous: bool = False


@dataclass(frozen=True)
class SpeechContribution:
    id: str
    legislative_period: int
    session_number: int
    agenda_number: int
    agenda_type: str
    agenda_description: str
    date: Date
    speaker: SpeakerRef
    role: Role
    topic: TopicLabel | None = None
    text: str = ""
    sentences: tuple[Sentence, ...] = ()
    annotations: tuple[SpanAnnotation, ...] = ()
    source_uri: str = ""


def make_contribution_id(period: int, session: int, agenda: int, seq: int) -> str:
    """Deterministic record id: ``{period}-{session}-{agenda}-{seq}``.

    ``seq`` is the 1-based position of the contribution within the whole
    session transcript, so rebuilds of the same source yield stable ids.
    """
    return f"{period}-{session}-{agenda}-{seq}"


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate`."""

    code: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - convenience only
        return f"{self.code}: {self.message}"


def validate(
    record: SpeechContribution,
    *,
    calendar: Mapping[int, tuple[Date, Date]] | None = None,
    topic_labels: Iterable[str] | None = None,
) -> list[Violation]:
    """Check every model invariant; returns all violations found.

    Violations are data, not errors: an empty list means the record is
    valid. The period calendar and topic vocabulary default to the
    shipped configuration.
    """
    if calendar is None:
        calendar = resources.default_period_calendar()
    if topic_labels is None:
        topic_labels = resources.default_topic_labels()
    labels = set(topic_labels)
    out: list[Violation] = []
    n = len(record.text)

    if record.legislative_period < 1:
        out.append(Violation("metadata_range", "legislative_period must be >= 1"))
    if record.session_number < 1:
        out.append(Violation("metadata_range", "session_number must be >= 1"))
    if record.agenda_number < 0:
        out.append(Violation("metadata_range", "agenda_number must be >= 0"))

    covered = bytearray(n)
    prev_end = 0
    for pos, s in enumerate(record.sentences):
        if s.index != pos:
            out.append(Violation("sentence_index", f"sentence {pos} carries index {s.index}"))
        if not (0 <= s.start < s.end <= n):
            out.append(Violation("sentence_range", f"sentence {pos} range [{s.start},{s.end}) outside text"))
            continue
        if s.start < prev_end:
            out.append(Violation("sentence_overlap", f"sentence {pos} overlaps or precedes sentence {pos - 1}"))
        prev_end = max(prev_end, s.end)
        for i in range(s.start, s.end):
            covered[i] = 1
    for i, ch in enumerate(record.text):
        if not ch.isspace() and not covered[i]:
            out.append(Violation("sentence_tiling", f"non-whitespace character at {i} not covered by any sentence"))
            break

    for pos, a in enumerate(record.annotations):
        if not (0 <= a.start < a.end <= n):
            out.append(Violation("annotation_range", f"annotation {pos} range [{a.start},{a.end}) outside text"))
        if a.kind is AnnotationKind.CALL_TO_ORDER and record.role is not Role.PRESIDENT:
            out.append(Violation("president_only", f"annotation {pos}: call_to_order on role={record.role.value}"))

    if record.topic is not None:
        if record.topic.label not in labels:
            out.append(Violation("topic_label", f"unknown topic label {record.topic.label!r}"))
        if not (0.0 <= record.topic.confidence <= 1.0):
            out.append(Violation("topic_confidence", f"confidence {record.topic.confidence} outside [0,1]"))
        if record.role is Role.PRESIDENT and record.topic.label != PRESIDENCY_ACTION:
            out.append(Violation("president_topic", f"president contribution labeled {record.topic.label!r}"))

    interval = calendar.get(record.legislative_period)
    if interval is None:
        out.append(Violation("period_date", f"legislative_period {record.legislative_period} not in calendar"))
    else:
        lo, hi = interval
        if not (lo <= record.date <= hi):
            out.append(Violation("period_date", f"date {record.date.isoformat()} outside period {record.legislative_period} interval"))

    if record.speaker.resolved_mp_id is not None and record.speaker.ambiguous:
        out.append(Violation("speaker_ambiguity", "resolved speaker must not be flagged ambiguous"))

    return out


# ---------------------------------------------------------------------------
# Canonical serialization (export JSON schema)

def record_to_dict(record: SpeechContribution) -> dict:
    speaker: dict = {
        "raw_name": record.speaker.raw_name,
        "first_name": record.speaker.first_name,
        "surname": record.speaker.surname,
        "ambiguous": record.speaker.ambiguous,
        "party": {"raw": record.speaker.raw_party},
    }
    if record.speaker.resolved_mp_id is not None:
        speaker["resolved_mp_id"] = record.speaker.resolved_mp_id
    if record.speaker.resolved_party_id is not None:
        speaker["party"]["canonical"] = record.speaker.resolved_party_id
    out: dict = {
        "id": record.id,
        "legislative_period": record.legislative_period,
        "session_number": record.session_number,
        "agenda_number": record.agenda_number,
        "agenda_type": record.agenda_type,
        "agenda_description": record.agenda_description,
        "date": record.date.isoformat(),
        "speaker": speaker,
        "role": record.role.value,
        "source_uri": record.source_uri,
        "text": record.text,
        "sentences": [{"index": s.index, "start": s.start, "end": s.end} for s in record.sentences],
        "annotations": [
            {"kind": a.kind.value, "start": a.start, "end": a.end, "label": a.label, "annotator": a.annotator}
            for a in record.annotations
        ],
    }
    if record.topic is not None:
        out["topic"] = {"label": record.topic.label, "confidence": record.topic.confidence}
    return out


def record_from_dict(data: Mapping) -> SpeechContribution:
    sp = data["speaker"]
    speaker = SpeakerRef(
        raw_name=sp["raw_name"],
        first_name=sp["first_name"],
        surname=sp["surname"],
        raw_party=sp["party"]["raw"],
        resolved_mp_id=sp.get("resolved_mp_id"),
        resolved_party_id=sp["party"].get("canonical"),
        ambiguous=sp["ambiguous"],
    )
    topic = None
    if "topic" in data:
        topic = TopicLabel(label=data["topic"]["label"], confidence=data["topic"]["confidence"])
    return SpeechContribution(
        id=data["id"],
        legislative_period=data["legislative_period"],
        session_number=data["session_number"],
        agenda_number=data["agenda_number"],
        agenda_type=data["agenda_type"],
        agenda_description=data["agenda_description"],
        date=Date.fromisoformat(data["date"]),
        speaker=speaker,
        role=Role(data["role"]),
        topic=topic,
        text=data["text"],
        sentences=tuple(Sentence(s["index"], s["start"], s["end"]) for s in data["sentences"]),
        annotations=tuple(
            SpanAnnotation(AnnotationKind(a["kind"]), a["start"], a["end"], a["label"], a["annotator"])
            for a in data["annotations"]
        ),
        source_uri=data["source_uri"],
    )


def canonical_json(obj) -> str:
    """Stable compact JSON used everywhere bytes must be reproducible."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_jsonl(records: Iterable[SpeechContribution], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(canonical_json(record_to_dict(record)))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path) -> Iterator[SpeechContribution]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield record_from_dict(json.loads(line))

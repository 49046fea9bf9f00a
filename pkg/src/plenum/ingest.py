"""Conversion of the two raw transcript XML schemas into unified records.

Two distinct pipelines map structurally different session XML into the
same :class:`~plenum.model.SpeechContribution` shape, so everything
downstream (segmentation, annotation, indexing) is source-agnostic.

Supported input subsets
-----------------------

``germaparl`` (TEI-flavoured)::

    <TEI>
      <teiHeader>
        <legislativePeriod>19</legislativePeriod>
        <sessionNo>123</sessionNo>
        <date>2019-11-08</date>
      </teiHeader>
      <text><body>
        <div type="agenda_item" n="2" what="Tagesordnungspunkt" desc="...">
          <sp who="Angela Merkel" first="Angela" last="Merkel"
              party="CDU" role="mp">
            <p>Paragraph text.</p>
            <stage>(Beifall bei der CDU)</stage>
          </sp>
        </div>
      </body></text>
    </TEI>

``bundestag`` (Open Data flavoured)::

    <dbtplenarprotokoll wahlperiode="19" sitzung-nr="123"
                        sitzung-datum="08.11.2019">
      <sitzungsverlauf>
        <tagesordnungspunkt top-id="Tagesordnungspunkt 2">
          <beschreibung>...</beschreibung>
          <rede id="...">
            <p klasse="redner">
              <redner><name>
                <vorname>Angela</vorname><nachname>Merkel</nachname>
                <fraktion>CDU</fraktion>
                <rolle><rolle_lang>...</rolle_lang></rolle>
              </name></redner>
            </p>
            <p klasse="J_1">Paragraph text.</p>
            <kommentar>(Beifall bei der CDU)</kommentar>
          </rede>
        </tagesordnungspunkt>
      </sitzungsverlauf>
    </dbtplenarprotokoll>

Elements outside these subsets are skipped with a warning, never an
error. Stage directions and ``kommentar`` elements stay inline in the
flattened text exactly as delivered (parenthesized) and are marked by
interjection spans, because the portal displays them in place.
"""

from __future__ import annotations

import io
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date as Date
from enum import Enum
from typing import Iterable

from plenum.model import (
    AnnotationKind,
    Role,
    SpanAnnotation,
    SpeakerRef,
    SpeechContribution,
    make_contribution_id,
)

log = logging.getLogger(__name__)


class SourceSchema(str, Enum):
    GERMAPARL = "germaparl"
    BUNDESTAG = "bundestag"


@dataclass(frozen=True)
class RawSessionDoc:
    schema: SourceSchema
    xml_bytes: bytes
    source_uri: str


class MalformedXml(Exception):
    """Input is not parseable XML; carries parser line/column context."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaMismatch(Exception):
    """Mandatory elements or attributes of the declared schema are missing."""

    def __init__(self, message: str, element: str | None = None):
        self.element = element
        if element is not None:
            message = f"{message} (element {element})"
        super().__init__(message)


# Role mapping tables, one per source schema.
_GERMAPARL_ROLES = {
    "presidency": Role.PRESIDENT,
    "mp": Role.MEMBER,
    "government": Role.GOVERNMENT,
    "guest": Role.GUEST,
}

_GOVERNMENT_MARKERS = ("minister", "kanzler", "staatssekretär", "senator", "wehrbeauftragt")


def _role_from_bundestag(rolle_lang: str, fraktion: str) -> Role:
    folded = rolle_lang.casefold()
    if folded:
        if "bundespräsident" in folded:
            return Role.GUEST
        if "präsident" in folded:
            return Role.PRESIDENT
        if any(marker in folded for marker in _GOVERNMENT_MARKERS):
            return Role.GOVERNMENT
        if folded == "gast":
            return Role.GUEST
    if fraktion:
        return Role.MEMBER
    return Role.UNKNOWN


class _Flattener:
    """Accumulates normalized text segments, tracking code-point offsets.

    Each appended segment has its whitespace collapsed to single spaces;
    segments are joined by one space. Returns the [start, end) range of
    the appended segment, or None if it was empty.
    """

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.length = 0

    def append(self, raw: str | None) -> tuple[int, int] | None:
        if raw is None:
            return None
        norm = " ".join(raw.split())
        if not norm:
            return None
        if self.parts:
            self.parts.append(" ")
            self.length += 1
        start = self.length
        self.parts.append(norm)
        self.length += len(norm)
        return (start, self.length)

    def text(self) -> str:
        return "".join(self.parts)


def _inner_text(elem: ET.Element) -> str:
    return "".join(elem.itertext())


def _parse_xml(doc: RawSessionDoc) -> ET.Element:
    try:
        return ET.fromstring(doc.xml_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXml(f"{doc.source_uri}: {exc.msg}", line=line, column=column) from exc


def _require(value: str | None, what: str) -> str:
    if value is None or not value.strip():
        raise SchemaMismatch(f"missing mandatory {what}", element=what)
    return value.strip()


def _parse_iso_date(raw: str, what: str) -> Date:
    try:
        return Date.fromisoformat(raw)
    except ValueError as exc:
        raise SchemaMismatch(f"unparseable date {raw!r}", element=what) from exc


def _parse_int(raw: str, what: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise SchemaMismatch(f"non-numeric {what}: {raw!r}", element=what) from exc


def _split_name(full: str) -> tuple[str, str]:
    parts = full.split()
    if len(parts) >= 2:
        return " ".join(parts[:-1]), parts[-1]
    return "", full


# ---------------------------------------------------------------------------
# GermaParl pipeline

def parse_germaparl(doc: RawSessionDoc) -> list[SpeechContribution]:
    """Parse one GermaParl-style session document into unified records.

    One record per ``sp`` speaker turn, in document order; ``stage``
    directions become interjection spans anchored at their position in
    the flattened text. Sentences stay empty (segmentation is a later
    stage).
    """
    if doc.schema is not SourceSchema.GERMAPARL:
        raise ValueError(f"expected germaparl document, got {doc.schema.value}")
    root = _parse_xml(doc)
    if root.tag != "TEI":
        raise SchemaMismatch(f"unexpected root element {root.tag!r}", element=root.tag)
    header = root.find("teiHeader")
    if header is None:
        raise SchemaMismatch("missing teiHeader", element="teiHeader")
    period = _parse_int(_require(header.findtext("legislativePeriod"), "teiHeader/legislativePeriod"), "legislativePeriod")
    session = _parse_int(_require(header.findtext("sessionNo"), "teiHeader/sessionNo"), "sessionNo")
    session_date = _parse_iso_date(_require(header.findtext("date"), "teiHeader/date"), "teiHeader/date")
    body = root.find("text/body")
    if body is None:
        raise SchemaMismatch("missing text/body", element="text/body")

    records: list[SpeechContribution] = []
    seq = 0
    for div in body:
        if div.tag != "div":
            log.warning("%s: skipping unexpected body element <%s>", doc.source_uri, div.tag)
            continue
        agenda_number = int(div.get("n", "0") or "0")
        agenda_type = div.get("what", "")
        agenda_description = div.get("desc", "")
        for sp in div:
            if sp.tag != "sp":
                log.warning("%s: skipping unexpected agenda element <%s>", doc.source_uri, sp.tag)
                continue
            seq += 1
            records.append(
                _germaparl_turn(
                    sp,
                    doc=doc,
                    period=period,
                    session=session,
                    session_date=session_date,
                    agenda_number=agenda_number,
                    agenda_type=agenda_type,
                    agenda_description=agenda_description,
                    seq=seq,
                )
            )
    return records


def _germaparl_turn(
    sp: ET.Element,
    *,
    doc: RawSessionDoc,
    period: int,
    session: int,
    session_date: Date,
    agenda_number: int,
    agenda_type: str,
    agenda_description: str,
    seq: int,
) -> SpeechContribution:
    raw_name = _require(sp.get("who"), "sp/@who")
    first = sp.get("first")
    last = sp.get("last")
    if first is None and last is None:
        first, last = _split_name(raw_name)
    role = _GERMAPARL_ROLES.get(sp.get("role", ""), Role.UNKNOWN)

    flat = _Flattener()
    spans: list[tuple[int, int]] = []
    for child in sp:
        if child.tag == "p":
            flat.append(child.text)
            for sub in child:
                if sub.tag == "stage":
                    rng = flat.append(_inner_text(sub))
                    if rng:
                        spans.append(rng)
                else:
                    log.warning("%s: inlining unexpected element <%s>", doc.source_uri, sub.tag)
                    flat.append(_inner_text(sub))
                flat.append(sub.tail)
        elif child.tag == "stage":
            rng = flat.append(_inner_text(child))
            if rng:
                spans.append(rng)
        else:
            log.warning("%s: skipping unexpected turn element <%s>", doc.source_uri, child.tag)

    return SpeechContribution(
        id=make_contribution_id(period, session, agenda_number, seq),
        legislative_period=period,
        session_number=session,
        agenda_number=agenda_number,
        agenda_type=agenda_type,
        agenda_description=agenda_description,
        date=session_date,
        speaker=SpeakerRef(
            raw_name=raw_name,
            first_name=(first or "").strip(),
            surname=(last or "").strip(),
            raw_party=sp.get("party", "").strip(),
        ),
        role=role,
        text=flat.text(),
        annotations=tuple(
            SpanAnnotation(AnnotationKind.INTERJECTION, start, end, annotator="markup:germaparl")
            for start, end in spans
        ),
        source_uri=doc.source_uri,
    )


# ---------------------------------------------------------------------------
# Bundestag Open Data pipeline

_TOP_ID_RE = re.compile(r"^(?P<type>.*?)\s*(?P<number>\d+)$")


def _parse_top_id(top_id: str) -> tuple[str, int]:
    m = _TOP_ID_RE.match(top_id.strip())
    if m and m.group("type"):
        return m.group("type"), int(m.group("number"))
    if m:
        return "Tagesordnungspunkt", int(m.group("number"))
    return top_id.strip(), 0


def _parse_german_date(raw: str, what: str) -> Date:
    m = re.fullmatch(r"(\d{2})\.(\d{2})\.(\d{4})", raw.strip())
    if not m:
        raise SchemaMismatch(f"unparseable date {raw!r} (expected DD.MM.YYYY)", element=what)
    day, month, year = (int(g) for g in m.groups())
    try:
        return Date(year, month, day)
    except ValueError as exc:
        raise SchemaMismatch(f"invalid calendar date {raw!r}", element=what) from exc


def parse_bundestag(doc: RawSessionDoc) -> list[SpeechContribution]:
    """Parse one Bundestag Open Data session document into unified records.

    Emits the identical unified schema as :func:`parse_germaparl`;
    explicitly marked ``kommentar`` elements become interjection spans.
    """
    if doc.schema is not SourceSchema.BUNDESTAG:
        raise ValueError(f"expected bundestag document, got {doc.schema.value}")
    root = _parse_xml(doc)
    if root.tag != "dbtplenarprotokoll":
        raise SchemaMismatch(f"unexpected root element {root.tag!r}", element=root.tag)
    period = _parse_int(_require(root.get("wahlperiode"), "@wahlperiode"), "wahlperiode")
    session = _parse_int(_require(root.get("sitzung-nr"), "@sitzung-nr"), "sitzung-nr")
    session_date = _parse_german_date(_require(root.get("sitzung-datum"), "@sitzung-datum"), "@sitzung-datum")
    verlauf = root.find("sitzungsverlauf")
    if verlauf is None:
        raise SchemaMismatch("missing sitzungsverlauf", element="sitzungsverlauf")

    records: list[SpeechContribution] = []
    seq = 0
    for top in verlauf:
        if top.tag != "tagesordnungspunkt":
            log.warning("%s: skipping unexpected element <%s>", doc.source_uri, top.tag)
            continue
        agenda_type, agenda_number = _parse_top_id(top.get("top-id", ""))
        agenda_description = " ".join((top.findtext("beschreibung") or "").split())
        for rede in top.findall("rede"):
            seq += 1
            records.append(
                _bundestag_turn(
                    rede,
                    doc=doc,
                    period=period,
                    session=session,
                    session_date=session_date,
                    agenda_number=agenda_number,
                    agenda_type=agenda_type,
                    agenda_description=agenda_description,
                    seq=seq,
                )
            )
    return records


def _bundestag_turn(
    rede: ET.Element,
    *,
    doc: RawSessionDoc,
    period: int,
    session: int,
    session_date: Date,
    agenda_number: int,
    agenda_type: str,
    agenda_description: str,
    seq: int,
) -> SpeechContribution:
    name_el = rede.find("p[@klasse='redner']/redner/name")
    if name_el is None:
        raise SchemaMismatch("rede without redner name block", element="rede/p[@klasse='redner']/redner/name")
    first = " ".join((name_el.findtext("vorname") or "").split())
    last = " ".join(_require(name_el.findtext("nachname"), "redner/name/nachname").split())
    fraktion = " ".join((name_el.findtext("fraktion") or "").split())
    rolle_lang = " ".join((name_el.findtext("rolle/rolle_lang") or "").split())
    raw_name = f"{first} {last}".strip()
    role = _role_from_bundestag(rolle_lang, fraktion)

    flat = _Flattener()
    spans: list[tuple[int, int]] = []
    for child in rede:
        if child.tag == "p":
            if child.get("klasse") == "redner":
                continue  # speaker header block, not speech text
            flat.append(_inner_text(child))
        elif child.tag == "kommentar":
            rng = flat.append(_inner_text(child))
            if rng:
                spans.append(rng)
        else:
            log.warning("%s: skipping unexpected rede element <%s>", doc.source_uri, child.tag)

    return SpeechContribution(
        id=make_contribution_id(period, session, agenda_number, seq),
        legislative_period=period,
        session_number=session,
        agenda_number=agenda_number,
        agenda_type=agenda_type,
        agenda_description=agenda_description,
        date=session_date,
        speaker=SpeakerRef(raw_name=raw_name, first_name=first, surname=last, raw_party=fraktion),
        role=role,
        text=flat.text(),
        annotations=tuple(
            SpanAnnotation(AnnotationKind.INTERJECTION, start, end, annotator="markup:bundestag")
            for start, end in spans
        ),
        source_uri=doc.source_uri,
    )


# ---------------------------------------------------------------------------
# Dispatch helpers

def sniff_schema(xml_bytes: bytes) -> SourceSchema:
    """Detect the source schema from the document's root element."""
    try:
        for _event, elem in ET.iterparse(io.BytesIO(xml_bytes), events=("start",)):
            if elem.tag == "TEI":
                return SourceSchema.GERMAPARL
            if elem.tag == "dbtplenarprotokoll":
                return SourceSchema.BUNDESTAG
            raise SchemaMismatch(f"unrecognized root element {elem.tag!r}", element=elem.tag)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXml(exc.msg, line=line, column=column) from exc
    raise MalformedXml("empty document")


def parse_session(doc: RawSessionDoc) -> list[SpeechContribution]:
    if doc.schema is SourceSchema.GERMAPARL:
        return parse_germaparl(doc)
    return parse_bundestag(doc)


def dedupe_sessions(
    sessions: Iterable[tuple[SourceSchema, list[SpeechContribution]]],
) -> list[list[SpeechContribution]]:
    """Collapse duplicate sessions supplied by both sources.

    Dedup key is (legislative_period, session_number); when both sources
    cover the same session (around the source cutover), the bundestag
    version wins. Order of first appearance is preserved.
    """
    chosen: dict[tuple[int, int], tuple[SourceSchema, list[SpeechContribution]]] = {}
    order: list[tuple[int, int]] = []
    for schema, records in sessions:
        if not records:
            continue
        key = (records[0].legislative_period, records[0].session_number)
        if key not in chosen:
            chosen[key] = (schema, records)
            order.append(key)
        elif schema is SourceSchema.BUNDESTAG and chosen[key][0] is not SourceSchema.BUNDESTAG:
            log.warning("session %s supplied by both sources; keeping bundestag version", key)
            chosen[key] = (schema, records)
        else:
            log.warning("session %s supplied twice; keeping first of same precedence", key)
    return [chosen[key][1] for key in order]

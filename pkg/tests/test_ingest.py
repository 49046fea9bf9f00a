import xml.etree.ElementTree as ET
from dataclasses import replace

import pytest

from plenum.ingest import (
    MalformedXml,
    RawSessionDoc,
    SchemaMismatch,
    SourceSchema,
    dedupe_sessions,
    parse_bundestag,
    parse_germaparl,
    sniff_schema,
)
from plenum.model import AnnotationKind, Role

from conftest import (
    BUNDESTAG_SESSION_XML,
    GERMAPARL_SESSION_XML,
    bundestag_doc,
    germaparl_doc,
)

TWO_TURN_XML = """\
<TEI>
  <teiHeader>
    <legislativePeriod>19</legislativePeriod>
    <sessionNo>5</sessionNo>
    <date>2018-01-18</date>
  </teiHeader>
  <text><body>
    <div type="agenda_item" n="1" what="Tagesordnungspunkt" desc="Eröffnung">
      <sp who="Wolfgang Schäuble" first="Wolfgang" last="Schäuble" party="" role="presidency">
        <p>Bitte nehmen Sie Platz. <stage>(Unruhe im Saal)</stage> Wir beginnen.</p>
      </sp>
      <sp who="Bernd Baumann" first="Bernd" last="Baumann" party="AfD" role="mp">
        <p>Ich komme zur Sache.</p>
      </sp>
    </div>
  </body></text>
</TEI>
"""


def test_germaparl_two_turns_with_embedded_interjection():
    records = parse_germaparl(germaparl_doc(TWO_TURN_XML, uri="test://two-turn.xml"))
    assert len(records) == 2
    first = records[0]
    assert first.text == "Bitte nehmen Sie Platz. (Unruhe im Saal) Wir beginnen."
    spans = [a for a in first.annotations if a.kind is AnnotationKind.INTERJECTION]
    assert len(spans) == 1
    expected_start = first.text.index("(Unruhe im Saal)")
    assert (spans[0].start, spans[0].end) == (expected_start, expected_start + len("(Unruhe im Saal)"))
    assert not records[1].annotations


def test_germaparl_empty_session_body():
    xml = TWO_TURN_XML.split("<text>")[0] + "<text><body></body></text>\n</TEI>\n"
    assert parse_germaparl(germaparl_doc(xml)) == []


def test_germaparl_missing_date_is_schema_mismatch():
    xml = TWO_TURN_XML.replace("<date>2018-01-18</date>", "")
    with pytest.raises(SchemaMismatch) as err:
        parse_germaparl(germaparl_doc(xml))
    assert "date" in str(err.value)


def test_germaparl_metadata_mapping():
    records = parse_germaparl(germaparl_doc())
    assert [r.id for r in records] == ["19-172-2-1", "19-172-2-2", "19-172-2-3", "19-172-3-4"]
    first = records[0]
    assert first.legislative_period == 19
    assert first.session_number == 172
    assert first.date.isoformat() == "2020-10-02"
    assert first.role is Role.PRESIDENT
    assert first.speaker.raw_name == "Wolfgang Schäuble"
    assert first.sentences == ()
    assert records[1].role is Role.MEMBER
    assert records[2].role is Role.GOVERNMENT
    assert records[3].agenda_type == "Zusatzpunkt"
    assert records[3].agenda_number == 3
    assert records[3].speaker.raw_party == "Freie Demokratische Partei"


def test_bundestag_comment_becomes_exact_interjection_span():
    records = parse_bundestag(bundestag_doc())
    baumann = records[1]
    spans = [a for a in baumann.annotations if a.kind is AnnotationKind.INTERJECTION]
    assert len(spans) == 1
    surface = baumann.text[spans[0].start : spans[0].end]
    assert surface == "(Beifall bei der SPD)"


def test_bundestag_president_role_mapping():
    records = parse_bundestag(bundestag_doc())
    assert records[0].role is Role.PRESIDENT
    assert records[0].speaker.surname == "Schäuble"
    assert records[2].role is Role.GOVERNMENT


def test_not_xml_is_malformed():
    doc = RawSessionDoc(SourceSchema.BUNDESTAG, b"definitely not xml <", "test://bad")
    with pytest.raises(MalformedXml) as err:
        parse_bundestag(doc)
    assert err.value.line is not None


def test_wrong_schema_is_precondition_error():
    with pytest.raises(ValueError):
        parse_bundestag(germaparl_doc())


def test_sniff_schema():
    assert sniff_schema(GERMAPARL_SESSION_XML.encode()) is SourceSchema.GERMAPARL
    assert sniff_schema(BUNDESTAG_SESSION_XML.encode()) is SourceSchema.BUNDESTAG
    with pytest.raises(SchemaMismatch):
        sniff_schema(b"<html></html>")
    with pytest.raises(MalformedXml):
        sniff_schema(b"not xml")


def _strip_source_fields(record):
    return replace(
        record,
        source_uri="",
        annotations=tuple(replace(a, annotator="") for a in record.annotations),
    )


def test_pipeline_equivalence(germaparl_records, bundestag_records):
    """The same session in both schemas yields identical unified fields."""
    assert len(germaparl_records) == len(bundestag_records)
    for left, right in zip(germaparl_records, bundestag_records):
        assert _strip_source_fields(left) == _strip_source_fields(right)


def test_order_preserved_and_seq_strictly_increasing(germaparl_records, bundestag_records):
    for records in (germaparl_records, bundestag_records):
        seqs = [int(r.id.rsplit("-", 1)[1]) for r in records]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)


def _independent_speech_text(xml: str, schema: SourceSchema) -> str:
    """Extraction oracle: all text under speech-bearing elements."""
    root = ET.fromstring(xml)
    chunks = []
    if schema is SourceSchema.GERMAPARL:
        for sp in root.iter("sp"):
            chunks.append(" ".join("".join(sp.itertext()).split()))
    else:
        for rede in root.iter("rede"):
            parts = []
            for child in rede:
                if child.tag == "p" and child.get("klasse") == "redner":
                    continue
                parts.append("".join(child.itertext()))
            chunks.append(" ".join(" ".join(parts).split()))
    return " ".join(chunks)


@pytest.mark.parametrize(
    "xml,schema,parser",
    [
        (GERMAPARL_SESSION_XML, SourceSchema.GERMAPARL, parse_germaparl),
        (BUNDESTAG_SESSION_XML, SourceSchema.BUNDESTAG, parse_bundestag),
    ],
)
def test_no_text_loss(xml, schema, parser):
    doc = RawSessionDoc(schema, xml.encode(), "test://loss-check")
    concatenated = " ".join(r.text for r in parser(doc))
    assert concatenated == _independent_speech_text(xml, schema)


def test_dedupe_prefers_bundestag(germaparl_records, bundestag_records):
    kept = dedupe_sessions(
        [
            (SourceSchema.GERMAPARL, list(germaparl_records)),
            (SourceSchema.BUNDESTAG, list(bundestag_records)),
        ]
    )
    assert len(kept) == 1
    assert kept[0][0].source_uri.startswith("test://bundestag")


def test_dedupe_keeps_distinct_sessions(germaparl_records):
    other = [replace(r, session_number=999) for r in germaparl_records]
    kept = dedupe_sessions(
        [
            (SourceSchema.GERMAPARL, list(germaparl_records)),
            (SourceSchema.GERMAPARL, other),
        ]
    )
    assert len(kept) == 2

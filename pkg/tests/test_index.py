import json
from datetime import date as Date

import pytest

from plenum.index import (
    DuplicateId,
    InvalidQuery,
    Query,
    QueryClause,
    SnapshotFormatError,
    aggregate_topics,
    build_index,
    german_fold,
    load_snapshot,
    save_snapshot,
    search,
    tokenize,
)
from plenum.model import AnnotationKind, Role, SpanAnnotation, TopicLabel

from conftest import make_record


def q(*clauses, sort="relevance", page=1, page_size=20):
    return Query(
        clauses=tuple(QueryClause(op, field, value) for op, field, value in clauses),
        sort=sort,
        page=page,
        page_size=page_size,
    )


def test_tokenize_folds_german():
    assert german_fold("Straße") == "strasse"
    assert tokenize("Klimawandel, Ökologie und FUSSBALL-Bälle!") == [
        "klimawandel", "oekologie", "und", "fussball", "baelle",
    ]


def test_doc_count(search_corpus):
    index = build_index(search_corpus)
    assert index.doc_count == 5
    assert len(index.doc_store) == 5


def test_duplicate_id_rejected(search_corpus):
    with pytest.raises(DuplicateId):
        build_index(search_corpus + [search_corpus[0]])


def test_klimawandel_postings(search_corpus):
    index = build_index(search_corpus)
    expected = {r.id for r in search_corpus if "Klimawandel" in r.text}
    assert len(expected) == 2
    assert set(index.postings["full_text"]["klimawandel"]) == expected


def test_period_19_total(search_corpus):
    index = build_index(search_corpus)
    page = search(index, q(("AND", "legislative_period", "19")))
    assert page.total == 2


def test_not_is_set_difference(search_corpus):
    index = build_index(search_corpus)
    base = {h.id for h in search(index, q(("AND", "full_text", "migration"))).hits}
    cdu = {r.id for r in search_corpus if r.speaker.raw_party == "CDU"}
    page = search(index, q(("AND", "full_text", "migration"), ("NOT", "party", "CDU")))
    assert {h.id for h in page.hits} == base - cdu


def test_empty_query_matches_all(search_corpus):
    index = build_index(search_corpus)
    page = search(index, q())
    assert page.total == index.doc_count


def test_first_clause_operator_ignored(search_corpus):
    index = build_index(search_corpus)
    as_not = search(index, q(("NOT", "legislative_period", "19")))
    as_and = search(index, q(("AND", "legislative_period", "19")))
    assert {h.id for h in as_not.hits} == {h.id for h in as_and.hits}


def test_or_unions(search_corpus):
    index = build_index(search_corpus)
    page = search(index, q(("AND", "legislative_period", "19"), ("OR", "legislative_period", "20")))
    assert page.total == 3


def test_phrase_requires_adjacency():
    records = [
        make_record(seq=1, text="Der Wandel im Klima ist messbar."),
        make_record(seq=2, text="Der Klima Wandel ist messbar."),
    ]
    index = build_index(records)
    page = search(index, q(("AND", "full_text", '"klima wandel"')))
    assert [h.id for h in page.hits] == [records[1].id]
    loose = search(index, q(("AND", "full_text", "klima wandel")))
    assert loose.total == 2


def test_all_field_unions_every_field(search_corpus):
    index = build_index(search_corpus)
    page = search(index, q(("AND", "all", "19")))
    # period 19 docs via the metadata field; no full-text hit for "19"
    assert page.total == 2
    page = search(index, q(("AND", "all", "adenauer")))
    assert page.total == 1  # speaker field


def test_date_exact_and_range(search_corpus):
    index = build_index(search_corpus)
    exact = search(index, q(("AND", "date", "2019-11-08")))
    assert exact.total == 2
    ranged = search(index, q(("AND", "date", "1949-01-01..1959-12-31")))
    assert ranged.total == 2  # periods 1 and 3 fixtures


def test_malformed_date_is_invalid_query(search_corpus):
    index = build_index(search_corpus)
    with pytest.raises(InvalidQuery):
        search(index, q(("AND", "date", "08.11.2019")))
    with pytest.raises(InvalidQuery):
        search(index, q(("AND", "date", "2020-01-01..1999-01-01")))


def test_unknown_field_and_empty_value_rejected(search_corpus):
    index = build_index(search_corpus)
    with pytest.raises(InvalidQuery):
        search(index, q(("AND", "speaker_name", "x")))
    with pytest.raises(InvalidQuery):
        search(index, q(("AND", "full_text", "   ")))


def test_page_out_of_bounds(search_corpus):
    index = build_index(search_corpus)
    with pytest.raises(InvalidQuery):
        search(index, q(("AND", "legislative_period", "19"), page=5, page_size=10))
    # page 1 is always valid, even with zero hits
    empty = search(index, q(("AND", "full_text", "nichtvorhanden")))
    assert empty.total == 0 and empty.hits == ()


def test_pagination_slices(search_corpus):
    index = build_index(search_corpus)
    all_hits = search(index, q(sort="date_asc", page_size=200)).hits
    page1 = search(index, q(sort="date_asc", page=1, page_size=2)).hits
    page2 = search(index, q(sort="date_asc", page=2, page_size=2)).hits
    assert [h.id for h in page1 + page2] == [h.id for h in all_hits[:4]]


def test_sort_contracts(search_corpus):
    index = build_index(search_corpus)
    asc = search(index, q(sort="date_asc")).hits
    assert [h.date for h in asc] == sorted(h.date for h in asc)
    desc = search(index, q(sort="date_desc")).hits
    assert [h.date for h in desc] == sorted((h.date for h in desc), reverse=True)
    scored = search(index, q(("AND", "full_text", "klimawandel migration"), ("OR", "full_text", "migration")))
    scores = [h.score for h in scored.hits]
    assert scores == sorted(scores, reverse=True)


def test_metadata_only_matches_score_zero_and_tiebreak(search_corpus):
    index = build_index(search_corpus)
    page = search(index, q(("AND", "legislative_period", "19")))
    assert all(h.score == 0.0 for h in page.hits)
    dates = [h.date for h in page.hits]
    assert dates == sorted(dates, reverse=True)


def test_bm25_prefers_higher_term_frequency():
    records = [
        make_record(seq=1, text="Migration. Noch einmal Migration und wieder Migration."),
        make_record(seq=2, text="Migration ist eines von vielen Themen hier im Saal heute."),
    ]
    index = build_index(records)
    page = search(index, q(("AND", "full_text", "migration")))
    assert [h.id for h in page.hits] == [records[0].id, records[1].id]
    assert page.hits[0].score > page.hits[1].score > 0.0


def test_identical_query_identical_order(search_corpus):
    index = build_index(search_corpus)
    query = q(("AND", "all", "migration"), ("OR", "legislative_period", "20"))
    first = search(index, query)
    second = search(index, query)
    assert first == second


def test_aggregate_topics():
    records = [
        make_record(period=19, session=1, seq=i, role=Role.PRESIDENT,
                    topic=TopicLabel("Presidency Action", 1.0))
        for i in range(1, 4)
    ]
    records.append(make_record(period=19, session=2, seq=1, topic=TopicLabel("Health", 0.8)))
    records.append(make_record(period=20, session=1, seq=1))  # unlabeled: excluded
    index = build_index(records)
    got = aggregate_topics(index)
    assert got[19]["Presidency Action"] == 3
    assert got[19]["Health"] == 1
    assert 20 not in got
    assert sum(got[19].values()) == 4


def test_aggregate_empty_index():
    assert aggregate_topics(build_index([])) == {}


def test_snapshot_roundtrip(tmp_path, search_corpus):
    index = build_index(search_corpus)
    path = save_snapshot(index, tmp_path / "snap")
    loaded = load_snapshot(tmp_path / "snap")
    assert loaded.doc_count == index.doc_count
    assert loaded.postings == index.postings
    assert loaded.doc_store == index.doc_store


def test_snapshot_rebuild_is_byte_identical(tmp_path, search_corpus):
    a = save_snapshot(build_index(search_corpus), tmp_path / "a")
    b = save_snapshot(build_index(list(reversed(search_corpus))), tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_snapshot_refuses_future_version(tmp_path, search_corpus):
    path = save_snapshot(build_index(search_corpus), tmp_path / "snap")
    data = json.loads(path.read_text())
    data["format_version"] = 99
    path.write_text(json.dumps(data))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)


def test_snapshot_detects_corruption(tmp_path, search_corpus):
    path = save_snapshot(build_index(search_corpus), tmp_path / "snap")
    data = json.loads(path.read_text())
    data["payload"]["records"][0]["text"] = "tampered"
    path.write_text(json.dumps(data))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)


def test_has_annotation_fields():
    cto = SpanAnnotation(AnnotationKind.CALL_TO_ORDER, 0, 4, annotator="r")
    inter = SpanAnnotation(AnnotationKind.INTERJECTION, 0, 4, annotator="m")
    records = [
        make_record(seq=1, role=Role.PRESIDENT, annotations=(cto, inter)),
        make_record(seq=2, annotations=(inter,)),
        make_record(seq=3),
    ]
    index = build_index(records)
    assert search(index, q(("AND", "has_call_to_order", "true"))).total == 1
    assert search(index, q(("AND", "has_interjection", "true"))).total == 2
    assert search(index, q(("AND", "has_call_to_order", "false"))).total == 2

"""Pipeline orchestration: each stage reads the previous stage's output.

Stages exchange canonical JSON-lines of export-schema records, one file
per session, so every stage is independently re-runnable and two runs
over the same input produce byte-identical artifacts.

Exit codes: 0 success, 1 data errors (missing inputs, malformed
sources, validation failures), 2 usage errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from plenum import resources
from plenum.annotate import CtoRuleSet, PartyAliasTable, annotate_records, builtin_annotators
from plenum.fetch import FetchCursor, NetworkError, RemoteFormatError, fetch_updates
from plenum.index import InvalidQuery, build_index, load_snapshot, query_from_dict, save_snapshot
from plenum.ingest import (
    MalformedXml,
    RawSessionDoc,
    SchemaMismatch,
    SourceSchema,
    dedupe_sessions,
    parse_session,
    sniff_schema,
)
from plenum.model import canonical_json, read_jsonl, validate, write_jsonl
from plenum.qlog import QueryLog
from plenum.resolve import load_tables, resolve_records
from plenum.segment import segment
from plenum.service import ServiceConfig, SnapshotHolder, create_app, export_bundle_dict


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _input_files(path: Path, suffix: str) -> list[Path]:
    if not path.exists():
        _fail(f"missing input path: {path}")
    if path.is_file():
        return [path]
    files = sorted(p for p in path.iterdir() if p.suffix == suffix and p.is_file())
    if not files:
        _fail(f"no {suffix} files under {path}")
    return files


def _jsonl_stem_records(in_dir: Path) -> list[tuple[str, list]]:
    out = []
    for path in _input_files(in_dir, ".jsonl"):
        out.append((path.stem, list(read_jsonl(path))))
    return out


@click.group()
def main() -> None:
    """Parliamentary corpus pipeline and search service."""


@main.command()
@click.argument("input_path", type=click.Path(path_type=Path))
@click.option("--schema", type=click.Choice(["germaparl", "bundestag", "auto"]), default="auto",
              show_default=True, help="Source schema; auto sniffs the root element.")
@click.option("-o", "--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--dedup/--no-dedup", default=True, show_default=True,
              help="Drop duplicate (period, session) pairs, preferring bundestag data.")
def ingest(input_path: Path, schema: str, out_dir: Path, dedup: bool) -> None:
    """Convert raw session XML files into unified record files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    sessions = []
    for path in _input_files(input_path, ".xml"):
        xml_bytes = path.read_bytes()
        try:
            doc_schema = SourceSchema(schema) if schema != "auto" else sniff_schema(xml_bytes)
            doc = RawSessionDoc(schema=doc_schema, xml_bytes=xml_bytes,
                                source_uri=path.resolve().as_uri())
            records = parse_session(doc)
        except (MalformedXml, SchemaMismatch) as exc:
            _fail(f"{path}: {exc}")
        sessions.append((doc_schema, records, path.stem))
    if dedup:
        kept = dedupe_sessions((s, r) for s, r, _ in sessions)
        kept_ids = {id(records) for records in kept}
        kept_ids.update(id(r) for _s, r, _stem in sessions if not r)  # empty sessions never collide
    else:
        kept_ids = {id(r) for _s, r, _stem in sessions}
    written = 0
    for doc_schema, records, stem in sessions:
        if id(records) not in kept_ids:
            click.echo(f"skipping duplicate session from {stem}", err=True)
            continue
        target = out_dir / f"{stem}.jsonl"
        count = write_jsonl(records, target)
        click.echo(f"{target}: {count} records")
        written += 1
    if written == 0:
        _fail("no session files written")


@main.command("segment")
@click.argument("in_dir", type=click.Path(path_type=Path))
@click.option("-o", "--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--abbreviations", type=click.Path(path_type=Path), default=None,
              help="Override the shipped abbreviation lexicon.")
def segment_cmd(in_dir: Path, out_dir: Path, abbreviations: Path | None) -> None:
    """Fill in sentence ranges for every record."""
    from dataclasses import replace

    lexicon = resources.load_abbreviations(abbreviations)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, records in _jsonl_stem_records(in_dir):
        updated = [replace(r, sentences=tuple(segment(r.text, lexicon))) for r in records]
        target = out_dir / f"{stem}.jsonl"
        write_jsonl(updated, target)
        click.echo(f"{target}: {len(updated)} records")


@main.command("annotate")
@click.argument("in_dir", type=click.Path(path_type=Path))
@click.option("-o", "--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--annotators", default="gazetteer-ner,gazetteer-ner-legal,topic-keywords",
              show_default=True, help="Comma-separated annotator ids to run.")
@click.option("--cto-rules", type=click.Path(path_type=Path), default=None,
              help="Override the shipped call-to-order rule set.")
@click.option("--workers", default=4, show_default=True)
def annotate_cmd(in_dir: Path, out_dir: Path, annotators: str, cto_rules: Path | None, workers: int) -> None:
    """Add call-to-order, entity, party-mention, and topic annotations."""
    rules = CtoRuleSet.load(cto_rules)
    registry = builtin_annotators()
    selected = []
    for annotator_id in (a.strip() for a in annotators.split(",") if a.strip()):
        if annotator_id not in registry:
            _fail(f"unknown annotator id {annotator_id!r} (available: {', '.join(sorted(registry))})")
        selected.append(registry[annotator_id])
    aliases = PartyAliasTable.load()
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, records in _jsonl_stem_records(in_dir):
        updated = annotate_records(records, rules=rules, annotators=selected,
                                   aliases=aliases, max_workers=workers)
        target = out_dir / f"{stem}.jsonl"
        write_jsonl(updated, target)
        click.echo(f"{target}: {len(updated)} records")


@main.command("resolve")
@click.argument("in_dir", type=click.Path(path_type=Path))
@click.option("-o", "--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--mp-db", type=click.Path(path_type=Path), default=None,
              help="MP master data CSV; defaults to the shipped sample database.")
def resolve_cmd(in_dir: Path, out_dir: Path, mp_db: Path | None) -> None:
    """Disambiguate speakers and normalize party references."""
    if mp_db is not None and not mp_db.exists():
        _fail(f"missing input path: {mp_db}")
    tables = load_tables(mp_db)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, records in _jsonl_stem_records(in_dir):
        updated = resolve_records(records, tables)
        target = out_dir / f"{stem}.jsonl"
        write_jsonl(updated, target)
        click.echo(f"{target}: {len(updated)} records")


@main.command("index")
@click.argument("in_dir", type=click.Path(path_type=Path))
@click.option("-o", "--snapshot-dir", type=click.Path(path_type=Path), required=True)
@click.option("--skip-validation", is_flag=True, help="Index records without invariant checks.")
def index_cmd(in_dir: Path, snapshot_dir: Path, skip_validation: bool) -> None:
    """Build the searchable snapshot from record files."""
    records = []
    for _stem, file_records in _jsonl_stem_records(in_dir):
        records.extend(file_records)
    if not skip_validation:
        for record in records:
            violations = validate(record)
            if violations:
                details = "; ".join(str(v) for v in violations)
                _fail(f"record {record.id} fails validation: {details}")
    try:
        snapshot = build_index(records)
    except Exception as exc:
        _fail(str(exc))
    path = save_snapshot(snapshot, snapshot_dir)
    click.echo(f"{path}: {snapshot.doc_count} documents")


@main.command("serve")
@click.argument("snapshot_dir", type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--port", type=int, default=None, help="Override the configured port.")
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="Optionally serve a built frontend from this directory at /.")
def serve_cmd(snapshot_dir: Path, config_path: Path | None, port: int | None, ui_dir: Path | None) -> None:
    """Load a snapshot and run the HTTP service."""
    import uvicorn

    if not snapshot_dir.exists():
        _fail(f"missing input path: {snapshot_dir}")
    config = ServiceConfig.load(config_path)
    if port is not None:
        config.port = port
    holder = SnapshotHolder(load_snapshot(snapshot_dir))
    app = create_app(holder, config)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host="0.0.0.0", port=config.port)


@main.command("export")
@click.argument("snapshot_dir", type=click.Path(path_type=Path))
@click.option("--query", "query_json", default="{}", show_default=True,
              help="Serialized query (JSON object).")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None,
              help="Output file; stdout when omitted.")
@click.option("--cap", type=int, default=None, help="Maximum records to export.")
@click.option("--truncate", is_flag=True, help="Allow capped output instead of failing.")
def export_cmd(snapshot_dir: Path, query_json: str, output: Path | None, cap: int | None, truncate: bool) -> None:
    """Export the result set of a query as one JSON subcorpus bundle."""
    if not snapshot_dir.exists():
        _fail(f"missing input path: {snapshot_dir}")
    snapshot = load_snapshot(snapshot_dir)
    try:
        query = query_from_dict(json.loads(query_json))
        bundle = export_bundle_dict(snapshot, query, cap=cap, truncate=truncate)
    except (json.JSONDecodeError, InvalidQuery) as exc:
        _fail(str(exc))
    text = canonical_json(bundle)
    if output is None:
        click.echo(text)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"{output}: {len(bundle['records'])} records", err=True)


@main.group()
def stats() -> None:
    """Usage and corpus statistics."""


@stats.command("top-terms")
@click.option("--log", "log_dir", type=click.Path(path_type=Path), required=True)
@click.option("-n", default=10, show_default=True)
@click.option("--retention-days", type=int, default=None)
def top_terms_cmd(log_dir: Path, n: int, retention_days: int | None) -> None:
    """Most frequently searched terms, sanitized."""
    if not log_dir.exists():
        _fail(f"missing input path: {log_dir}")
    if n < 1 or n > 100:
        raise click.UsageError("n must be in [1, 100]")
    ranked = QueryLog(log_dir).top_terms(n, retention_days)
    width = max((len(term) for term, _ in ranked), default=4)
    click.echo(f"{'search term'.ljust(width)}  frequency")
    for term, freq in ranked:
        click.echo(f"{term.ljust(width)}  {freq}")


@stats.command("topics")
@click.argument("snapshot_dir", type=click.Path(path_type=Path))
def topics_cmd(snapshot_dir: Path) -> None:
    """Topic distribution per legislative period."""
    from plenum.index import aggregate_topics

    if not snapshot_dir.exists():
        _fail(f"missing input path: {snapshot_dir}")
    snapshot = load_snapshot(snapshot_dir)
    aggregate = aggregate_topics(snapshot)
    click.echo(canonical_json({str(k): dict(sorted(v.items())) for k, v in sorted(aggregate.items())}))


@main.command("fetch")
@click.option("--endpoint", required=True, help="Open-data listing endpoint URL.")
@click.option("--cursor-file", type=click.Path(path_type=Path), required=True,
              help="JSON file persisting the fetch cursor between runs.")
@click.option("-o", "--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--page-size", type=int, default=50, show_default=True)
def fetch_cmd(endpoint: str, cursor_file: Path, out_dir: Path, page_size: int) -> None:
    """Fetch new session documents from the remote endpoint."""
    last_key = None
    if cursor_file.exists():
        state = json.loads(cursor_file.read_text(encoding="utf-8"))
        last_key = state.get("last_session_key")
    cursor = FetchCursor(endpoint_url=endpoint, last_session_key=last_key, page_size=page_size)
    try:
        docs, advanced = fetch_updates(cursor)
    except (NetworkError, RemoteFormatError) as exc:
        _fail(str(exc))
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        key = doc.source_uri.rsplit("#", 1)[-1]
        target = out_dir / f"{key}.xml"
        target.write_bytes(doc.xml_bytes)
        click.echo(f"{target}")
    cursor_file.write_text(
        json.dumps({"endpoint_url": endpoint, "last_session_key": advanced.last_session_key}),
        encoding="utf-8",
    )
    click.echo(f"fetched {len(docs)} new session(s)")


if __name__ == "__main__":
    main()
